//! Desk-scale runs of the limit theorems: central limit, law of large
//! numbers, iterated logarithm, and the Choquet moment condition.
//!
//! The iterated-logarithm statements are asymptotic; what runs here is a
//! banded check at finite `n` with frozen seeds.

mod convergence;
mod lil;
mod moment;

pub use convergence::{
    clt_experiment, wlln_experiment, ConvergenceRow, ConvergenceTable, REFERENCE_NX, TREND_SE,
};
pub use lil::{
    decomposition_residual, lil_experiment, lil_normalizer, log_e, log_log, CheckpointSchedule,
    ClusterEstimate, LilConfig, LilExperiment, LilPolicyResult, LilTrace,
};
pub use moment::{
    choquet_moment_check, worst_case_abs_tail, MomentCheckReport, SeriesClass, SeriesReport,
    CONVERGENT_RATIO, EXACT_TERMS, NEGLIGIBLE_INCREMENT,
};

//! Closed-form bounds on capacities and moments of partial sums, and the
//! harness that checks them against simulated capacity estimates.

mod bounds;
mod calibrate;
mod moments;
mod verify;

pub use bounds::{
    chebyshev_bound, chebyshev_constant, fuk_nagaev_bound, kolmogorov_upper_bound,
    lower_bound_exponent, proof_truncation_level, rosenthal_choquet_bound, rosenthal_moment_bound,
    smooth_indicator, MeanTerm, RosenthalVariant,
};
pub use calibrate::{calibrate, Calibration, CalibrationCell, CONSTANT_STEP};
pub use moments::MomentSummary;
pub use verify::{
    canned_config, evaluate_bound, frozen_constants, shipped_families, simulate_for, verify_bound,
    BoundName, BoundReport, CapacitySide, Direction, FrozenConstants, VerifyConfig, VerifyOutcome,
    CANNED_CONFIGS, SE_SLACK,
};

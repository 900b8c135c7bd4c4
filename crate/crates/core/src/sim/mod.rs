//! Partial sums driven by an adversary that picks each step's mean and
//! variance within the uncertainty bounds.

mod capacity;
mod family;
mod paths;
mod policy;
mod rng;

pub use capacity::{
    empirical_choquet, estimate_lower_capacity, estimate_upper_capacity, frequency,
    lower_capacity_from, simulate_family, sup_mean, upper_capacity_from, wilson_half_width,
    CapacityEstimate, Frequency, MeanEstimate, WILSON_Z,
};
pub use family::{nd_coupler, Coupling, StepChoice, StepFamily, StepShape};
pub use paths::{
    simulate_paths, simulate_paths_with, PathBatch, PathSummary, ScaledExtrema, SimOptions,
};
pub use policy::{standard_policies, AdversaryPolicy, FeedbackSurface, History, PolicyKind};
pub use rng::{NoiseSource, PolicyRng};

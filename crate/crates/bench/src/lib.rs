//! Fixtures shared by the benchmarks.

use sublinear_core::sim::StepFamily;
use sublinear_core::{DiscreteDistribution, GParams, ScenarioSet};

pub fn params() -> GParams {
    GParams::variance(0.25, 1.0).expect("valid interval")
}

pub fn two_point() -> StepFamily {
    StepFamily::two_point(0.25, 1.0).expect("valid family")
}

/// `members` distributions with `atoms` atoms each on a fixed lattice.
pub fn lattice_set(members: usize, atoms: usize) -> ScenarioSet {
    let ms = (0..members)
        .map(|m| {
            let w: Vec<f64> = (0..atoms)
                .map(|a| 1.0 + ((a * 7 + m * 3) % 5) as f64)
                .collect();
            let total: f64 = w.iter().sum();
            let pts = (0..atoms)
                .map(|a| (a as f64 - atoms as f64 / 2.0 + 0.1 * m as f64, w[a] / total))
                .collect();
            DiscreteDistribution::new(pts).expect("weights sum to one")
        })
        .collect();
    ScenarioSet::new(ms).expect("nonempty")
}

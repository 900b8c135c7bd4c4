use serde::Serialize;

use super::family::StepFamily;
use super::paths::{simulate_paths_with, PathBatch, PathSummary, SimOptions};
use super::policy::AdversaryPolicy;
use crate::error::{config, Result};

/// Normal quantile used for Wilson half-widths reported as standard errors.
pub const WILSON_Z: f64 = 1.0;

/// Half-width of the Wilson score interval at `z` for `p̂` from `n` trials.
pub fn wilson_half_width(p_hat: f64, n: usize, z: f64) -> f64 {
    let n = n as f64;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frequency {
    pub policy: String,
    pub value: f64,
    pub standard_error: f64,
    pub n_paths: usize,
}

/// Capacity of a path event estimated over a finite policy family.
///
/// The upper estimate is a max over policies, hence a lower estimate of `V`;
/// the lower estimate is an upper estimate of `v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub standard_error: f64,
    /// Index of the policy attaining the value.
    pub best_policy: usize,
    pub per_policy: Vec<Frequency>,
}

pub fn frequency<A: Fn(&PathSummary) -> bool>(batch: &PathBatch, event: A) -> Frequency {
    let hits = batch.paths.iter().filter(|p| event(p)).count();
    let value = hits as f64 / batch.n_paths as f64;
    Frequency {
        policy: batch.policy.clone(),
        value,
        standard_error: wilson_half_width(value, batch.n_paths, WILSON_Z),
        n_paths: batch.n_paths,
    }
}

/// Max over policies of the empirical frequency; lowest index wins ties.
pub fn upper_capacity_from<A: Fn(&PathSummary) -> bool>(
    batches: &[PathBatch],
    event: A,
) -> CapacityEstimate {
    assert!(!batches.is_empty(), "policy family must be nonempty");
    let per_policy: Vec<Frequency> = batches.iter().map(|b| frequency(b, &event)).collect();
    let mut best = 0;
    for (i, f) in per_policy.iter().enumerate() {
        if f.value > per_policy[best].value {
            best = i;
        }
    }
    CapacityEstimate {
        value: per_policy[best].value,
        standard_error: per_policy[best].standard_error,
        best_policy: best,
        per_policy,
    }
}

/// `1 - upper(Aᶜ)` on the same batches.
pub fn lower_capacity_from<A: Fn(&PathSummary) -> bool>(
    batches: &[PathBatch],
    event: A,
) -> CapacityEstimate {
    let comp = upper_capacity_from(batches, |p| !event(p));
    CapacityEstimate {
        value: 1.0 - comp.value,
        standard_error: comp.standard_error,
        best_policy: comp.best_policy,
        per_policy: comp
            .per_policy
            .into_iter()
            .map(|f| Frequency {
                value: 1.0 - f.value,
                ..f
            })
            .collect(),
    }
}

/// Simulates every policy of the family on the same noise streams.
pub fn simulate_family(
    family: &StepFamily,
    policies: &[AdversaryPolicy],
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    options: &SimOptions,
) -> Result<Vec<PathBatch>> {
    if policies.is_empty() {
        return config("policy family must be nonempty");
    }
    policies
        .iter()
        .map(|p| simulate_paths_with(family, p, n_steps, n_paths, seed, options))
        .collect()
}

pub fn estimate_upper_capacity<A: Fn(&PathSummary) -> bool>(
    event: A,
    family: &StepFamily,
    policies: &[AdversaryPolicy],
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    let batches = simulate_family(
        family,
        policies,
        n_steps,
        n_paths,
        seed,
        &SimOptions::default(),
    )?;
    Ok(upper_capacity_from(&batches, event))
}

pub fn estimate_lower_capacity<A: Fn(&PathSummary) -> bool>(
    event: A,
    family: &StepFamily,
    policies: &[AdversaryPolicy],
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    let batches = simulate_family(
        family,
        policies,
        n_steps,
        n_paths,
        seed,
        &SimOptions::default(),
    )?;
    Ok(lower_capacity_from(&batches, event))
}

/// `max_policy mean(f)` with the sample standard error of the chosen policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub best_policy: usize,
    pub per_policy: Vec<(String, f64, f64)>,
}

pub fn sup_mean<F: Fn(&PathSummary) -> f64>(batches: &[PathBatch], f: F) -> MeanEstimate {
    assert!(!batches.is_empty(), "policy family must be nonempty");
    let per_policy: Vec<(String, f64, f64)> = batches
        .iter()
        .map(|b| {
            let n = b.paths.len() as f64;
            let vals: Vec<f64> = b.paths.iter().map(&f).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            (b.policy.clone(), mean, (var / n).sqrt())
        })
        .collect();
    let mut best = 0;
    for (i, p) in per_policy.iter().enumerate() {
        if p.1 > per_policy[best].1 {
            best = i;
        }
    }
    MeanEstimate {
        value: per_policy[best].1,
        standard_error: per_policy[best].2,
        best_policy: best,
        per_policy,
    }
}

/// `∫₀^∞ max_policy freq(f ≥ t) dt` for `f ≥ 0`: the Choquet integral
/// against the empirical upper capacity, exact for the empirical laws.
pub fn empirical_choquet<F: Fn(&PathSummary) -> f64>(batches: &[PathBatch], f: F) -> f64 {
    let sorted: Vec<Vec<f64>> = batches
        .iter()
        .map(|b| {
            let mut v: Vec<f64> = b.paths.iter().map(|p| f(p).max(0.0)).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let mut levels: Vec<f64> = sorted
        .iter()
        .flatten()
        .copied()
        .filter(|&v| v > 0.0)
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let survival = |t: f64| {
        sorted
            .iter()
            .map(|v| (v.len() - v.partition_point(|&x| x < t)) as f64 / v.len() as f64)
            .fold(0.0, f64::max)
    };
    let mut total = 0.0;
    let mut prev = 0.0;
    for &l in &levels {
        total += (l - prev) * survival(l);
        prev = l;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnormal::GParams;
    use crate::sim::{simulate_paths, standard_policies};

    #[test]
    fn wilson_limits() {
        assert!(wilson_half_width(0.0, 100, 1.0) > 0.0);
        let w = wilson_half_width(0.5, 10_000, 1.0);
        assert!((w - 0.005).abs() < 1e-5);
    }

    #[test]
    fn sure_event_and_symmetry() {
        let fam = StepFamily::two_point(1.0, 1.0).unwrap();
        let pol = standard_policies(&fam.params);
        let e = estimate_upper_capacity(|_| true, &fam, &pol, 10, 100, 1).unwrap();
        assert_eq!(e.value, 1.0);
        let e = estimate_upper_capacity(|p| p.final_sum >= 0.0, &fam, &pol, 99, 20_000, 5).unwrap();
        assert!((e.value - 0.5).abs() < 3.0 * e.standard_error, "{e:?}");
        let l = estimate_lower_capacity(|p| p.final_sum >= 0.0, &fam, &pol, 99, 20_000, 5).unwrap();
        assert!((l.value - e.value).abs() < 1e-12);
    }

    #[test]
    fn sandwich_and_complement_identity() {
        let fam = StepFamily::two_point(0.25, 1.0).unwrap();
        let pol = standard_policies(&fam.params);
        let b = simulate_family(&fam, &pol, 50, 2000, 9, &SimOptions::default()).unwrap();
        for x in [0.0, 2.0, 5.0] {
            let ev = |p: &PathSummary| p.final_sum.abs() <= x;
            let up = upper_capacity_from(&b, ev);
            let lo = lower_capacity_from(&b, ev);
            assert!(lo.value <= up.value);
            let comp = upper_capacity_from(&b, |p| !ev(p));
            assert_eq!(lo.value, 1.0 - comp.value);
            // min over policies of the frequency
            let min = b
                .iter()
                .map(|bb| frequency(bb, ev).value)
                .fold(1.0, f64::min);
            assert!((lo.value - min).abs() < 1e-15);
        }
        // enlarging the family never lowers the upper estimate
        let ev = |p: &PathSummary| p.final_sum >= 3.0;
        let small = upper_capacity_from(&b[..2], ev);
        let big = upper_capacity_from(&b, ev);
        assert!(big.value >= small.value);
    }

    #[test]
    fn single_gaussian_step_variance() {
        let fam = StepFamily::new(
            crate::sim::StepShape::Gaussian,
            GParams::variance(0.25, 1.0).unwrap(),
        )
        .unwrap();
        let b = simulate_paths(&fam, &AdversaryPolicy::constant(0.0, 1.0), 1, 100_000, 3).unwrap();
        let n = b.n_paths as f64;
        let m = b.final_sums().sum::<f64>() / n;
        let v = b.final_sums().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        // SE of the sample variance of a normal: σ² √(2/(n-1))
        let se = (2.0 / (n - 1.0)).sqrt();
        assert!((v - 1.0).abs() < 3.0 * se, "{v}");
    }

    #[test]
    fn choquet_of_single_policy_is_mean() {
        let fam = StepFamily::two_point(1.0, 1.0).unwrap();
        let b = simulate_paths(&fam, &AdversaryPolicy::constant(0.0, 1.0), 20, 500, 4).unwrap();
        let c = empirical_choquet(std::slice::from_ref(&b), |p| p.final_sum.max(0.0).powi(2));
        let m = b
            .paths
            .iter()
            .map(|p| p.final_sum.max(0.0).powi(2))
            .sum::<f64>()
            / 500.0;
        assert!((c - m).abs() < 1e-9, "{c} vs {m}");
    }
}

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::family::{Coupling, StepChoice, StepFamily};
use super::policy::{AdversaryPolicy, History};
use super::rng::{NoiseSource, PolicyRng};
use crate::error::{config, Error, Result};
use crate::ineq::MomentSummary;

/// Extra per-path output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimOptions {
    /// Step indices (strictly increasing, within `1..=n_steps`) at which `S_k` is recorded.
    pub checkpoints: Vec<usize>,
    /// Keep every `S_k`; memory grows as `n_paths · n_steps`.
    pub keep_sums: bool,
    /// Track `min`/`max` of `S_k · weights[k]` over `k ∈ [start, n_steps]` for each start.
    pub scaled_extrema: Option<ScaledExtrema>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledExtrema {
    /// Indexed by `k`, at least `n_steps + 1` long.
    pub weights: Arc<[f64]>,
    pub window_starts: Vec<usize>,
}

/// Streaming folds of one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub final_sum: f64,
    /// `max_k X_k`.
    pub max_step: f64,
    /// `max_{0≤k≤n} S_k`.
    pub max_sum: f64,
    /// `min_{0≤k≤n} S_k`.
    pub min_sum: f64,
    /// `max_{k≤n} |S_k|`.
    pub max_abs_sum: f64,
    /// `Σ (μ_k² + σ_k²)` over the choices actually made.
    pub chosen_second_moment: f64,
    pub checkpoint_sums: Vec<f64>,
    /// `(min, max)` of the weighted sums per window of [`ScaledExtrema`].
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scaled_extrema: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sums: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathBatch {
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub policy: String,
    pub checkpoints: Vec<usize>,
    pub moments: MomentSummary,
    pub paths: Vec<PathSummary>,
}

impl PathBatch {
    pub fn final_sums(&self) -> impl Iterator<Item = f64> + '_ {
        self.paths.iter().map(|p| p.final_sum)
    }
}

/// Simulates `n_paths` independent paths of `S_k = X_1 + … + X_k`.
pub fn simulate_paths(
    family: &StepFamily,
    policy: &AdversaryPolicy,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathBatch> {
    simulate_paths_with(
        family,
        policy,
        n_steps,
        n_paths,
        seed,
        &SimOptions::default(),
    )
}

pub fn simulate_paths_with(
    family: &StepFamily,
    policy: &AdversaryPolicy,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    options: &SimOptions,
) -> Result<PathBatch> {
    if n_steps < 1 || n_paths < 1 {
        return config(format!(
            "need n_steps ≥ 1 and n_paths ≥ 1, got {n_steps} and {n_paths}"
        ));
    }
    family.validate()?;
    if !family.shape.finite_variance() {
        return Err(Error::Rejected(format!(
            "{} has infinite variance",
            family.shape.tag()
        )));
    }
    policy.validate()?;
    policy.check_static(family)?;
    let cps = &options.checkpoints;
    if cps.windows(2).any(|w| w[0] >= w[1])
        || cps.first().is_some_and(|&c| c < 1)
        || cps.last().is_some_and(|&c| c > n_steps)
    {
        return config("checkpoints must be strictly increasing within 1..=n_steps");
    }
    if let Some(se) = &options.scaled_extrema {
        if se.weights.len() <= n_steps || se.window_starts.iter().any(|&w| w < 1 || w > n_steps) {
            return config("scaled extrema need a weight per step and windows within 1..=n_steps");
        }
    }
    let paths = (0..n_paths)
        .into_par_iter()
        .with_min_len(16)
        .map(|i| run_path(family, policy, n_steps, seed, i as u64, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathBatch {
        n_steps,
        n_paths,
        seed,
        policy: policy.label.clone(),
        checkpoints: cps.clone(),
        moments: family.moment_summary(n_steps, 2.0),
        paths,
    })
}

fn run_path(
    family: &StepFamily,
    policy: &AdversaryPolicy,
    n_steps: usize,
    seed: u64,
    path: u64,
    options: &SimOptions,
) -> Result<PathSummary> {
    let mut noise = NoiseSource::for_path(seed, path);
    let sampler = family.shape.sampler();
    let mut prng = PolicyRng::new(seed, policy.rng_stream_id, path);
    let coupled = family.coupling != Coupling::Independent;
    let partner_sign = if family.coupling == Coupling::Antithetic {
        -1.0
    } else {
        1.0
    };
    let mut s = 0.0;
    let mut last = 0.0;
    let mut max_step = f64::NEG_INFINITY;
    let (mut max_sum, mut min_sum, mut max_abs) = (0.0f64, 0.0f64, 0.0f64);
    let mut second = 0.0;
    let mut cp_vals = Vec::with_capacity(options.checkpoints.len());
    let mut next_cp = options.checkpoints.iter().peekable();
    let mut sums = options.keep_sums.then(|| Vec::with_capacity(n_steps));
    let mut pair: Option<(StepChoice, f64, f64)> = None;
    let (weights, starts): (&[f64], &[usize]) = match &options.scaled_extrema {
        Some(se) => (&se.weights, &se.window_starts),
        None => (&[], &[]),
    };
    let mut extrema = vec![(f64::INFINITY, f64::NEG_INFINITY); starts.len()];
    for k in 1..=n_steps {
        let x = match pair.take() {
            // second step of a coupled pair
            Some((c, sd, z)) => {
                second += c.mean * c.mean + c.variance;
                family.apply(&c, sd, partner_sign * z)
            }
            None => {
                let c = policy.decide(
                    &History {
                        step: k,
                        n_steps,
                        sum: s,
                        last,
                    },
                    &mut prng,
                );
                if !family.admits(&c) {
                    return Err(Error::InvariantBreach(format!(
                        "policy `{}` chose {c:?} at step {k} of path {path}, outside the family bounds",
                        policy.label
                    )));
                }
                second += c.mean * c.mean + c.variance;
                let sd = c.variance.sqrt();
                let (x, z) = family.draw(&sampler, &c, sd, &mut noise);
                if coupled {
                    pair = Some((c, sd, z));
                }
                x
            }
        };
        s += x;
        last = x;
        max_step = max_step.max(x);
        max_sum = max_sum.max(s);
        min_sum = min_sum.min(s);
        max_abs = max_abs.max(s.abs());
        if !starts.is_empty() {
            let w = s * weights[k];
            for (e, &st) in extrema.iter_mut().zip(starts) {
                if k >= st {
                    e.0 = e.0.min(w);
                    e.1 = e.1.max(w);
                }
            }
        }
        if let Some(v) = sums.as_mut() {
            v.push(s);
        }
        if next_cp.peek() == Some(&&k) {
            cp_vals.push(s);
            next_cp.next();
        }
    }
    Ok(PathSummary {
        final_sum: s,
        max_step,
        max_sum,
        min_sum,
        max_abs_sum: max_abs,
        chosen_second_moment: second,
        checkpoint_sums: cp_vals,
        scaled_extrema: extrema,
        sums,
    })
}

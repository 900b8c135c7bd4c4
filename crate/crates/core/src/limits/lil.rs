use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::sim::{
    lower_capacity_from, simulate_paths_with, upper_capacity_from, AdversaryPolicy,
    CapacityEstimate, PathBatch, ScaledExtrema, SimOptions, StepFamily,
};

/// `log x = ln(x ∨ e)`.
pub fn log_e(x: f64) -> f64 {
    x.max(std::f64::consts::E).ln()
}

/// `log log x` with the `ln(· ∨ e)` convention at both levels.
pub fn log_log(x: f64) -> f64 {
    log_e(log_e(x))
}

/// `a_n = √(2 n log log n)`.
pub fn lil_normalizer(n: f64) -> f64 {
    (2.0 * n * log_log(n)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckpointSchedule {
    /// `⌈r^j⌉` for `j = 0, 1, …`, deduplicated, plus `n_max`.
    Geometric {
        ratio: f64,
    },
    /// `k^k` for `k = 1, 2, …` up to `n_max`.
    PowerTower {},
    Explicit {
        points: Vec<usize>,
    },
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        CheckpointSchedule::Geometric { ratio: 1.05 }
    }
}

impl CheckpointSchedule {
    pub fn points(&self, n_max: usize) -> Result<Vec<usize>> {
        if n_max < 1 {
            return config("n_max must be at least 1");
        }
        let mut pts = match self {
            CheckpointSchedule::Geometric { ratio } => {
                if !(*ratio > 1.0 && ratio.is_finite()) {
                    return config(format!("geometric ratio must exceed 1, got {ratio}"));
                }
                let mut v = Vec::new();
                let mut x = 1.0f64;
                while x.ceil() < n_max as f64 {
                    v.push(x.ceil() as usize);
                    x *= ratio;
                }
                v.push(n_max);
                v
            }
            CheckpointSchedule::PowerTower {} => {
                let mut v = Vec::new();
                for k in 1u32.. {
                    let n = (k as u64).checked_pow(k);
                    match n {
                        Some(n) if n <= n_max as u64 => v.push(n as usize),
                        _ => break,
                    }
                }
                v
            }
            CheckpointSchedule::Explicit { points } => {
                if points.iter().any(|&p| p < 1 || p > n_max) {
                    return config("explicit checkpoints must lie in 1..=n_max");
                }
                points.clone()
            }
        };
        pts.sort_unstable();
        pts.dedup();
        Ok(pts)
    }
}

/// Residual of the two-term recombination
/// `S_{n_k}/a_{n_k} = (S_{n_k} - S_{n_{k-1}})/√(2(n_k - n_{k-1}) log log n_k) · √(1 - n_{k-1}/n_k)
///                  + S_{n_{k-1}}/a_{n_{k-1}} · a_{n_{k-1}}/a_{n_k}`,
/// maximised over consecutive checkpoints.
pub fn decomposition_residual(ns: &[usize], sums: &[f64]) -> f64 {
    assert_eq!(ns.len(), sums.len());
    let mut worst = 0.0f64;
    for k in 1..ns.len() {
        let (n0, n1) = (ns[k - 1] as f64, ns[k] as f64);
        let (s0, s1) = (sums[k - 1], sums[k]);
        let (a0, a1) = (lil_normalizer(n0), lil_normalizer(n1));
        let direct = s1 / a1;
        let first = (s1 - s0) / (2.0 * (n1 - n0) * log_log(n1)).sqrt() * (1.0 - n0 / n1).sqrt();
        let second = s0 / a0 * (a0 / a1);
        worst = worst.max((direct - (first + second)).abs() / direct.abs().max(1.0));
    }
    worst
}

fn default_n_max() -> usize {
    1_000_000
}
fn default_paths() -> usize {
    200
}
fn default_band() -> f64 {
    0.15
}
fn default_burn_in() -> usize {
    100
}
fn default_bin() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LilConfig {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub schedule: CheckpointSchedule,
    /// Slack around `σ̄` and inside `σ̲` in the verdicts.
    #[serde(default = "default_band")]
    pub band: f64,
    /// Running extrema of `S_n/a_n` are taken over `n ≥ burn_in`.
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Width of the visit bins in the tail window.
    #[serde(default = "default_bin")]
    pub bin_width: f64,
    /// `[max_lo, max_hi]` band for the running maximum, in units of `σ̄`.
    #[serde(default = "default_max_band")]
    pub max_band: (f64, f64),
    /// Hard ceiling for any running maximum, in units of `σ̄`.
    #[serde(default = "default_ceiling")]
    pub ceiling: f64,
    /// Fraction of paths that must fall in `max_band`.
    #[serde(default = "default_fraction")]
    pub required_fraction: f64,
}

fn default_max_band() -> (f64, f64) {
    (0.8, 1.1)
}
fn default_ceiling() -> f64 {
    1.15
}
fn default_fraction() -> f64 {
    0.9
}

impl LilConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            n_max: default_n_max(),
            n_paths: default_paths(),
            seed,
            schedule: CheckpointSchedule::default(),
            band: default_band(),
            burn_in: default_burn_in(),
            bin_width: default_bin(),
            max_band: default_max_band(),
            ceiling: default_ceiling(),
            required_fraction: default_fraction(),
        }
    }

    fn tail_start(&self) -> usize {
        (self.n_max / 10).max(1)
    }
}

/// `S_n/a_n` along one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LilTrace {
    pub path: usize,
    /// `(n, S_n/a_n)` at the checkpoints.
    pub checkpoints: Vec<(usize, f64)>,
    /// Extrema of `S_n/a_n` over every `n ≥ burn_in`.
    pub running_max: f64,
    pub running_min: f64,
}

/// Cluster interval of `S_n/a_n` over the tail window `[n_max/10, n_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterEstimate {
    pub window: (usize, usize),
    pub liminf: f64,
    pub limsup: f64,
    /// Left edges of the bins of width `bin_width` visited at tail-window checkpoints.
    pub visited_bins: Vec<f64>,
    pub outer_target: (f64, f64),
    pub inner_target: (f64, f64),
    /// `[liminf, limsup] ⊆ [-σ̄ - band, σ̄ + band]`.
    pub within_outer: bool,
    /// `[liminf, limsup] ⊇ [-σ̲ + band, σ̲ - band]`.
    pub covers_inner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LilPolicyResult {
    pub policy: String,
    pub traces: Vec<LilTrace>,
    pub clusters: Vec<ClusterEstimate>,
    /// Fraction of paths whose running maximum lies in `max_band · σ̄`.
    pub fraction_max_in_band: f64,
    /// The same fraction for the maximum over the tail window only.
    pub fraction_tail_max_in_band: f64,
    /// Median running maximum.
    pub median_running_max: f64,
    pub largest_running_max: f64,
    pub fraction_within_outer: f64,
    pub fraction_covers_inner: f64,
    /// Worst residual of the checkpoint recombination over all paths.
    pub decomposition_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LilExperiment {
    pub family: String,
    pub config: LilConfig,
    pub sigma_upper: f64,
    pub sigma_lower: f64,
    pub per_policy: Vec<LilPolicyResult>,
    /// Upper and lower capacities of "running max in band", over the policy family.
    pub band_capacity_upper: CapacityEstimate,
    pub band_capacity_lower: CapacityEstimate,
    /// Per policy: at least `required_fraction` in band and nothing above the ceiling.
    pub band_holds: bool,
    /// Per policy: every path's cluster interval passes the sandwich.
    pub sandwich_holds: bool,
}

pub fn lil_experiment(
    family: &StepFamily,
    policies: &[AdversaryPolicy],
    cfg: &LilConfig,
) -> Result<LilExperiment> {
    family.validate()?;
    if !family.is_centered() {
        return Err(Error::Rejected(format!(
            "{} has nonzero means; the iterated-logarithm statements need E[X] = E[-X] = 0",
            family.tag()
        )));
    }
    if !family.shape.finite_variance() {
        return Err(Error::Rejected(format!(
            "{} has infinite variance",
            family.shape.tag()
        )));
    }
    if policies.is_empty() {
        return config("need at least one policy");
    }
    if cfg.n_paths < 1 || cfg.burn_in < 1 || cfg.burn_in > cfg.n_max {
        return config("need n_paths ≥ 1 and 1 ≤ burn_in ≤ n_max");
    }
    if !(cfg.band >= 0.0
        && cfg.bin_width > 0.0
        && cfg.required_fraction >= 0.0
        && cfg.required_fraction <= 1.0)
    {
        return config("band, bin_width and required_fraction out of range");
    }
    let points = cfg.schedule.points(cfg.n_max)?;
    let weights: Arc<[f64]> = (0..=cfg.n_max)
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                1.0 / lil_normalizer(n as f64)
            }
        })
        .collect();
    let tail = cfg.tail_start();
    let options = SimOptions {
        checkpoints: points.clone(),
        keep_sums: false,
        scaled_extrema: Some(ScaledExtrema {
            weights,
            window_starts: vec![cfg.burn_in, tail],
        }),
    };
    let su = family.params.sigma_upper();
    let sl = family.params.sigma_lower();
    let mut batches = Vec::with_capacity(policies.len());
    let mut per_policy = Vec::with_capacity(policies.len());
    for pol in policies {
        let batch = simulate_paths_with(family, pol, cfg.n_max, cfg.n_paths, cfg.seed, &options)?;
        per_policy.push(summarize(&batch, &points, cfg, su, sl, tail));
        batches.push(batch);
    }
    let in_band = |p: &crate::sim::PathSummary| {
        let m = p.scaled_extrema[0].1;
        m >= cfg.max_band.0 * su && m <= cfg.max_band.1 * su
    };
    let band_capacity_upper = upper_capacity_from(&batches, in_band);
    let band_capacity_lower = lower_capacity_from(&batches, in_band);
    let band_holds = per_policy.iter().all(|r| {
        r.fraction_max_in_band >= cfg.required_fraction && r.largest_running_max <= cfg.ceiling * su
    });
    let sandwich_holds = per_policy
        .iter()
        .all(|r| r.fraction_within_outer == 1.0 && r.fraction_covers_inner == 1.0);
    Ok(LilExperiment {
        family: family.tag(),
        config: cfg.clone(),
        sigma_upper: su,
        sigma_lower: sl,
        per_policy,
        band_capacity_upper,
        band_capacity_lower,
        band_holds,
        sandwich_holds,
    })
}

fn summarize(
    batch: &PathBatch,
    points: &[usize],
    cfg: &LilConfig,
    su: f64,
    sl: f64,
    tail: usize,
) -> LilPolicyResult {
    let outer = (-su - cfg.band, su + cfg.band);
    let inner = (-sl + cfg.band, sl - cfg.band);
    let mut traces = Vec::with_capacity(batch.paths.len());
    let mut clusters = Vec::with_capacity(batch.paths.len());
    let mut residual = 0.0f64;
    for (i, p) in batch.paths.iter().enumerate() {
        let checkpoints: Vec<(usize, f64)> = points
            .iter()
            .zip(&p.checkpoint_sums)
            .map(|(&n, &s)| (n, s / lil_normalizer(n as f64)))
            .collect();
        residual = residual.max(decomposition_residual(points, &p.checkpoint_sums));
        let (lo, hi) = p.scaled_extrema[1];
        let mut bins: Vec<f64> = checkpoints
            .iter()
            .filter(|(n, _)| *n >= tail)
            .map(|(_, v)| (v / cfg.bin_width).floor() * cfg.bin_width)
            .collect();
        bins.sort_by(f64::total_cmp);
        bins.dedup();
        clusters.push(ClusterEstimate {
            window: (tail, cfg.n_max),
            liminf: lo,
            limsup: hi,
            visited_bins: bins,
            outer_target: outer,
            inner_target: inner,
            within_outer: lo >= outer.0 && hi <= outer.1,
            covers_inner: inner.0 > inner.1 || (lo <= inner.0 && hi >= inner.1),
        });
        let (rmin, rmax) = p.scaled_extrema[0];
        traces.push(LilTrace {
            path: i,
            checkpoints,
            running_max: rmax,
            running_min: rmin,
        });
    }
    let n = traces.len() as f64;
    let band = |m: f64| m >= cfg.max_band.0 * su && m <= cfg.max_band.1 * su;
    let in_band = traces.iter().filter(|t| band(t.running_max)).count();
    let tail_in_band = clusters.iter().filter(|c| band(c.limsup)).count();
    let mut maxima: Vec<f64> = traces.iter().map(|t| t.running_max).collect();
    maxima.sort_by(f64::total_cmp);
    LilPolicyResult {
        policy: batch.policy.clone(),
        fraction_max_in_band: in_band as f64 / n,
        fraction_tail_max_in_band: tail_in_band as f64 / n,
        median_running_max: maxima[maxima.len() / 2],
        largest_running_max: traces
            .iter()
            .map(|t| t.running_max)
            .fold(f64::NEG_INFINITY, f64::max),
        fraction_within_outer: clusters.iter().filter(|c| c.within_outer).count() as f64 / n,
        fraction_covers_inner: clusters.iter().filter(|c| c.covers_inner).count() as f64 / n,
        decomposition_residual: residual,
        traces,
        clusters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnormal::GParams;

    #[test]
    fn normalizer_convention() {
        let e = std::f64::consts::E;
        assert_eq!(lil_normalizer(e), (2.0 * e).sqrt());
        assert_eq!(log_log(1.0), 1.0);
        assert_eq!(log_log(10.0), 1.0);
        let mut prev = lil_normalizer(3.0);
        for n in 4..5000 {
            let a = lil_normalizer(n as f64);
            assert!(a > prev, "not increasing at {n}");
            prev = a;
        }
    }

    #[test]
    fn schedules() {
        let g = CheckpointSchedule::default().points(1_000_000).unwrap();
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 1_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.len() > 200 && g.len() < 300, "{}", g.len());
        let t = CheckpointSchedule::PowerTower {}.points(1_000_000).unwrap();
        assert_eq!(t, vec![1, 4, 27, 256, 3125, 46656, 823543]);
        assert!(CheckpointSchedule::Geometric { ratio: 1.0 }
            .points(10)
            .is_err());
        assert!(CheckpointSchedule::Explicit { points: vec![0] }
            .points(10)
            .is_err());
    }

    #[test]
    fn recombination_is_exact() {
        let ns = [1, 4, 27, 256, 3125];
        let sums = [1.0, -2.0, 5.0, 17.0, -40.0];
        assert!(decomposition_residual(&ns, &sums) < 1e-12);
    }

    #[test]
    fn zero_steps_give_zero_trace() {
        let fam = StepFamily::two_point(0.0, 0.0).unwrap();
        let mut cfg = LilConfig::new(3);
        cfg.n_max = 2000;
        cfg.n_paths = 4;
        let r = lil_experiment(&fam, &[AdversaryPolicy::constant(0.0, 0.0)], &cfg).unwrap();
        for t in &r.per_policy[0].traces {
            assert!(t.checkpoints.iter().all(|(_, v)| *v == 0.0));
            assert_eq!(t.running_max, 0.0);
        }
    }

    #[test]
    fn nonzero_means_rejected() {
        let fam = StepFamily::new(
            crate::sim::StepShape::TwoPoint,
            GParams::new(1.0, 1.0, 0.0, 0.1).unwrap(),
        )
        .unwrap();
        let cfg = LilConfig::new(1);
        let err = lil_experiment(&fam, &[AdversaryPolicy::constant(0.0, 1.0)], &cfg).unwrap_err();
        assert!(matches!(err, Error::Rejected(_)));
    }
}

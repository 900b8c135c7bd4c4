use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::bounds::{
    chebyshev_bound, chebyshev_constant, fuk_nagaev_bound, kolmogorov_upper_bound,
    lower_bound_exponent, proof_truncation_level, rosenthal_choquet_bound, rosenthal_moment_bound,
    RosenthalVariant,
};
use crate::config::{build_policies, PolicySpec};
use crate::error::{config, Error, Result};
use crate::gnormal::GParams;
use crate::limits::log_log;
use crate::sim::{
    empirical_choquet, frequency, lower_capacity_from, simulate_family, sup_mean,
    upper_capacity_from, PathBatch, SimOptions, StepFamily, StepShape,
};

/// Multiple of the standard error allowed before a bound counts as violated.
pub const SE_SLACK: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundName {
    Kolmogorov,
    FukNagaev,
    Chebyshev,
    RosenthalChoquet,
    RosenthalMoment,
    LowerBound,
}

impl BoundName {
    pub const ALL: [BoundName; 6] = [
        BoundName::Kolmogorov,
        BoundName::FukNagaev,
        BoundName::Chebyshev,
        BoundName::RosenthalChoquet,
        BoundName::RosenthalMoment,
        BoundName::LowerBound,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundName::Kolmogorov => "kolmogorov",
            BoundName::FukNagaev => "fuk-nagaev",
            BoundName::Chebyshev => "chebyshev",
            BoundName::RosenthalChoquet => "rosenthal-choquet",
            BoundName::RosenthalMoment => "rosenthal-moment",
            BoundName::LowerBound => "lower-bound",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown bound `{s}`")))
    }
}

/// Whether the analytic value bounds the capacity from above or below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Upper,
    Lower,
}

/// Capacity used by the lower-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacitySide {
    /// `v` with `σ̲`.
    #[default]
    Lower,
    /// `V` with `σ̄`.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub direction: Direction,
    pub inputs: BTreeMap<String, f64>,
    /// Policy that came closest to violating the bound.
    pub policy: String,
    pub analytic_value: f64,
    pub empirical_estimate: f64,
    pub standard_error: f64,
    /// `empirical ≤ analytic + 3·SE` for upper bounds, `empirical ≥ analytic - 3·SE` for lower ones.
    pub dominated: bool,
}

impl BoundReport {
    fn new(
        name: BoundName,
        direction: Direction,
        inputs: &[(&str, f64)],
        policy: &str,
        analytic: f64,
        empirical: f64,
        se: f64,
    ) -> Self {
        let dominated = match direction {
            Direction::Upper => empirical <= analytic + SE_SLACK * se,
            Direction::Lower => empirical >= analytic - SE_SLACK * se,
        };
        Self {
            bound_name: name.as_str().into(),
            direction,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            policy: policy.into(),
            analytic_value: analytic,
            empirical_estimate: empirical,
            standard_error: se,
            dominated,
        }
    }

    /// Signed distance to violation in units of the allowed slack; negative when violated.
    pub fn margin(&self) -> f64 {
        match self.direction {
            Direction::Upper => {
                self.analytic_value + SE_SLACK * self.standard_error - self.empirical_estimate
            }
            Direction::Lower => {
                self.empirical_estimate - self.analytic_value + SE_SLACK * self.standard_error
            }
        }
    }
}

fn default_x() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 3.0]
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_two() -> f64 {
    2.0
}
fn default_eps() -> f64 {
    0.5
}
fn default_variant() -> RosenthalVariant {
    RosenthalVariant::Independent
}

/// One bound-verification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub bound: BoundName,
    pub family: StepFamily,
    /// Empty means the standard endpoint family.
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Thresholds `x` in units of `√B_n`.
    #[serde(default = "default_x")]
    pub x_scaled: Vec<f64>,
    /// Kolmogorov truncation levels `y`.
    #[serde(default)]
    pub y: Vec<f64>,
    /// Also use `y = ρδx` from the proof at every `x`.
    #[serde(default = "default_true")]
    pub proof_y: bool,
    #[serde(default = "default_one")]
    pub delta: f64,
    #[serde(default = "default_two")]
    pub p: f64,
    /// Overrides the frozen constant (`C_p`, or `C_2` for the Chebyshev form).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default = "default_variant")]
    pub variant: RosenthalVariant,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    /// Sample sizes for the lower-bound check; defaults to `[n_steps]`.
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub side: CapacitySide,
    /// Warn when the reported standard errors exceed this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_se: Option<f64>,
}

impl VerifyConfig {
    pub fn new(
        bound: BoundName,
        family: StepFamily,
        n_steps: usize,
        n_paths: usize,
        seed: u64,
    ) -> Self {
        Self {
            bound,
            family,
            policies: vec![],
            n_steps,
            n_paths,
            seed,
            x_scaled: default_x(),
            y: vec![],
            proof_y: true,
            delta: 1.0,
            p: 2.0,
            constant: None,
            variant: RosenthalVariant::Independent,
            b: 0.0,
            epsilon: 0.5,
            n_list: vec![],
            side: CapacitySide::Lower,
            target_se: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutcome {
    pub bound: BoundName,
    pub family: String,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub policies: Vec<String>,
    /// Constant used, if the bound has one.
    pub constant: Option<f64>,
    pub reports: Vec<BoundReport>,
    pub warnings: Vec<String>,
    pub all_dominated: bool,
}

/// Constants calibrated once on the shipped families and frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenConstants {
    pub calibration_seed: u64,
    pub calibration_paths: usize,
    pub chebyshev_c2: f64,
    pub fuk_nagaev: BTreeMap<String, f64>,
    pub rosenthal_choquet: BTreeMap<String, f64>,
    pub rosenthal_independent: BTreeMap<String, f64>,
    pub rosenthal_nd_max: BTreeMap<String, f64>,
}

pub(crate) fn p_key(p: f64) -> String {
    format!("{p}")
}

impl FrozenConstants {
    /// The constant a bound uses at order `p`, if it has one.
    pub fn lookup(
        &self,
        bound: BoundName,
        p: f64,
        variant: RosenthalVariant,
    ) -> Result<Option<f64>> {
        let table = match bound {
            BoundName::Kolmogorov | BoundName::LowerBound => return Ok(None),
            BoundName::Chebyshev => return Ok(Some(self.chebyshev_c2)),
            BoundName::FukNagaev => &self.fuk_nagaev,
            BoundName::RosenthalChoquet => &self.rosenthal_choquet,
            BoundName::RosenthalMoment => match variant {
                RosenthalVariant::Independent => &self.rosenthal_independent,
                RosenthalVariant::NdMax => &self.rosenthal_nd_max,
            },
        };
        table.get(&p_key(p)).copied().map(Some).ok_or_else(|| {
            Error::Config(format!(
                "no frozen {} constant for p = {p}; pass one explicitly",
                bound.as_str()
            ))
        })
    }
}

const GOLDEN_CONSTANTS: &str = include_str!("../../golden/constants.json");

pub fn frozen_constants() -> &'static FrozenConstants {
    static CELL: OnceLock<FrozenConstants> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(GOLDEN_CONSTANTS).expect("golden constants parse"))
}

fn check_config(cfg: &VerifyConfig) -> Result<()> {
    cfg.family.validate()?;
    if cfg.n_steps < 1 || cfg.n_paths < 2 {
        return config("need n_steps ≥ 1 and n_paths ≥ 2");
    }
    if cfg.x_scaled.iter().any(|x| !(*x > 0.0)) {
        return config("x_scaled entries must be positive");
    }
    if !(cfg.p >= 2.0) {
        return config(format!("p must be at least 2, got {}", cfg.p));
    }
    Ok(())
}

/// Simulates the configured policy family and checks the named bound on
/// every cell of the configured grid.
pub fn verify_bound(cfg: &VerifyConfig) -> Result<VerifyOutcome> {
    let batches = simulate_for(cfg)?;
    let constant = match cfg.constant {
        Some(c) => Some(c),
        None => frozen_constants().lookup(cfg.bound, cfg.p, cfg.variant)?,
    };
    evaluate_bound(cfg, &batches, constant)
}

fn sample_sizes(cfg: &VerifyConfig) -> Vec<usize> {
    let mut n = if cfg.bound == BoundName::LowerBound && !cfg.n_list.is_empty() {
        cfg.n_list.clone()
    } else {
        vec![cfg.n_steps]
    };
    n.sort_unstable();
    n.dedup();
    n
}

/// Runs the configured policy family once.
pub fn simulate_for(cfg: &VerifyConfig) -> Result<Vec<PathBatch>> {
    check_config(cfg)?;
    let policies = build_policies(&cfg.policies, &cfg.family)?;
    let sizes = sample_sizes(cfg);
    let max_n = *sizes.last().expect("nonempty");
    let checkpoints = if cfg.bound == BoundName::LowerBound {
        sizes
    } else {
        vec![]
    };
    let options = SimOptions {
        checkpoints,
        ..Default::default()
    };
    simulate_family(
        &cfg.family,
        &policies,
        max_n,
        cfg.n_paths,
        cfg.seed,
        &options,
    )
}

/// Checks the bound with the given constant against already simulated batches.
pub fn evaluate_bound(
    cfg: &VerifyConfig,
    batches: &[PathBatch],
    constant: Option<f64>,
) -> Result<VerifyOutcome> {
    check_config(cfg)?;
    let family = &cfg.family;
    let needs_constant = !matches!(cfg.bound, BoundName::Kolmogorov | BoundName::LowerBound);
    if needs_constant && constant.is_none() {
        return config(format!("{} needs a constant", cfg.bound.as_str()));
    }
    let mut warnings = Vec::new();
    let n_list = sample_sizes(cfg);
    let checkpoints = n_list.clone();
    let ms = family.moment_summary(cfg.n_steps, cfg.p);
    let b_n = ms.b_n;
    let name = cfg.bound;
    let mut reports = Vec::new();
    match name {
        BoundName::Kolmogorov => {
            if !(family.params.mu_upper <= 0.0) {
                warnings.push(
                    "steps with positive upper mean are outside the hypothesis E[X_k] ≤ 0".into(),
                );
            }
            let sum_pos: f64 = cfg.n_steps as f64 * family.upper_positive_moment(cfg.p);
            for &xs in &cfg.x_scaled {
                let x = xs * b_n.sqrt();
                let mut ys = cfg.y.clone();
                if cfg.proof_y {
                    let beta = sum_pos / x.powf(cfg.p);
                    ys.push(proof_truncation_level(x, cfg.delta, beta)?);
                }
                for &y in &ys {
                    let analytic = kolmogorov_upper_bound(x, y, b_n)?;
                    let mut worst: Option<BoundReport> = None;
                    for batch in batches {
                        let s = frequency(batch, |p| p.final_sum >= x);
                        let m = frequency(batch, |p| p.max_step >= y);
                        let se = s.standard_error.hypot(m.standard_error);
                        let r = BoundReport::new(
                            name,
                            Direction::Upper,
                            &[
                                ("x", x),
                                ("y", y),
                                ("B_n", b_n),
                                ("exp_term", analytic),
                                ("max_term", m.value),
                            ],
                            &batch.policy,
                            analytic + m.value,
                            s.value,
                            se,
                        );
                        if worst.as_ref().is_none_or(|w| r.margin() < w.margin()) {
                            worst = Some(r);
                        }
                    }
                    reports.extend(worst);
                }
            }
        }
        BoundName::FukNagaev => {
            let c = constant.expect("fuk-nagaev has a constant");
            for &xs in &cfg.x_scaled {
                let x = xs * b_n.sqrt();
                let analytic = fuk_nagaev_bound(x, cfg.delta, cfg.p, b_n, ms.m_np, c)?;
                let est = upper_capacity_from(batches, |p| p.final_sum >= x);
                reports.push(BoundReport::new(
                    name,
                    Direction::Upper,
                    &[
                        ("x", x),
                        ("delta", cfg.delta),
                        ("p", cfg.p),
                        ("B_n", b_n),
                        ("M_np", ms.m_np),
                        ("C_p", c),
                    ],
                    &batches[est.best_policy].policy,
                    analytic,
                    est.value,
                    est.standard_error,
                ));
            }
        }
        BoundName::Chebyshev => {
            let c = chebyshev_constant(constant.expect("chebyshev has a constant"));
            for &xs in &cfg.x_scaled {
                let x = xs * b_n.sqrt();
                let analytic = chebyshev_bound(x, b_n, c)?;
                let est = lower_capacity_from(batches, |p| p.final_sum >= x);
                reports.push(BoundReport::new(
                    name,
                    Direction::Upper,
                    &[("x", x), ("B_n", b_n), ("C", c)],
                    &batches[est.best_policy].policy,
                    analytic,
                    est.value,
                    est.standard_error,
                ));
            }
        }
        BoundName::RosenthalChoquet => {
            let c = constant.expect("rosenthal has a constant");
            let p = cfg.p;
            let per_step = vec![family.choquet_positive_pth(p); cfg.n_steps];
            let analytic = rosenthal_choquet_bound(p, b_n, &per_step, c)?;
            let f = |s: &crate::sim::PathSummary| s.final_sum.max(0.0).powf(p);
            let lhs = empirical_choquet(batches, f);
            let se = sup_mean(batches, f);
            reports.push(BoundReport::new(
                name,
                Direction::Upper,
                &[
                    ("p", p),
                    ("B_n", b_n),
                    ("sum_choquet_pth", per_step.iter().sum()),
                    ("C_p", c),
                ],
                &batches[se.best_policy].policy,
                analytic,
                lhs,
                se.standard_error,
            ));
        }
        BoundName::RosenthalMoment => {
            let c = constant.expect("rosenthal has a constant");
            let p = cfg.p;
            if cfg.variant == RosenthalVariant::Independent && family.params.mu_upper > 0.0 {
                warnings.push(
                    "steps with positive upper mean are outside the hypothesis E[X_k] ≤ 0".into(),
                );
            }
            let terms = ms.mean_terms();
            let analytic = rosenthal_moment_bound(p, b_n, ms.m_np, Some(&terms), c, cfg.variant)?;
            let est = match cfg.variant {
                RosenthalVariant::Independent => {
                    sup_mean(batches, |s| s.final_sum.max(0.0).powf(p))
                }
                RosenthalVariant::NdMax => sup_mean(batches, |s| s.max_abs_sum.powf(p)),
            };
            reports.push(BoundReport::new(
                name,
                Direction::Upper,
                &[("p", p), ("B_n", b_n), ("M_np", ms.m_np), ("C_p", c)],
                &batches[est.best_policy].policy,
                analytic,
                est.value,
                est.standard_error,
            ));
        }
        BoundName::LowerBound => {
            let sigma = match cfg.side {
                CapacitySide::Lower => family.params.sigma_lower(),
                CapacitySide::Upper => family.params.sigma_upper(),
            };
            if !family.is_centered() {
                warnings.push("the lower bound assumes E[X] = E[-X] = 0".into());
            }
            for &n in &n_list {
                let idx = checkpoints.binary_search(&n).expect("checkpoint present");
                let y_n = (2.0 * log_log(n as f64)).sqrt();
                let analytic = lower_bound_exponent(cfg.b, sigma, cfg.delta, y_n)?;
                let scale = y_n * (n as f64).sqrt();
                let ev = |p: &crate::sim::PathSummary| {
                    (p.checkpoint_sums[idx] / scale - cfg.b).abs() <= cfg.epsilon
                };
                let est = match cfg.side {
                    CapacitySide::Lower => lower_capacity_from(batches, ev),
                    CapacitySide::Upper => upper_capacity_from(batches, ev),
                };
                reports.push(BoundReport::new(
                    name,
                    Direction::Lower,
                    &[
                        ("n", n as f64),
                        ("y_n", y_n),
                        ("b", cfg.b),
                        ("delta", cfg.delta),
                        ("epsilon", cfg.epsilon),
                    ],
                    &batches[est.best_policy].policy,
                    analytic,
                    est.value,
                    est.standard_error,
                ));
            }
        }
    }
    if let Some(t) = cfg.target_se {
        let worst = reports.iter().map(|r| r.standard_error).fold(0.0, f64::max);
        if worst > t {
            warnings.push(format!(
                "standard error {worst:.3e} exceeds the requested {t:.3e}; increase n_paths"
            ));
        }
    }
    let all_dominated = reports.iter().all(|r| r.dominated);
    Ok(VerifyOutcome {
        bound: name,
        family: family.tag(),
        n_steps: cfg.n_steps,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        policies: batches
            .iter()
            .map(|b: &PathBatch| b.policy.clone())
            .collect(),
        constant,
        reports,
        warnings,
        all_dominated,
    })
}

/// Step families the constants are calibrated on: centred two-point,
/// truncated Gaussian and Gaussian steps with variance in `[0.25, 1]`, and
/// Student-t(5) steps with variance in `[0.25, 1]`.
pub fn shipped_families() -> Vec<StepFamily> {
    let p = GParams::variance(0.25, 1.0).expect("valid");
    [
        StepShape::TwoPoint,
        StepShape::TruncatedGaussian { cut: 3.0 },
        StepShape::Gaussian,
        StepShape::StudentT { dof: 5.0 },
    ]
    .into_iter()
    .map(|s| StepFamily::new(s, p).expect("valid"))
    .collect()
}

/// Names of the shipped verification configs.
pub const CANNED_CONFIGS: &[&str] = &[
    "kolmogorov-two-point",
    "fuk-nagaev-heavy-tail",
    "lower-bound-b0",
    "chebyshev",
    "rosenthal-choquet",
    "rosenthal-moment",
];

pub fn canned_config(name: &str) -> Result<VerifyConfig> {
    let fams = shipped_families();
    let cfg = match name {
        "kolmogorov-two-point" => {
            let mut c = VerifyConfig::new(
                BoundName::Kolmogorov,
                fams[0].clone(),
                1000,
                20_000,
                20_240_501,
            );
            c.x_scaled = vec![0.5, 1.0, 2.0, 3.0, 4.0];
            c.y = vec![0.75, 1.5, 3.0];
            c
        }
        "fuk-nagaev-heavy-tail" => {
            let mut c = VerifyConfig::new(
                BoundName::FukNagaev,
                fams[3].clone(),
                200,
                20_000,
                20_240_502,
            );
            c.p = 3.0;
            c.x_scaled = vec![1.0, 2.0, 3.0, 4.0, 6.0];
            c
        }
        "lower-bound-b0" => {
            let mut c = VerifyConfig::new(
                BoundName::LowerBound,
                fams[0].clone(),
                10_000,
                2_000,
                20_240_503,
            );
            c.delta = 0.5;
            c.n_list = vec![1_000, 10_000];
            c
        }
        "chebyshev" => {
            let mut c = VerifyConfig::new(
                BoundName::Chebyshev,
                fams[0].clone(),
                100,
                20_000,
                20_240_504,
            );
            c.x_scaled = vec![0.5, 1.0, 2.0, 3.0];
            c
        }
        "rosenthal-choquet" => VerifyConfig::new(
            BoundName::RosenthalChoquet,
            fams[0].clone(),
            100,
            20_000,
            20_240_505,
        ),
        "rosenthal-moment" => {
            let mut c = VerifyConfig::new(
                BoundName::RosenthalMoment,
                fams[0].clone(),
                1000,
                10_000,
                20_240_506,
            );
            c.p = 4.0;
            c.variant = RosenthalVariant::NdMax;
            c
        }
        other => {
            return config(format!(
                "unknown canned config `{other}`; known: {}",
                CANNED_CONFIGS.join(", ")
            ))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_lookup() {
        for b in BoundName::ALL {
            assert_eq!(BoundName::parse(b.as_str()).unwrap(), b);
        }
        assert!(BoundName::parse("bernstein").is_err());
        let f = frozen_constants();
        assert_eq!(
            f.lookup(BoundName::Kolmogorov, 2.0, RosenthalVariant::Independent)
                .unwrap(),
            None
        );
        assert!(
            f.lookup(BoundName::FukNagaev, 3.0, RosenthalVariant::Independent)
                .unwrap()
                .unwrap()
                >= 1.0
        );
        assert!(f
            .lookup(BoundName::FukNagaev, 7.0, RosenthalVariant::Independent)
            .is_err());
    }

    #[test]
    fn config_round_trip() {
        for name in CANNED_CONFIGS {
            let c = canned_config(name).unwrap();
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<VerifyConfig>(&text).unwrap(), c);
        }
        let bad = r#"{"bound": "chebyshev", "family": {"shape": {"kind": "two-point"},
            "params": {"sigma_lower_sq": 1, "sigma_upper_sq": 1, "mu_lower": 0, "mu_upper": 0}},
            "n_steps": 5, "n_paths": 5, "seed": 1, "typo": 3}"#;
        assert!(serde_json::from_str::<VerifyConfig>(bad).is_err());
    }

    #[test]
    fn small_runs_dominate() {
        for name in CANNED_CONFIGS {
            let mut c = canned_config(name).unwrap();
            c.n_paths = 400;
            c.n_steps = c.n_steps.min(200);
            if c.bound == BoundName::LowerBound {
                c.n_list = vec![100, 200];
            }
            let out = verify_bound(&c).unwrap();
            assert!(out.all_dominated, "{name}: {:#?}", out.reports);
            let dir = if c.bound == BoundName::LowerBound {
                Direction::Lower
            } else {
                Direction::Upper
            };
            assert!(out.reports.iter().all(|r| r.direction == dir));
        }
    }

    #[test]
    fn margins() {
        let r = BoundReport::new(
            BoundName::Chebyshev,
            Direction::Upper,
            &[],
            "p",
            0.1,
            0.2,
            0.01,
        );
        assert!(!r.dominated && r.margin() < 0.0);
        let r = BoundReport::new(
            BoundName::LowerBound,
            Direction::Lower,
            &[],
            "p",
            0.5,
            0.48,
            0.01,
        );
        assert!(r.dominated && r.margin() > 0.0);
    }
}

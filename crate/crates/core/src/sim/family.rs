use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use super::rng::NoiseSource;
use crate::error::{config, Result};
use crate::gnormal::GParams;
use crate::ineq::{MeanTerm, MomentSummary};
use crate::quadrature::{gauss_hermite, integrate, integrate_to_infinity};
use crate::scenario::{DiscreteDistribution, ScenarioSet};

const QUAD_TOL: f64 = 1e-12;
/// Points per axis of the grid of admissible `(mean, variance)` pairs over
/// which upper moments and capacities are maximised.
const CHOICE_GRID: usize = 9;

/// Standardised step noise `Z`. Shapes with finite variance are scaled to
/// `E[Z] = 0`, `E[Z²] = 1`; the others are left at their natural scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", from = "StrictShape")]
pub enum StepShape {
    TwoPoint,
    Gaussian,
    /// Normal conditioned on `|W| ≤ cut`.
    TruncatedGaussian {
        cut: f64,
    },
    StudentT {
        dof: f64,
    },
    /// Symmetric Pareto: random sign times `Pareto(1, alpha)`.
    Pareto {
        alpha: f64,
    },
}

// Unit variants under an internal tag ignore stray fields; this mirror rejects them.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum StrictShape {
    TwoPoint {},
    Gaussian {},
    TruncatedGaussian { cut: f64 },
    StudentT { dof: f64 },
    Pareto { alpha: f64 },
}

impl From<StrictShape> for StepShape {
    fn from(s: StrictShape) -> Self {
        match s {
            StrictShape::TwoPoint {} => StepShape::TwoPoint,
            StrictShape::Gaussian {} => StepShape::Gaussian,
            StrictShape::TruncatedGaussian { cut } => StepShape::TruncatedGaussian { cut },
            StrictShape::StudentT { dof } => StepShape::StudentT { dof },
            StrictShape::Pareto { alpha } => StepShape::Pareto { alpha },
        }
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

impl StepShape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepShape::TwoPoint | StepShape::Gaussian => true,
            StepShape::TruncatedGaussian { cut } => cut > 0.0 && cut.is_finite(),
            StepShape::StudentT { dof } => dof > 0.0 && dof.is_finite(),
            StepShape::Pareto { alpha } => alpha > 0.0 && alpha.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            config(format!("invalid step shape parameters: {self:?}"))
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            StepShape::TwoPoint => "two-point".into(),
            StepShape::Gaussian => "gaussian".into(),
            StepShape::TruncatedGaussian { cut } => format!("truncated-gaussian({cut})"),
            StepShape::StudentT { dof } => format!("student-t({dof})"),
            StepShape::Pareto { alpha } => format!("pareto({alpha})"),
        }
    }

    /// Tail class of `|Z|`.
    pub fn tail_profile(&self) -> &'static str {
        match self {
            StepShape::TwoPoint | StepShape::TruncatedGaussian { .. } => "bounded",
            StepShape::Gaussian => "gaussian",
            StepShape::StudentT { .. } | StepShape::Pareto { .. } => "polynomial",
        }
    }

    /// Tail index `α` with `P(|Z| > x) ≍ x^{-α}`, if polynomial.
    pub fn tail_index(&self) -> Option<f64> {
        match *self {
            StepShape::StudentT { dof } => Some(dof),
            StepShape::Pareto { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn has_moment(&self, p: f64) -> bool {
        self.tail_index().is_none_or(|a| p < a)
    }

    pub fn finite_variance(&self) -> bool {
        self.has_moment(2.0)
    }

    fn truncated_mass(cut: f64) -> f64 {
        2.0 * normal_cdf(cut) - 1.0
    }

    /// Standard deviation of the raw variable, 1 when it is infinite.
    fn raw_sd(&self) -> f64 {
        match *self {
            StepShape::TwoPoint | StepShape::Gaussian => 1.0,
            StepShape::TruncatedGaussian { cut } => {
                (1.0 - 2.0 * cut * normal_pdf(cut) / Self::truncated_mass(cut)).sqrt()
            }
            StepShape::StudentT { dof } if dof > 2.0 => (dof / (dof - 2.0)).sqrt(),
            StepShape::Pareto { alpha } if alpha > 2.0 => (alpha / (alpha - 2.0)).sqrt(),
            _ => 1.0,
        }
    }

    /// Bound on `|Z|` for bounded shapes.
    pub fn support_bound(&self) -> Option<f64> {
        match *self {
            StepShape::TwoPoint => Some(1.0),
            StepShape::TruncatedGaussian { cut } => Some(cut / self.raw_sd()),
            _ => None,
        }
    }

    /// `P(Z > z)`.
    pub fn sf(&self, z: f64) -> f64 {
        let w = z * self.raw_sd();
        match *self {
            StepShape::TwoPoint => {
                if z < -1.0 {
                    1.0
                } else if z < 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            StepShape::Gaussian => 0.5 * erfc(z / SQRT_2),
            StepShape::TruncatedGaussian { cut } => {
                if w >= cut {
                    0.0
                } else if w <= -cut {
                    1.0
                } else {
                    (normal_cdf(cut) - normal_cdf(w)) / Self::truncated_mass(cut)
                }
            }
            StepShape::StudentT { dof } => {
                StudentsT::new(0.0, 1.0, dof).expect("validated dof").sf(w)
            }
            StepShape::Pareto { alpha } => {
                if w >= 1.0 {
                    0.5 * w.powf(-alpha)
                } else if w > -1.0 {
                    0.5
                } else {
                    1.0 - 0.5 * (-w).powf(-alpha)
                }
            }
        }
    }

    /// `E|Z|^p`, infinite when the moment does not exist.
    pub fn abs_moment(&self, p: f64) -> f64 {
        if !self.has_moment(p) {
            return f64::INFINITY;
        }
        let s = self.raw_sd();
        let raw = match *self {
            StepShape::TwoPoint => 1.0,
            StepShape::Gaussian => {
                (0.5 * p * 2f64.ln() + ln_gamma((p + 1.0) / 2.0)).exp() / PI.sqrt()
            }
            StepShape::TruncatedGaussian { cut } => {
                2.0 * integrate(|w| w.powf(p) * normal_pdf(w), 0.0, cut, &[], QUAD_TOL)
                    / Self::truncated_mass(cut)
            }
            StepShape::StudentT { dof } => {
                (0.5 * p * dof.ln() + ln_gamma((p + 1.0) / 2.0) + ln_gamma((dof - p) / 2.0)
                    - 0.5 * PI.ln()
                    - ln_gamma(dof / 2.0))
                .exp()
            }
            StepShape::Pareto { alpha } => alpha / (alpha - p),
        };
        raw / s.powf(p)
    }

    /// Draws one `Z`. Loops should build a [`ShapeSampler`] once instead.
    pub fn sample(&self, noise: &mut NoiseSource) -> f64 {
        self.sampler().sample(noise)
    }

    pub fn sampler(&self) -> ShapeSampler {
        let inv_sd = 1.0 / self.raw_sd();
        match *self {
            StepShape::TwoPoint => ShapeSampler::TwoPoint,
            StepShape::Gaussian => ShapeSampler::Gaussian,
            StepShape::TruncatedGaussian { cut } => ShapeSampler::TruncatedGaussian { cut, inv_sd },
            StepShape::StudentT { dof } => ShapeSampler::StudentT {
                dist: rand_distr::StudentT::new(dof).expect("validated dof"),
                inv_sd,
            },
            StepShape::Pareto { alpha } => ShapeSampler::Pareto {
                neg_inv_alpha: -1.0 / alpha,
                inv_sd,
            },
        }
    }

    /// Finite atoms `(z, weight)` for shapes that have (or are given) a
    /// discrete carrier: exact for two-point, 5-node Gauss–Hermite for Gaussian.
    pub fn discrete_atoms(&self) -> Result<Vec<(f64, f64)>> {
        match self {
            StepShape::TwoPoint => Ok(vec![(-1.0, 0.5), (1.0, 0.5)]),
            StepShape::Gaussian => {
                let (x, w) = gauss_hermite(5);
                let norm = PI.sqrt();
                Ok(x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| (SQRT_2 * xi, wi / norm))
                    .collect())
            }
            other => config(format!("no discrete carrier for {}", other.tag())),
        }
    }
}

/// [`StepShape`] with its normalising constants precomputed.
#[derive(Debug, Clone, Copy)]
pub enum ShapeSampler {
    TwoPoint,
    Gaussian,
    TruncatedGaussian {
        cut: f64,
        inv_sd: f64,
    },
    StudentT {
        dist: rand_distr::StudentT<f64>,
        inv_sd: f64,
    },
    Pareto {
        neg_inv_alpha: f64,
        inv_sd: f64,
    },
}

impl ShapeSampler {
    #[inline]
    pub fn sample(&self, noise: &mut NoiseSource) -> f64 {
        match *self {
            ShapeSampler::TwoPoint => noise.sign(),
            ShapeSampler::Gaussian => StandardNormal.sample(noise.rng()),
            ShapeSampler::TruncatedGaussian { cut, inv_sd } => loop {
                let w: f64 = StandardNormal.sample(noise.rng());
                if w.abs() <= cut {
                    return w * inv_sd;
                }
            },
            ShapeSampler::StudentT { dist, inv_sd } => dist.sample(noise.rng()) * inv_sd,
            ShapeSampler::Pareto {
                neg_inv_alpha,
                inv_sd,
            } => {
                let rng = noise.rng();
                let u: f64 = 1.0 - rng.random::<f64>();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * u.powf(neg_inv_alpha) * inv_sd
            }
        }
    }
}

/// How the partner step of each consecutive pair reuses the first step's noise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    #[default]
    Independent,
    /// `X_{2j+1}` uses `-Z_{2j}`.
    Antithetic,
    /// `X_{2j+1}` uses `Z_{2j}`; not negatively dependent, kept as a negative control.
    Comonotone,
}

/// One admissible per-step law: `X = mean + √variance · Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepChoice {
    pub mean: f64,
    pub variance: f64,
}

impl StepChoice {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }
}

/// Step laws `mean + σ Z`, optionally truncated above, with `(mean, σ²)`
/// ranging over the rectangle given by `params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFamily {
    pub shape: StepShape,
    pub params: GParams,
    /// `Y = X ∧ truncate_at` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate_at: Option<f64>,
    #[serde(default)]
    pub coupling: Coupling,
}

impl StepFamily {
    pub fn new(shape: StepShape, params: GParams) -> Result<Self> {
        let f = Self {
            shape,
            params,
            truncate_at: None,
            coupling: Coupling::Independent,
        };
        f.validate()?;
        Ok(f)
    }

    /// Centred two-point steps `±σ` with `σ² ∈ [lo, hi]`.
    pub fn two_point(sigma_lower_sq: f64, sigma_upper_sq: f64) -> Result<Self> {
        Self::new(
            StepShape::TwoPoint,
            GParams::variance(sigma_lower_sq, sigma_upper_sq)?,
        )
    }

    pub fn with_truncation(mut self, y: f64) -> Result<Self> {
        self.truncate_at = Some(y);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.shape.validate()?;
        if let Some(y) = self.truncate_at {
            if !(y > 0.0 && y.is_finite()) {
                return config(format!("truncation level must be positive, got {y}"));
            }
        }
        Ok(())
    }

    pub fn tag(&self) -> String {
        let mut t = self.shape.tag();
        if let Some(y) = self.truncate_at {
            t.push_str(&format!("∧{y}"));
        }
        if self.coupling != Coupling::Independent {
            t.push_str(&format!("/{:?}", self.coupling).to_lowercase());
        }
        t
    }

    /// Whether `C_V[X²/loglog|X|] < ∞`. For the shipped shapes this is the
    /// same as a finite second moment: a tail `x^{-2}` gives
    /// `∫ dx / (x loglog x) = ∞`.
    pub fn satisfies_lil_moment_condition(&self) -> bool {
        // truncation only cuts the upper tail, so the lower one decides
        self.shape.finite_variance()
    }

    pub fn is_centered(&self) -> bool {
        self.params.mu_lower == 0.0 && self.params.mu_upper == 0.0 && self.truncate_at.is_none()
    }

    /// Grid of admissible choices including all four corners.
    pub fn choices(&self) -> Vec<StepChoice> {
        let axis = |lo: f64, hi: f64| -> Vec<f64> {
            if lo == hi {
                vec![lo]
            } else {
                (0..CHOICE_GRID)
                    .map(|k| {
                        if k + 1 == CHOICE_GRID {
                            hi
                        } else {
                            lo + (hi - lo) * k as f64 / (CHOICE_GRID - 1) as f64
                        }
                    })
                    .collect()
            }
        };
        let p = &self.params;
        let mut out = Vec::new();
        for m in axis(p.mu_lower, p.mu_upper) {
            for v in axis(p.sigma_lower_sq, p.sigma_upper_sq) {
                out.push(StepChoice::new(m, v));
            }
        }
        out
    }

    /// Corners of the admissible rectangle, deduplicated.
    pub fn corner_choices(&self) -> Vec<StepChoice> {
        let p = &self.params;
        let mut out = Vec::new();
        for m in [p.mu_lower, p.mu_upper] {
            for v in [p.sigma_lower_sq, p.sigma_upper_sq] {
                let c = StepChoice::new(m, v);
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    pub fn admits(&self, c: &StepChoice) -> bool {
        const TOL: f64 = 1e-12;
        let p = &self.params;
        c.mean >= p.mu_lower - TOL
            && c.mean <= p.mu_upper + TOL
            && c.variance >= p.sigma_lower_sq - TOL
            && c.variance <= p.sigma_upper_sq + TOL
    }

    /// `P(Y > u)` under `c`.
    pub fn tail_upper(&self, c: &StepChoice, u: f64) -> f64 {
        if let Some(y) = self.truncate_at {
            if u >= y {
                return 0.0;
            }
        }
        let sd = c.variance.sqrt();
        if sd == 0.0 {
            return if c.mean > u { 1.0 } else { 0.0 };
        }
        self.shape.sf((u - c.mean) / sd)
    }

    /// `P(Y < -u)` under `c`, for `u ≥ 0`.
    pub fn tail_lower(&self, c: &StepChoice, u: f64) -> f64 {
        let sd = c.variance.sqrt();
        if sd == 0.0 {
            return if c.mean.min(self.truncate_at.unwrap_or(f64::INFINITY)) < -u {
                1.0
            } else {
                0.0
            };
        }
        // symmetric Z: P(μ + σZ < -u) = P(Z > (u + μ)/σ)
        self.shape.sf((u + c.mean) / sd)
    }

    fn breaks(&self, c: &StepChoice) -> Vec<f64> {
        let sd = c.variance.sqrt();
        let mut b = vec![c.mean.abs()];
        if let Some(s) = self.shape.support_bound() {
            for v in [c.mean - sd * s, c.mean + sd * s] {
                b.push(v.abs());
            }
        }
        if let Some(y) = self.truncate_at {
            b.push(y);
        }
        b
    }

    fn tail_integral<F: Fn(f64) -> f64>(
        &self,
        c: &StepChoice,
        weight: F,
        upper: bool,
        lower: bool,
    ) -> f64 {
        let br = self.breaks(c);
        let g = |u: f64| {
            let mut t = 0.0;
            if upper {
                t += self.tail_upper(c, u);
            }
            if lower {
                t += self.tail_lower(c, u);
            }
            if t == 0.0 {
                0.0
            } else {
                weight(u) * t
            }
        };
        match self.bounded_reach(c) {
            Some(r) => integrate(g, 0.0, r, &br, QUAD_TOL),
            None => integrate_to_infinity(g, 0.0, &br, QUAD_TOL),
        }
    }

    fn bounded_reach(&self, c: &StepChoice) -> Option<f64> {
        let sd = c.variance.sqrt();
        self.shape
            .support_bound()
            .map(|s| c.mean.abs() + sd * s + 1.0)
    }

    fn plain(&self, c: &StepChoice) -> bool {
        self.truncate_at.is_none() && c.mean == 0.0
    }

    /// `E_c[Y]`.
    pub fn step_mean(&self, c: &StepChoice) -> f64 {
        if self.truncate_at.is_none() {
            return c.mean;
        }
        self.tail_integral(c, |_| 1.0, true, false) - self.tail_integral(c, |_| 1.0, false, true)
    }

    /// `E_c|Y|^p`.
    pub fn step_abs_moment(&self, c: &StepChoice, p: f64) -> f64 {
        if !self.shape.has_moment(p) && self.truncate_at.is_none() {
            return f64::INFINITY;
        }
        if self.plain(c) {
            return c.variance.powf(p / 2.0) * self.shape.abs_moment(p);
        }
        if p == 2.0 && self.truncate_at.is_none() {
            return c.mean * c.mean + c.variance;
        }
        self.tail_integral(c, |u| p * u.powf(p - 1.0), true, true)
    }

    /// `E_c[(Y⁺)^p]`.
    pub fn step_positive_moment(&self, c: &StepChoice, p: f64) -> f64 {
        if !self.shape.has_moment(p) {
            return f64::INFINITY;
        }
        if self.plain(c) {
            return 0.5 * c.variance.powf(p / 2.0) * self.shape.abs_moment(p);
        }
        self.tail_integral(c, |u| p * u.powf(p - 1.0), true, false)
    }

    /// `sup_c E_c[(Y⁺)^p]` over the admissible grid.
    pub fn upper_positive_moment(&self, p: f64) -> f64 {
        self.choices()
            .iter()
            .map(|c| self.step_positive_moment(c, p))
            .fold(0.0, f64::max)
    }

    /// `sup_c E_c|Y|^p` over the admissible grid.
    pub fn upper_abs_moment(&self, p: f64) -> f64 {
        self.choices()
            .iter()
            .map(|c| self.step_abs_moment(c, p))
            .fold(0.0, f64::max)
    }

    /// `(ε[Y], E[Y])`.
    pub fn mean_bounds(&self) -> MeanTerm {
        let means: Vec<f64> = self.choices().iter().map(|c| self.step_mean(c)).collect();
        MeanTerm {
            lower: means.iter().copied().fold(f64::INFINITY, f64::min),
            upper: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `V(Y > u) = max_c P_c(Y > u)`.
    pub fn capacity_upper_tail(&self, u: f64) -> f64 {
        self.choices()
            .iter()
            .map(|c| self.tail_upper(c, u))
            .fold(0.0, f64::max)
    }

    /// `V(|Y| > x) = max_c P_c(|Y| > x)`.
    pub fn capacity_abs_tail(&self, x: f64) -> f64 {
        self.choices()
            .iter()
            .map(|c| (self.tail_upper(c, x) + self.tail_lower(c, x)).min(1.0))
            .fold(0.0, f64::max)
    }

    /// `C_V[(Y⁺)^p] = ∫₀^∞ p u^{p-1} V(Y > u) du`.
    pub fn choquet_positive_pth(&self, p: f64) -> f64 {
        let choices = self.choices();
        let mut br: Vec<f64> = choices.iter().flat_map(|c| self.breaks(c)).collect();
        br.sort_by(f64::total_cmp);
        br.dedup();
        let g = |u: f64| {
            let v = choices
                .iter()
                .map(|c| self.tail_upper(c, u))
                .fold(0.0, f64::max);
            if v == 0.0 {
                0.0
            } else {
                p * u.powf(p - 1.0) * v
            }
        };
        let reach = choices
            .iter()
            .map(|c| self.bounded_reach(c))
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)));
        match reach {
            Some(r) => integrate(g, 0.0, r, &br, QUAD_TOL),
            None => integrate_to_infinity(g, 0.0, &br, QUAD_TOL),
        }
    }

    /// Deterministic moment accumulators for `n` steps.
    pub fn moment_summary(&self, n: usize, p: f64) -> MomentSummary {
        let b = self.upper_abs_moment(2.0);
        let m = self.upper_abs_moment(p);
        let means = self.mean_bounds();
        MomentSummary {
            n,
            b_n: n as f64 * b,
            m_np: n as f64 * m,
            p,
            upper_means: vec![means.upper; n],
            lower_means: vec![means.lower; n],
        }
    }

    /// Draws one step under `c` from fresh noise; returns `(Y, Z)`.
    #[inline]
    pub fn draw(
        &self,
        sampler: &ShapeSampler,
        c: &StepChoice,
        sd: f64,
        noise: &mut NoiseSource,
    ) -> (f64, f64) {
        let z = sampler.sample(noise);
        (self.apply(c, sd, z), z)
    }

    #[inline]
    pub fn apply(&self, c: &StepChoice, sd: f64, z: f64) -> f64 {
        let x = c.mean + sd * z;
        match self.truncate_at {
            Some(y) => x.min(y),
            None => x,
        }
    }

    /// Exact law of `(X₁, X₂)` as a scenario set over the corner choices.
    ///
    /// With independent steps the second choice may depend on the realised
    /// first step, so every map from first-step atoms to choices is a member.
    /// Coupled pairs share the first step's choice.
    pub fn two_step_joint(&self) -> Result<ScenarioSet<[f64; 2]>> {
        let atoms = self.shape.discrete_atoms()?;
        let choices = self.corner_choices();
        let value = |c: &StepChoice, z: f64| self.apply(c, c.variance.sqrt(), z);
        let mut members = Vec::new();
        match self.coupling {
            Coupling::Independent => {
                let k = choices.len();
                let maps = k.pow(atoms.len() as u32);
                for c1 in &choices {
                    for code in 0..maps {
                        let mut pts = Vec::new();
                        let mut rest = code;
                        for &(z1, w1) in &atoms {
                            let c2 = &choices[rest % k];
                            rest /= k;
                            for &(z2, w2) in &atoms {
                                pts.push(([value(c1, z1), value(c2, z2)], w1 * w2));
                            }
                        }
                        members.push(DiscreteDistribution::new(pts)?.compact());
                    }
                }
            }
            Coupling::Antithetic | Coupling::Comonotone => {
                let s = if self.coupling == Coupling::Antithetic {
                    -1.0
                } else {
                    1.0
                };
                for c in &choices {
                    let pts = atoms
                        .iter()
                        .map(|&(z, w)| ([value(c, z), value(c, s * z)], w))
                        .collect();
                    members.push(DiscreteDistribution::new(pts)?.compact());
                }
            }
        }
        ScenarioSet::new(members)
    }
}

/// Returns `family` with consecutive steps coupled by `mode`.
pub fn nd_coupler(family: &StepFamily, mode: Coupling) -> Result<StepFamily> {
    family.validate()?;
    Ok(StepFamily {
        coupling: mode,
        ..family.clone()
    })
}

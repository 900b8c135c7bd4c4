use std::sync::Arc;

use super::family::{StepChoice, StepFamily};
use super::rng::PolicyRng;
use crate::error::{config, Result};
use crate::gnormal::{solve_g_heat_with, symmetric_grid, GParams, PdeSolution, SolveOptions};
use crate::test_function::TestFunction;

/// What a policy may look at before choosing step `step` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct History {
    pub step: usize,
    pub n_steps: usize,
    /// `S_{step-1}`.
    pub sum: f64,
    /// `X_{step-1}`, zero before the first step.
    pub last: f64,
}

/// Volatility schedule read off a G-heat solution: at each step pick `σ̄²`
/// where the value function ahead is locally convex and `σ̲²` where it is
/// concave, and the mean endpoint along its slope.
#[derive(Debug, Clone)]
pub struct FeedbackSurface {
    solution: PdeSolution,
    params: GParams,
}

impl FeedbackSurface {
    pub fn build(
        phi: &TestFunction,
        params: &GParams,
        nx: usize,
        snapshots: usize,
    ) -> Result<Self> {
        let grid = symmetric_grid(phi, params, 1.0, nx);
        let solution = solve_g_heat_with(phi, params, &grid, SolveOptions { snapshots })?;
        Ok(Self {
            solution,
            params: *params,
        })
    }

    pub fn solution(&self) -> &PdeSolution {
        &self.solution
    }

    fn decide(&self, h: &History) -> StepChoice {
        let n = h.n_steps as f64;
        let remaining = (h.n_steps - h.step) as f64 / n;
        let slice = &self.solution.values[self.solution.nearest_slice(remaining)];
        let g = &self.solution.grid;
        let x = h.sum / n.sqrt();
        let pos = ((x - g.x_min) / g.dx()).round();
        let i = (pos.max(1.0) as usize).min(g.nx - 2);
        let d2 = slice[i + 1] - 2.0 * slice[i] + slice[i - 1];
        let d1 = slice[i + 1] - slice[i - 1];
        let p = &self.params;
        StepChoice {
            mean: if d1 >= 0.0 { p.mu_upper } else { p.mu_lower },
            variance: if d2 >= 0.0 {
                p.sigma_upper_sq
            } else {
                p.sigma_lower_sq
            },
        }
    }
}

#[derive(Debug, Clone)]
pub enum PolicyKind {
    Constant(StepChoice),
    /// `at_or_above` when `S_{k-1} ≥ level` (`level · √(k-1)` if normalised), else `below`.
    Threshold {
        level: f64,
        normalized: bool,
        below: StepChoice,
        at_or_above: StepChoice,
    },
    /// Independent draw from `choices` with the given weights at every step.
    Randomized {
        choices: Vec<StepChoice>,
        weights: Vec<f64>,
    },
    /// Replays the script, cycling when it runs out.
    Scripted(Vec<StepChoice>),
    Feedback(Arc<FeedbackSurface>),
}

/// Adapted rule choosing each step's `(mean, variance)` from the history.
#[derive(Debug, Clone)]
pub struct AdversaryPolicy {
    pub label: String,
    pub kind: PolicyKind,
    pub rng_stream_id: u64,
}

impl AdversaryPolicy {
    pub fn new(label: impl Into<String>, kind: PolicyKind) -> Result<Self> {
        let p = Self {
            label: label.into(),
            kind,
            rng_stream_id: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(mean: f64, variance: f64) -> Self {
        Self {
            label: format!("const(m={mean},v={variance})"),
            kind: PolicyKind::Constant(StepChoice::new(mean, variance)),
            rng_stream_id: 0,
        }
    }

    pub fn with_stream(mut self, id: u64) -> Self {
        self.rng_stream_id = id;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            PolicyKind::Randomized { choices, weights } => {
                if choices.is_empty() || choices.len() != weights.len() {
                    return config(format!(
                        "policy `{}`: need one weight per choice",
                        self.label
                    ));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return config(format!(
                        "policy `{}`: weights must be nonnegative and not all zero",
                        self.label
                    ));
                }
            }
            PolicyKind::Scripted(s) if s.is_empty() => {
                return config(format!("policy `{}`: empty script", self.label));
            }
            PolicyKind::Threshold { level, .. } if !level.is_finite() => {
                return config(format!("policy `{}`: threshold must be finite", self.label));
            }
            _ => {}
        }
        Ok(())
    }

    /// Checks every choice the policy can make without history against the
    /// family; history-dependent choices are checked step by step.
    pub fn check_static(&self, family: &StepFamily) -> Result<()> {
        let fixed: Vec<StepChoice> = match &self.kind {
            PolicyKind::Constant(c) => vec![*c],
            PolicyKind::Threshold {
                below, at_or_above, ..
            } => vec![*below, *at_or_above],
            PolicyKind::Randomized { choices, .. } => choices.clone(),
            PolicyKind::Scripted(s) => s.clone(),
            PolicyKind::Feedback(_) => vec![],
        };
        match fixed.iter().find(|c| !family.admits(c)) {
            Some(c) => Err(crate::Error::InvariantBreach(format!(
                "policy `{}` can choose {c:?} outside the family bounds",
                self.label
            ))),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn decide(&self, h: &History, rng: &mut PolicyRng) -> StepChoice {
        match &self.kind {
            PolicyKind::Constant(c) => *c,
            PolicyKind::Threshold {
                level,
                normalized,
                below,
                at_or_above,
            } => {
                let cut = if *normalized {
                    level * ((h.step - 1) as f64).sqrt()
                } else {
                    *level
                };
                if h.sum >= cut {
                    *at_or_above
                } else {
                    *below
                }
            }
            PolicyKind::Randomized { choices, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.uniform() * total;
                for (c, w) in choices.iter().zip(weights) {
                    if u < *w {
                        return *c;
                    }
                    u -= w;
                }
                *choices.last().expect("validated nonempty")
            }
            PolicyKind::Scripted(s) => s[(h.step - 1) % s.len()],
            PolicyKind::Feedback(f) => f.decide(h),
        }
    }
}

/// Endpoint policies for `params`: one constant per corner, sign-threshold
/// policies switching between the variance endpoints, and a uniform
/// randomisation over the corners.
pub fn standard_policies(params: &GParams) -> Vec<AdversaryPolicy> {
    let mid = 0f64.clamp(params.mu_lower, params.mu_upper);
    let lo = params.sigma_lower_sq;
    let hi = params.sigma_upper_sq;
    let mut corners = Vec::new();
    for m in [params.mu_lower, params.mu_upper] {
        for v in [lo, hi] {
            let c = StepChoice::new(m, v);
            if !corners.contains(&c) {
                corners.push(c);
            }
        }
    }
    let mut out: Vec<AdversaryPolicy> = corners
        .iter()
        .map(|c| AdversaryPolicy::constant(c.mean, c.variance))
        .collect();
    if lo < hi {
        out.push(AdversaryPolicy {
            label: "high-var-below-0".into(),
            kind: PolicyKind::Threshold {
                level: 0.0,
                normalized: false,
                below: StepChoice::new(mid, hi),
                at_or_above: StepChoice::new(mid, lo),
            },
            rng_stream_id: 0,
        });
        out.push(AdversaryPolicy {
            label: "high-var-above-0".into(),
            kind: PolicyKind::Threshold {
                level: 0.0,
                normalized: false,
                below: StepChoice::new(mid, lo),
                at_or_above: StepChoice::new(mid, hi),
            },
            rng_stream_id: 0,
        });
    }
    if corners.len() > 1 {
        out.push(AdversaryPolicy {
            label: "uniform-corners".into(),
            kind: PolicyKind::Randomized {
                weights: vec![1.0; corners.len()],
                choices: corners,
            },
            rng_stream_id: 1,
        });
    }
    out
}

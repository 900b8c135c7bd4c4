//! Serializable descriptions of policy families.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::sim::{
    standard_policies, AdversaryPolicy, FeedbackSurface, PolicyKind, StepChoice, StepFamily,
};
use crate::test_function::TestFunction;

fn default_nx() -> usize {
    801
}

fn default_snapshots() -> usize {
    201
}

fn default_stream() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Expands to [`standard_policies`] for the family's bounds.
    Standard {},
    Constant {
        mean: f64,
        variance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Threshold {
        level: f64,
        #[serde(default)]
        normalized: bool,
        below: StepChoice,
        at_or_above: StepChoice,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Randomized {
        choices: Vec<StepChoice>,
        weights: Vec<f64>,
        #[serde(default = "default_stream")]
        stream: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Scripted {
        script: Vec<StepChoice>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// Volatility read off the G-heat solution for `phi`.
    Feedback {
        phi: String,
        #[serde(default = "default_nx")]
        nx: usize,
        #[serde(default = "default_snapshots")]
        snapshots: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl PolicySpec {
    pub fn build(&self, family: &StepFamily) -> Result<Vec<AdversaryPolicy>> {
        let named = |label: &Option<String>, default: String| label.clone().unwrap_or(default);
        let one =
            |label: String, kind: PolicyKind| AdversaryPolicy::new(label, kind).map(|p| vec![p]);
        match self {
            PolicySpec::Standard {} => Ok(standard_policies(&family.params)),
            PolicySpec::Constant {
                mean,
                variance,
                label,
            } => {
                let p = AdversaryPolicy::constant(*mean, *variance);
                let l = named(label, p.label.clone());
                Ok(vec![AdversaryPolicy { label: l, ..p }])
            }
            PolicySpec::Threshold {
                level,
                normalized,
                below,
                at_or_above,
                label,
            } => one(
                named(label, format!("threshold({level})")),
                PolicyKind::Threshold {
                    level: *level,
                    normalized: *normalized,
                    below: *below,
                    at_or_above: *at_or_above,
                },
            ),
            PolicySpec::Randomized {
                choices,
                weights,
                stream,
                label,
            } => {
                let mut p = one(
                    named(label, "randomized".into()),
                    PolicyKind::Randomized {
                        choices: choices.clone(),
                        weights: weights.clone(),
                    },
                )?;
                p[0].rng_stream_id = *stream;
                Ok(p)
            }
            PolicySpec::Scripted { script, label } => one(
                named(label, "scripted".into()),
                PolicyKind::Scripted(script.clone()),
            ),
            PolicySpec::Feedback {
                phi,
                nx,
                snapshots,
                label,
            } => {
                let f = TestFunction::from_tag(phi)?;
                let surface = FeedbackSurface::build(&f, &family.params, *nx, *snapshots)?;
                one(
                    named(label, format!("feedback({phi})")),
                    PolicyKind::Feedback(Arc::new(surface)),
                )
            }
        }
    }
}

/// Builds the policy family; an empty list means the standard family.
pub fn build_policies(specs: &[PolicySpec], family: &StepFamily) -> Result<Vec<AdversaryPolicy>> {
    if specs.is_empty() {
        return Ok(standard_policies(&family.params));
    }
    let mut out = Vec::new();
    for s in specs {
        out.extend(s.build(family)?);
    }
    if out.is_empty() {
        return config("policy family is empty");
    }
    for p in &out {
        p.check_static(family)?;
    }
    Ok(out)
}

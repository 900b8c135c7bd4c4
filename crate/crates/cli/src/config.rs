//! JSON experiment files.
//!
//! Every file carries `schema_version`; unknown fields are rejected and
//! stochastic experiments require a seed. The fully defaulted form of each
//! file is written next to the outputs as `<prefix>.config.json`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use sublinear_core::config::PolicySpec;
use sublinear_core::ineq::VerifyConfig;
use sublinear_core::limits::LilConfig;
use sublinear_core::sim::StepFamily;
use sublinear_core::GParams;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Where outputs go. Command-line flags take precedence, then
/// `SUBLINEAR_OUT_DIR`, then `sublinear-out`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

fn default_t() -> f64 {
    1.0
}
fn default_nx() -> usize {
    801
}
fn default_snapshots() -> usize {
    11
}
fn default_growth() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GheatFile {
    pub schema_version: u32,
    pub phi: String,
    pub params: GParams,
    #[serde(default = "default_t")]
    pub t_horizon: f64,
    #[serde(default = "default_nx")]
    pub nx: usize,
    /// Saved time slices including both ends.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Largest accepted growth order of `phi`.
    #[serde(default = "default_growth")]
    pub growth_limit: u32,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub schema_version: u32,
    pub seed: u64,
    pub family: StepFamily,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    pub n_steps: usize,
    pub n_paths: usize,
    /// Step counts at which partial sums are recorded.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyFile {
    pub schema_version: u32,
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Shared by `run-clt` and `run-wlln`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceFile {
    pub schema_version: u32,
    pub seed: u64,
    pub family: StepFamily,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    /// Test-function tags.
    pub phi: Vec<String>,
    pub n_list: Vec<usize>,
    pub n_paths: usize,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LilFile {
    pub schema_version: u32,
    pub family: StepFamily,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    pub lil: LilConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_deltas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_range() -> f64 {
    1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentFile {
    pub schema_version: u32,
    pub family: StepFamily,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_range")]
    pub n_max: f64,
    #[serde(default = "default_range")]
    pub t_max: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
        })*
    };
}

versioned!(
    GheatFile,
    SimulateFile,
    VerifyFile,
    ConvergenceFile,
    LilFile,
    MomentFile
);

/// Parses `text`, reporting syntax errors with line and column.
pub fn parse<T: DeserializeOwned + Versioned>(text: &str, origin: &str) -> Result<T, CliError> {
    let cfg: T = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!(
            "{origin}: line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{origin}: schema_version {} is not supported (this build reads {SCHEMA_VERSION})",
            cfg.schema_version()
        )));
    }
    Ok(cfg)
}

pub fn load<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIM: &str = r#"{
        "schema_version": 1,
        "seed": 3,
        "family": {"shape": {"kind": "two-point"}, "params": {"sigma_lower_sq": 0.25, "sigma_upper_sq": 1}},
        "n_steps": 10,
        "n_paths": 5
    }"#;

    #[test]
    fn defaults_fill_in_and_round_trip() {
        let s: SimulateFile = parse(SIM, "sim").unwrap();
        assert!(s.policies.is_empty() && s.checkpoints.is_empty());
        let back: SimulateFile = parse(&serde_json::to_string(&s).unwrap(), "back").unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn rejections() {
        let no_seed = SIM.replace("\"seed\": 3,", "");
        let e = parse::<SimulateFile>(&no_seed, "x")
            .unwrap_err()
            .to_string();
        assert!(e.contains("seed"), "{e}");
        let typo = SIM.replace("\"n_paths\"", "\"n_path\"");
        assert!(parse::<SimulateFile>(&typo, "x").is_err());
        let v2 = SIM.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(parse::<SimulateFile>(&v2, "x")
            .unwrap_err()
            .to_string()
            .contains("schema_version"));
        let broken = "{\n  \"schema_version\": 1,\n  \"seed\": }";
        let e = parse::<SimulateFile>(broken, "x").unwrap_err().to_string();
        assert!(e.contains("line 3, column 11"), "{e}");
    }
}

use std::collections::BTreeMap;

use serde::Serialize;

use super::bounds::RosenthalVariant;
use super::verify::{
    evaluate_bound, p_key, shipped_families, simulate_for, BoundName, FrozenConstants, VerifyConfig,
};
use crate::error::Result;

/// Resolution of the constant grid.
pub const CONSTANT_STEP: f64 = 0.25;

const SIZES: [usize; 3] = [10, 100, 1000];
const X_SCALED: [f64; 7] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
const DELTAS: [f64; 3] = [0.25, 0.5, 1.0];
const ORDERS: [f64; 3] = [2.0, 3.0, 4.0];

/// Smallest constant one configuration needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationCell {
    pub bound: BoundName,
    pub variant: Option<RosenthalVariant>,
    pub p: f64,
    pub family: String,
    pub n_steps: usize,
    pub needed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub constants: FrozenConstants,
    pub cells: Vec<CalibrationCell>,
}

/// Every bound here is affine in its constant, so two evaluations give the
/// smallest constant at which each report is dominated without slack.
fn needed(cfg: &VerifyConfig, batches: &[crate::sim::PathBatch]) -> Result<f64> {
    let one = evaluate_bound(cfg, batches, Some(1.0))?;
    let two = evaluate_bound(cfg, batches, Some(2.0))?;
    let mut need = f64::NEG_INFINITY;
    for (a, b) in one.reports.iter().zip(&two.reports) {
        let slope = b.analytic_value - a.analytic_value;
        let intercept = a.analytic_value - slope;
        if slope > 0.0 {
            need = need.max((a.empirical_estimate - intercept) / slope);
        }
    }
    Ok(need)
}

fn round_up(c: f64) -> f64 {
    ((c / CONSTANT_STEP).ceil() * CONSTANT_STEP).max(1.0)
}

/// Smallest constants on the [`CONSTANT_STEP`] grid (and at least 1) for
/// which every shipped configuration is dominated on the calibration seed.
pub fn calibrate(seed: u64, n_paths: usize) -> Result<Calibration> {
    let fams = shipped_families();
    let mut cells = Vec::new();
    for (fi, fam) in fams.iter().enumerate() {
        for &n in &SIZES {
            // one simulation serves every bound on this family and size
            let mut base = VerifyConfig::new(BoundName::Chebyshev, fam.clone(), n, n_paths, seed);
            base.x_scaled = X_SCALED.to_vec();
            let batches = simulate_for(&base)?;
            let mut push = |bound, variant, p, need| {
                cells.push(CalibrationCell {
                    bound,
                    variant,
                    p,
                    family: fam.tag(),
                    n_steps: n,
                    needed: need,
                })
            };
            push(BoundName::Chebyshev, None, 2.0, needed(&base, &batches)?);
            for &p in &ORDERS {
                if !fam.shape.has_moment(p) {
                    continue;
                }
                for &d in &DELTAS {
                    let cfg = VerifyConfig {
                        bound: BoundName::FukNagaev,
                        p,
                        delta: d,
                        ..base.clone()
                    };
                    push(BoundName::FukNagaev, None, p, needed(&cfg, &batches)?);
                }
                // sample moments of order 2p are unreliable for the Student-t member
                if fi == 3 {
                    continue;
                }
                let cfg = VerifyConfig {
                    bound: BoundName::RosenthalChoquet,
                    p,
                    ..base.clone()
                };
                push(
                    BoundName::RosenthalChoquet,
                    None,
                    p,
                    needed(&cfg, &batches)?,
                );
                for v in [RosenthalVariant::Independent, RosenthalVariant::NdMax] {
                    let cfg = VerifyConfig {
                        bound: BoundName::RosenthalMoment,
                        p,
                        variant: v,
                        ..base.clone()
                    };
                    push(
                        BoundName::RosenthalMoment,
                        Some(v),
                        p,
                        needed(&cfg, &batches)?,
                    );
                }
            }
        }
    }
    let pick = |bound: BoundName, variant: Option<RosenthalVariant>, p: f64| {
        round_up(
            cells
                .iter()
                .filter(|c| c.bound == bound && c.variant == variant && c.p == p)
                .map(|c| c.needed)
                .fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let table = |bound, variant| -> BTreeMap<String, f64> {
        ORDERS
            .iter()
            .map(|&p| (p_key(p), pick(bound, variant, p)))
            .collect()
    };
    let c2 = pick(BoundName::Chebyshev, None, 2.0);
    let constants = FrozenConstants {
        calibration_seed: seed,
        calibration_paths: n_paths,
        chebyshev_c2: c2,
        fuk_nagaev: table(BoundName::FukNagaev, None),
        rosenthal_choquet: table(BoundName::RosenthalChoquet, None),
        rosenthal_independent: table(
            BoundName::RosenthalMoment,
            Some(RosenthalVariant::Independent),
        ),
        rosenthal_nd_max: table(BoundName::RosenthalMoment, Some(RosenthalVariant::NdMax)),
    };
    Ok(Calibration { constants, cells })
}

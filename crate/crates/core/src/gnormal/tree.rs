use super::params::GParams;
use crate::error::{config, Result};
use crate::test_function::TestFunction;

/// Recombining trinomial lattice for `sup_θ E[φ(∫₀¹ θ dB)]` with `θ` adapted
/// and `σ̲ ≤ θ ≤ σ̄`.
///
/// With `depth` steps of length `Δt = 1/depth` and node spacing
/// `h = σ̄ √Δt`, a step under volatility `σ` moves `±h` with probability
/// `σ²/(2σ̄²)` each and stays put otherwise, which matches the increment
/// variance `σ² Δt`. Every node picks the volatility with the largest
/// one-step expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTree {
    pub depth: usize,
    /// Admissible volatilities, ascending; always contains `σ̲` and `σ̄`.
    pub volatilities: Vec<f64>,
    params: GParams,
}

impl ControlTree {
    pub fn new(params: &GParams, depth: usize, n_vol_choices: usize) -> Result<Self> {
        params.validate()?;
        if depth < 1 {
            return config("tree depth must be at least 1");
        }
        if n_vol_choices < 2 {
            return config("need at least two volatility choices");
        }
        let (lo, hi) = (params.sigma_lower(), params.sigma_upper());
        let volatilities = (0..n_vol_choices)
            .map(|k| {
                if k + 1 == n_vol_choices {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n_vol_choices - 1) as f64
                }
            })
            .collect();
        Ok(Self {
            depth,
            volatilities,
            params: *params,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.params.sigma_upper() / (self.depth as f64).sqrt()
    }

    /// Backward induction from `φ` at the leaves to the root value.
    pub fn value(&self, phi: &TestFunction) -> Result<f64> {
        let sigma_up_sq = self.params.sigma_upper_sq;
        if sigma_up_sq == 0.0 {
            return phi.eval_checked(0.0);
        }
        let n = self.depth;
        let h = self.spacing();
        // probability of each outer move under volatility σ
        let probs: Vec<f64> = self
            .volatilities
            .iter()
            .map(|s| (s * s / (2.0 * sigma_up_sq)).min(0.5))
            .collect();
        // nodes j = -n..=n stored at offset j + n
        let mut v = Vec::with_capacity(2 * n + 1);
        for k in 0..=2 * n {
            v.push(phi.eval_checked((k as f64 - n as f64) * h)?);
        }
        let mut next = v.clone();
        for level in (0..n).rev() {
            let lo = n - level;
            let hi = n + level;
            for k in lo..=hi {
                let d2 = v[k + 1] - 2.0 * v[k] + v[k - 1];
                // linear in p, so the best choice is an extreme probability
                let best = probs
                    .iter()
                    .map(|p| p * d2)
                    .fold(f64::NEG_INFINITY, f64::max);
                next[k] = v[k] + best;
            }
            std::mem::swap(&mut v, &mut next);
        }
        Ok(v[n])
    }
}

/// `sup_θ E[φ(∫₀¹ θ_s dB_s)]` on a lattice of the given depth.
pub fn control_tree_value(
    phi: &TestFunction,
    params: &GParams,
    depth: usize,
    n_vol_choices: usize,
) -> Result<f64> {
    ControlTree::new(params, depth, n_vol_choices)?.value(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gaussian_expect;

    #[test]
    fn square_is_exact_at_any_depth() {
        let p = GParams::variance(0.25, 1.0).unwrap();
        for depth in [1, 2, 7, 50] {
            let v = control_tree_value(&TestFunction::square(), &p, depth, 2).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "depth {depth}: {v}");
            let w = control_tree_value(&TestFunction::neg_square(), &p, depth, 3).unwrap();
            assert!((w + 0.25).abs() < 1e-12, "depth {depth}: {w}");
        }
    }

    #[test]
    fn endpoints_included() {
        let p = GParams::variance(0.25, 1.0).unwrap();
        let t = ControlTree::new(&p, 4, 5).unwrap();
        assert_eq!(t.volatilities.first(), Some(&0.5));
        assert_eq!(t.volatilities.last(), Some(&1.0));
        assert_eq!(t.volatilities.len(), 5);
        assert!(ControlTree::new(&p, 0, 2).is_err());
        assert!(ControlTree::new(&p, 3, 1).is_err());
    }

    #[test]
    fn classical_case_converges_to_gaussian() {
        let p = GParams::variance(1.0, 1.0).unwrap();
        let phi = TestFunction::from_tag("tanh").unwrap();
        let shifted = TestFunction::new("tanh(x+0.3)", 0, true, |x: f64| (x + 0.3).tanh());
        let exact = gaussian_expect(|x| shifted.eval(x), 1.0, 120);
        let coarse = (control_tree_value(&shifted, &p, 50, 2).unwrap() - exact).abs();
        let fine = (control_tree_value(&shifted, &p, 800, 2).unwrap() - exact).abs();
        assert!(fine < coarse);
        assert!(fine < 1e-3);
        assert!(control_tree_value(&phi, &p, 100, 2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn extra_choices_do_not_change_value() {
        // the one-step payoff is linear in σ², so interior choices never win
        let p = GParams::variance(0.25, 1.0).unwrap();
        let phi = TestFunction::clipped_ramp();
        let a = control_tree_value(&phi, &p, 300, 2).unwrap();
        let b = control_tree_value(&phi, &p, 300, 6).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

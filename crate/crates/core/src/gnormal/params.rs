use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Variance interval `[σ̲², σ̄²]` and mean interval `[μ̲, μ̄]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GParams {
    pub sigma_lower_sq: f64,
    pub sigma_upper_sq: f64,
    #[serde(default)]
    pub mu_lower: f64,
    #[serde(default)]
    pub mu_upper: f64,
}

impl GParams {
    pub fn new(
        sigma_lower_sq: f64,
        sigma_upper_sq: f64,
        mu_lower: f64,
        mu_upper: f64,
    ) -> Result<Self> {
        let p = Self {
            sigma_lower_sq,
            sigma_upper_sq,
            mu_lower,
            mu_upper,
        };
        p.validate()?;
        Ok(p)
    }

    /// Zero-mean parameters with variance uncertainty only.
    pub fn variance(sigma_lower_sq: f64, sigma_upper_sq: f64) -> Result<Self> {
        Self::new(sigma_lower_sq, sigma_upper_sq, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            sigma_lower_sq: lo,
            sigma_upper_sq: hi,
            mu_lower,
            mu_upper,
        } = *self;
        if !(lo.is_finite() && hi.is_finite() && mu_lower.is_finite() && mu_upper.is_finite()) {
            return config("G parameters must be finite");
        }
        if !(0.0 <= lo && lo <= hi) {
            return config(format!("need 0 ≤ σ̲² ≤ σ̄², got [{lo}, {hi}]"));
        }
        if mu_lower > mu_upper {
            return config(format!("need μ̲ ≤ μ̄, got [{mu_lower}, {mu_upper}]"));
        }
        Ok(())
    }

    pub fn sigma_lower(&self) -> f64 {
        self.sigma_lower_sq.sqrt()
    }

    pub fn sigma_upper(&self) -> f64 {
        self.sigma_upper_sq.sqrt()
    }

    /// Parameters of `ξ / t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            sigma_lower_sq: self.sigma_lower_sq / (t * t),
            sigma_upper_sq: self.sigma_upper_sq / (t * t),
            mu_lower: self.mu_lower / t,
            mu_upper: self.mu_upper / t,
        }
    }
}

/// `G(α) = ½(σ̄² α⁺ - σ̲² α⁻)`.
pub fn g_function(alpha: f64, params: &GParams) -> f64 {
    0.5 * (params.sigma_upper_sq * alpha.max(0.0) - params.sigma_lower_sq * (-alpha).max(0.0))
}

/// First-order generator of the maximal distribution: `μ̄ α⁺ - μ̲ α⁻`.
pub fn g_mean_function(alpha: f64, params: &GParams) -> f64 {
    params.mu_upper * alpha.max(0.0) - params.mu_lower * (-alpha).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_values() {
        let p = GParams::variance(0.25, 1.0).unwrap();
        assert_eq!(g_function(0.0, &p), 0.0);
        assert_eq!(g_function(2.0, &p), 1.0);
        assert_eq!(g_function(-2.0, &p), -0.25);
        let m = GParams::new(0.0, 0.0, -1.0, 2.0).unwrap();
        assert_eq!(g_mean_function(3.0, &m), 6.0);
        // sup of αx over [-1, 2]
        assert_eq!(g_mean_function(-3.0, &m), 3.0);
    }

    #[test]
    fn generator_is_sublinear() {
        let p = GParams::variance(0.3, 1.7).unwrap();
        for &(a, b) in &[(1.0, -2.0), (-0.5, -0.25), (3.0, 0.5), (-4.0, 4.0)] {
            assert!(g_function(a + b, &p) <= g_function(a, &p) + g_function(b, &p) + 1e-15);
            assert!((g_function(2.5 * a, &p) - 2.5 * g_function(a, &p)).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GParams::variance(1.0, 0.5).is_err());
        assert!(GParams::variance(-0.1, 0.5).is_err());
        assert!(GParams::new(0.1, 0.5, 1.0, 0.0).is_err());
        assert!(GParams::variance(0.0, f64::INFINITY).is_err());
        assert!(GParams::variance(0.0, 0.0).is_ok());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Smooth ramp `g_ε` with `1{x ≥ 1} ≤ g_ε(x) ≤ 1{x > 1-ε}`: zero below
/// `1-ε`, one above `1`, quintic smoothstep `6s⁵ - 15s⁴ + 10s³` in between.
pub fn smooth_indicator(x: f64, epsilon: f64) -> f64 {
    assert!(
        epsilon > 0.0 && epsilon < 1.0,
        "epsilon must lie in (0, 1), got {epsilon}"
    );
    let lo = 1.0 - epsilon;
    if x <= lo {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let s = (x - lo) / epsilon;
        s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

/// Exponential term of the Kolmogorov-type bound
/// `exp{-x²/(2(xy + B)) · (1 + ⅔ ln(1 + xy/B))}`.
pub fn kolmogorov_upper_bound(x: f64, y: f64, b_n: f64) -> Result<f64> {
    positive("x", x)?;
    positive("y", y)?;
    positive("B_n", b_n)?;
    let r = x * y / b_n;
    Ok((-x * x / (2.0 * (x * y + b_n)) * (1.0 + 2.0 / 3.0 * r.ln_1p())).exp())
}

/// `C_p δ^{-2p} M_{n,p} / x^p + exp{-x² / (2 B_n (1+δ))}`.
pub fn fuk_nagaev_bound(x: f64, delta: f64, p: f64, b_n: f64, m_np: f64, c_p: f64) -> Result<f64> {
    positive("x", x)?;
    positive("B_n", b_n)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return domain(format!("delta must lie in (0, 1], got {delta}"));
    }
    if !(p >= 2.0) {
        return domain(format!("p must be at least 2, got {p}"));
    }
    if !(m_np >= 0.0) {
        return domain(format!("M_n,p must be nonnegative, got {m_np}"));
    }
    if !(c_p >= 1.0) {
        return domain(format!("C_p must be at least 1, got {c_p}"));
    }
    Ok(
        c_p * delta.powf(-2.0 * p) * m_np / x.powf(p)
            + (-x * x / (2.0 * b_n * (1.0 + delta))).exp(),
    )
}

/// Constant of the Chebyshev-type form obtained from [`fuk_nagaev_bound`] at
/// `p = 2`, `δ = 1`: since `M_{n,2} = B_n` and `u e^{-u} ≤ e^{-1}`,
/// `exp{-x²/(4B)} ≤ (4/e) B/x²`, so `C = C_2 + 4/e`.
pub fn chebyshev_constant(c_2: f64) -> f64 {
    c_2 + 4.0 / std::f64::consts::E
}

/// `C · B_n / x²`.
pub fn chebyshev_bound(x: f64, b_n: f64, c: f64) -> Result<f64> {
    positive("x", x)?;
    if !(b_n >= 0.0) {
        return domain(format!("B_n must be nonnegative, got {b_n}"));
    }
    Ok(c * b_n / (x * x))
}

/// `p^p Σ C_V[(X_k⁺)^p] + C_p B_n^{p/2}`.
pub fn rosenthal_choquet_bound(
    p: f64,
    b_n: f64,
    per_step_choquet_pth: &[f64],
    c_p: f64,
) -> Result<f64> {
    if !(p >= 2.0) {
        return domain(format!("p must be at least 2, got {p}"));
    }
    if !(b_n >= 0.0) || per_step_choquet_pth.iter().any(|v| !(*v >= 0.0)) {
        return domain("moments must be nonnegative");
    }
    let s: f64 = per_step_choquet_pth.iter().sum();
    Ok(p.powf(p) * s + c_p * b_n.powf(p / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RosenthalVariant {
    /// `E[(S_n⁺)^p] ≤ C_p (M_{n,p} + B_n^{p/2})` for independent steps with `E[X_k] ≤ 0`.
    Independent,
    /// `E[max_k |S_k|^p] ≤ C_p (M_{n,p} + B_n^{p/2} + (Σ[(ε[X_k])⁻ + (E[X_k])⁺])^p)`.
    NdMax,
}

/// Per-step `(ε[X_k], E[X_k])` pairs feeding the mean correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanTerm {
    pub lower: f64,
    pub upper: f64,
}

pub fn rosenthal_moment_bound(
    p: f64,
    b_n: f64,
    m_np: f64,
    mean_terms: Option<&[MeanTerm]>,
    c_p: f64,
    variant: RosenthalVariant,
) -> Result<f64> {
    if !(p >= 2.0) {
        return domain(format!("p must be at least 2, got {p}"));
    }
    if !(b_n >= 0.0 && m_np >= 0.0) {
        return domain("moments must be nonnegative");
    }
    let base = m_np + b_n.powf(p / 2.0);
    match variant {
        RosenthalVariant::Independent => Ok(c_p * base),
        RosenthalVariant::NdMax => {
            let Some(terms) = mean_terms else {
                return domain("the ND-max variant needs per-step mean terms");
            };
            let corr: f64 = terms
                .iter()
                .map(|m| (-m.lower).max(0.0) + m.upper.max(0.0))
                .sum();
            Ok(c_p * (base + corr.powf(p)))
        }
    }
}

/// `exp{-((|b|/σ)² + δ) y²/2}` where `σ` is `σ̲` for the lower-capacity
/// statement and `σ̄` for the upper one.
pub fn lower_bound_exponent(b: f64, sigma_for_side: f64, delta: f64, y_n: f64) -> Result<f64> {
    positive("delta", delta)?;
    positive("y_n", y_n)?;
    let ratio = if b == 0.0 {
        0.0
    } else {
        positive("sigma", sigma_for_side)?;
        if b.abs() >= sigma_for_side {
            return domain(format!("need |b| < σ, got b = {b}, σ = {sigma_for_side}"));
        }
        (b / sigma_for_side).powi(2)
    };
    if ratio + delta >= 1.0 {
        return domain(format!("need (b/σ)² + δ < 1, got {}", ratio + delta));
    }
    Ok((-(ratio + delta) * y_n * y_n / 2.0).exp())
}

/// Truncation level `y = ρ δ x` with `ρ = 1 ∧ [2(1 + 1/δ) δ log(1/β)]⁻¹`,
/// where `β = x^{-p} Σ E[(X_k⁺)^p]` and `log t = ln(t ∨ e)`.
pub fn proof_truncation_level(x: f64, delta: f64, beta: f64) -> Result<f64> {
    positive("x", x)?;
    positive("delta", delta)?;
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    let log_inv = (1.0 / beta).max(std::f64::consts::E).ln();
    let rho = (1.0 / (2.0 * (1.0 + 1.0 / delta) * delta * log_inv)).min(1.0);
    Ok(rho * delta * x)
}

use super::params::GParams;
use crate::error::Result;
use crate::test_function::TestFunction;

const COARSE_POINTS: usize = 2001;
const REFINE_ITERATIONS: usize = 80;

/// `sup_{μ̲ ≤ x ≤ μ̄} φ(x)`: the expectation of `φ` under the maximal
/// distribution on the mean interval.
///
/// A uniform grid locates the best cell; golden-section search then refines
/// inside the two neighbouring cells. The result is the best value seen.
pub fn maximal_expect(phi: &TestFunction, params: &GParams) -> Result<f64> {
    params.validate()?;
    let (a, b) = (params.mu_lower, params.mu_upper);
    if a == b {
        return phi.eval_checked(a);
    }
    let h = (b - a) / (COARSE_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..COARSE_POINTS {
        let x = if i + 1 == COARSE_POINTS {
            b
        } else {
            a + i as f64 * h
        };
        let v = phi.eval_checked(x)?;
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + best_i.saturating_sub(1) as f64 * h;
    let hi = (a + (best_i + 1) as f64 * h).min(b);
    Ok(best.max(golden_max(phi, lo, hi)?))
}

fn golden_max(phi: &TestFunction, mut lo: f64, mut hi: f64) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = phi.eval_checked(x1)?;
    let mut f2 = phi.eval_checked(x2)?;
    let mut best = f1.max(f2);
    for _ in 0..REFINE_ITERATIONS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = phi.eval_checked(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = phi.eval_checked(x1)?;
        }
        best = best.max(f1).max(f2);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_params(lo: f64, hi: f64) -> GParams {
        GParams::new(0.0, 0.0, lo, hi).unwrap()
    }

    #[test]
    fn identity_takes_upper_mean() {
        assert_eq!(
            maximal_expect(&TestFunction::identity(), &mean_params(-1.0, 2.0)).unwrap(),
            2.0
        );
    }

    #[test]
    fn interior_maximum() {
        let v = maximal_expect(
            &TestFunction::from_tag("neg_abs").unwrap(),
            &mean_params(-1.0, 2.0),
        )
        .unwrap();
        assert!(v.abs() < 1e-12, "{v}");
        // peak between grid nodes
        let bump = TestFunction::new("bump", 2, true, |x: f64| -(x - 0.123_456_7).powi(2));
        let v = maximal_expect(&bump, &mean_params(-3.0, 5.0)).unwrap();
        assert!(v > -1e-14, "{v}");
    }

    #[test]
    fn degenerate_interval() {
        let phi = TestFunction::from_tag("cos").unwrap();
        assert_eq!(
            maximal_expect(&phi, &mean_params(0.5, 0.5)).unwrap(),
            0.5f64.cos()
        );
    }
}

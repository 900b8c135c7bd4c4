//! Gauss–Hermite quadrature, used as the classical Gaussian reference that the
//! PDE solver and the control tree are checked against.

use std::f64::consts::PI;

/// Nodes and weights for `∫ e^{-x²} f(x) dx ≈ Σ w_i f(x_i)`.
///
/// Newton iteration on the orthonormal Hermite recurrence with the usual
/// asymptotic starting guesses; stable for a few hundred nodes.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E[f(σZ)]` for standard normal `Z` with `n` Gauss–Hermite nodes.
pub fn gaussian_expect<F: Fn(f64) -> f64>(f: F, sigma: f64, n: usize) -> f64 {
    let (x, w) = gauss_hermite(n);
    let s = std::f64::consts::SQRT_2 * sigma;
    x.iter().zip(&w).map(|(xi, wi)| wi * f(s * xi)).sum::<f64>() / PI.sqrt()
}

/// Adaptive Simpson integral of `f` over `[a, b]`; `breaks` are interior
/// points where `f` may jump or kink, integrated piecewise.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| simpson_segment(&f, w[0], w[1], tol))
        .sum()
}

/// `∫_a^∞ f`, mapped onto `[0, 1)` by `u = a + t/(1-t)`. `f` must decay fast
/// enough for the transformed integrand to stay integrable.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, breaks: &[f64], tol: f64) -> f64 {
    let to_t = |u: f64| (u - a) / (1.0 + u - a);
    let tb: Vec<f64> = breaks
        .iter()
        .filter(|&&u| u > a)
        .map(|&u| to_t(u))
        .collect();
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - t;
        let v = f(a + t / d) / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, &tb, tol)
}

fn simpson_segment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    // open at the ends: a jump sitting exactly on an endpoint must not leak in
    let shrink = 8.0 * f64::EPSILON * a.abs().max(b.abs()).max(b - a);
    let (a, b) = (a + shrink, b - shrink);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_moments() {
        for n in [5, 20, 80, 160] {
            assert!(
                (gaussian_expect(|_| 1.0, 1.0, n) - 1.0).abs() < 1e-12,
                "n={n}"
            );
            assert!((gaussian_expect(|x| x * x, 2.0, n) - 4.0).abs() < 1e-11);
            assert!(gaussian_expect(|x| x * x * x, 1.0, n).abs() < 1e-11);
        }
        assert!((gaussian_expect(|x| x.powi(4), 1.0, 10) - 3.0).abs() < 1e-11);
        // E[cos(Z)] = e^{-1/2}
        assert!((gaussian_expect(f64::cos, 1.0, 40) - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn adaptive_simpson() {
        let v = integrate(|x| x * x * x, 0.0, 2.0, &[], 1e-13);
        assert!((v - 4.0).abs() < 1e-12);
        // unit jump at 0.3
        let v = integrate(|x| if x < 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, &[0.3], 1e-13);
        assert!((v - 0.3).abs() < 1e-12);
        let v = integrate_to_infinity(|x| (-x).exp(), 0.0, &[], 1e-12);
        assert!((v - 1.0).abs() < 1e-9, "{v}");
        let v = integrate_to_infinity(|x| 3.0 * x.powi(-4), 1.0, &[], 1e-12);
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }
}

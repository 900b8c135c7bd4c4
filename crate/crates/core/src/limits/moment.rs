use serde::{Deserialize, Serialize};

use super::lil::{lil_normalizer, log_e, log_log};
use crate::error::{config, Result};
use crate::quadrature::integrate;
use crate::sim::{StepChoice, StepFamily};

/// Terms summed one by one up to here; beyond, blocks are integrated.
pub const EXACT_TERMS: usize = 10_000;

/// A decade increment below this counts as zero.
pub const NEGLIGIBLE_INCREMENT: f64 = 1e-12;

/// Successive decade increments shrinking faster than this ratio count as
/// convergent.
pub const CONVERGENT_RATIO: f64 = 0.75;

const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesClass {
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub label: String,
    /// `(N, partial sum up to N)` at decades.
    pub partial_sums: Vec<(f64, f64)>,
    pub last_increment: f64,
    /// Last decade increment over the one before.
    pub increment_ratio: f64,
    pub class: SeriesClass,
}

impl SeriesReport {
    fn classify(label: String, partial_sums: Vec<(f64, f64)>) -> Self {
        let k = partial_sums.len();
        let inc = |j: usize| partial_sums[j].1 - partial_sums[j - 1].1;
        let (last, ratio) = if k >= 3 {
            let last = inc(k - 1);
            let prev = inc(k - 2);
            (last, if prev > 0.0 { last / prev } else { 0.0 })
        } else {
            (f64::NAN, f64::NAN)
        };
        let class = if last <= NEGLIGIBLE_INCREMENT || ratio < CONVERGENT_RATIO {
            SeriesClass::Convergent
        } else {
            SeriesClass::Divergent
        };
        Self {
            label,
            partial_sums,
            last_increment: last,
            increment_ratio: ratio,
            class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheckReport {
    pub family: String,
    pub tail_profile: String,
    /// `Σ_{n ≤ N} V(|X| ≥ δ a_n)` per `δ`.
    pub series: Vec<SeriesReport>,
    /// `∫₀^T V(|X| > x) h'(x) dx` with `h(x) = x² / log log x`.
    pub integral: SeriesReport,
    /// `Σ_{n ≤ N} E[(|X| ∧ δ a_n)^p] / a_n^p` per `δ`, with `p = 3`.
    pub truncated_moment_series: Vec<SeriesReport>,
    /// The integral converges.
    pub satisfies_condition: bool,
    /// Every series has the same class as the integral.
    pub classes_agree: bool,
}

/// `V(|X| > x)` for the worst member: the maximum over the corner choices.
pub fn worst_case_abs_tail(family: &StepFamily, corners: &[StepChoice], x: f64) -> f64 {
    corners
        .iter()
        .map(|c| (family.tail_upper(c, x) + family.tail_lower(c, x)).min(1.0))
        .fold(0.0, f64::max)
}

/// `h'(x)` for `h(x) = x² / log log x`.
fn h_prime(x: f64) -> f64 {
    let ll = log_log(x);
    if x <= std::f64::consts::E.powf(std::f64::consts::E) {
        2.0 * x
    } else {
        x * (2.0 / ll - 1.0 / (ll * ll * log_e(x)))
    }
}

fn decades(n_max: f64) -> Vec<f64> {
    let mut d = Vec::new();
    let mut x = 10.0;
    while x < n_max * (1.0 + 1e-12) {
        d.push(x);
        x *= 10.0;
    }
    d
}

/// `Σ_{n=1}^{N} f(n)` at every decade `N ≤ n_max`: exact up to
/// [`EXACT_TERMS`], integrated over `[n - ½, n_next - ½]` blocks beyond.
fn decade_sums<F: Fn(f64) -> f64>(f: F, n_max: f64) -> Vec<(f64, f64)> {
    let marks = decades(n_max);
    let mut out = Vec::with_capacity(marks.len());
    let mut total = 0.0;
    let mut n = 1usize;
    for &m in &marks {
        let m_int = m as usize;
        while n <= m_int.min(EXACT_TERMS) {
            total += f(n as f64);
            n += 1;
        }
        if m_int > EXACT_TERMS && n <= m_int {
            total += integrate(
                &f,
                n as f64 - 0.5,
                m_int as f64 + 0.5,
                &[],
                QUAD_TOL.max(total * 1e-12),
            );
            n = m_int + 1;
        }
        out.push((m, total));
    }
    out
}

fn decade_integral<F: Fn(f64) -> f64>(f: F, t_max: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut total = integrate(&f, 0.0, 10.0, breaks, QUAD_TOL);
    out.push((10.0, total));
    let mut a = 10.0;
    for &m in decades(t_max).iter().skip(1) {
        total += integrate(&f, a, m, breaks, QUAD_TOL);
        out.push((m, total));
        a = m;
    }
    out
}

/// Cumulative `∫₀^c p x^{p-1} V(|X| > x) dx` on a geometric grid.
struct TruncatedMoment {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TruncatedMoment {
    fn build<F: Fn(f64) -> f64>(tail: F, p: f64, c_max: f64, breaks: &[f64]) -> Self {
        let g = |x: f64| p * x.powf(p - 1.0) * tail(x);
        let mut grid = vec![0.0, 1e-3];
        let mut values = vec![0.0, integrate(g, 0.0, 1e-3, breaks, QUAD_TOL)];
        let mut c = 1e-3;
        while c < c_max {
            let next = (c * 1.01).min(c_max);
            let v =
                values.last().copied().expect("nonempty") + integrate(g, c, next, breaks, QUAD_TOL);
            grid.push(next);
            values.push(v);
            c = next;
        }
        Self { grid, values }
    }

    fn at(&self, c: f64) -> f64 {
        let i = self.grid.partition_point(|&g| g < c);
        if i == 0 {
            return 0.0;
        }
        if i >= self.grid.len() {
            return *self.values.last().expect("nonempty");
        }
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let w = (c - x0) / (x1 - x0);
        self.values[i - 1] + w * (self.values[i] - self.values[i - 1])
    }
}

/// Evaluates both sides of the equivalence between the normalised tail
/// series and the Choquet moment `C_V[X²/log log |X|]` for the family's
/// worst-case member, plus the truncated-moment series.
pub fn choquet_moment_check(
    family: &StepFamily,
    deltas: &[f64],
    n_max: f64,
    t_max: f64,
) -> Result<MomentCheckReport> {
    family.validate()?;
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return config("deltas must be positive");
    }
    if !(n_max >= 1000.0 && t_max >= 1000.0) {
        return config("need n_max and t_max of at least 1000 to see three decades");
    }
    let corners = family.corner_choices();
    let tail = |x: f64| worst_case_abs_tail(family, &corners, x);
    let mut breaks: Vec<f64> = vec![std::f64::consts::E.powf(std::f64::consts::E)];
    if let Some(s) = family.shape.support_bound() {
        for c in &corners {
            breaks.push(c.mean.abs() + c.variance.sqrt() * s);
        }
    }
    if let Some(y) = family.truncate_at {
        breaks.push(y);
    }
    breaks.sort_by(f64::total_cmp);

    let series: Vec<SeriesReport> = deltas
        .iter()
        .map(|&d| {
            // `≥` via the limit from the left of the `>` tail
            let f = |n: f64| tail(d * lil_normalizer(n) * (1.0 - 1e-12));
            SeriesReport::classify(format!("tail-series(delta={d})"), decade_sums(f, n_max))
        })
        .collect();
    let integral = SeriesReport::classify(
        "choquet-integral".into(),
        decade_integral(
            |x| if x == 0.0 { 0.0 } else { tail(x) * h_prime(x) },
            t_max,
            &breaks,
        ),
    );
    let p = 3.0;
    let c_max = deltas.iter().copied().fold(0.0, f64::max) * lil_normalizer(n_max) * 1.01;
    let table = TruncatedMoment::build(tail, p, c_max, &breaks);
    let truncated_moment_series: Vec<SeriesReport> = deltas
        .iter()
        .map(|&d| {
            let f = |n: f64| {
                let a = lil_normalizer(n);
                table.at(d * a) / a.powf(p)
            };
            SeriesReport::classify(
                format!("truncated-moment-series(delta={d},p={p})"),
                decade_sums(f, n_max),
            )
        })
        .collect();
    let satisfies_condition = integral.class == SeriesClass::Convergent;
    let classes_agree = series.iter().all(|s| s.class == integral.class);
    Ok(MomentCheckReport {
        family: family.tag(),
        tail_profile: family.shape.tail_profile().into(),
        series,
        integral,
        truncated_moment_series,
        satisfies_condition,
        classes_agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnormal::GParams;
    use crate::sim::StepShape;

    fn fam(shape: StepShape) -> StepFamily {
        StepFamily::new(shape, GParams::variance(0.25, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn classes() {
        let deltas = [0.5, 1.0];
        let b = choquet_moment_check(&fam(StepShape::TwoPoint), &deltas, 1e6, 1e6).unwrap();
        assert!(b.satisfies_condition && b.classes_agree);
        assert_eq!(b.series[0].last_increment, 0.0);
        let g = choquet_moment_check(&fam(StepShape::Gaussian), &deltas, 1e6, 1e6).unwrap();
        assert!(g.satisfies_condition && g.classes_agree);
        let pa = choquet_moment_check(&fam(StepShape::Pareto { alpha: 2.0 }), &deltas, 1e6, 1e6)
            .unwrap();
        assert!(!pa.satisfies_condition && pa.classes_agree, "{pa:#?}");
        assert!(pa
            .truncated_moment_series
            .iter()
            .all(|s| s.class == SeriesClass::Divergent));
        assert!(g
            .truncated_moment_series
            .iter()
            .all(|s| s.class == SeriesClass::Convergent));
    }

    #[test]
    fn pareto_integral_matches_closed_form() {
        // symmetric Pareto(2) with unit scale: V(|X| > x) = x^{-2} for x ≥ 1, so
        // the integrand is 2/(x log log x) beyond e^e
        let r =
            choquet_moment_check(&fam(StepShape::Pareto { alpha: 2.0 }), &[1.0], 1e4, 1e6).unwrap();
        let ps = &r.integral.partial_sums;
        let inc = ps[5].1 - ps[4].1;
        let oracle = integrate(
            |x: f64| 2.0 / (x * x.ln().ln()) - 1.0 / (x * x.ln() * x.ln().ln().powi(2)),
            1e5,
            1e6,
            &[],
            1e-12,
        );
        assert!((inc - oracle).abs() < 1e-8 * oracle, "{inc} vs {oracle}");
    }

    #[test]
    fn exact_and_block_sums_agree() {
        let f = |n: f64| 1.0 / (n * n);
        let s = decade_sums(f, 1e6);
        let exact: f64 = (1..=1_000_000).map(|n| f(n as f64)).sum();
        assert!((s.last().unwrap().1 - exact).abs() < 1e-9);
    }
}

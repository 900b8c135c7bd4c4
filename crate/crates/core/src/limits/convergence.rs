use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::gnormal::{gnormal_expect_with_growth, maximal_expect};
use crate::sim::{simulate_family, sup_mean, AdversaryPolicy, SimOptions, StepFamily};
use crate::test_function::TestFunction;

/// Grid size of the G-heat reference.
pub const REFERENCE_NX: usize = 2001;

/// Two adjacent errors count as nonincreasing when the later one exceeds
/// the earlier by at most this many combined standard errors.
pub const TREND_SE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `max_policy mean φ(S_n / r_n)`.
    pub estimate: f64,
    pub standard_error: f64,
    pub best_policy: String,
    pub error: f64,
    /// Mean per policy.
    pub per_policy: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub phi: String,
    pub family: String,
    /// `√n` for the central limit, `n` for the law of large numbers.
    pub scaling: String,
    pub reference: f64,
    pub rows: Vec<ConvergenceRow>,
    pub nonincreasing: bool,
    pub final_error: f64,
}

fn check_n_list(n_list: &[usize], n_paths: usize) -> Result<()> {
    if n_list.is_empty() || n_list.iter().any(|&n| n < 1) || n_paths < 2 {
        return config("need a nonempty n_list of positive sizes and n_paths ≥ 2");
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return config("n_list must be strictly increasing");
    }
    Ok(())
}

/// Each `n` gets its own simulation so horizon-aware policies see the right `n`.
fn table(
    phi: &TestFunction,
    family: &StepFamily,
    policies: &[AdversaryPolicy],
    n_list: &[usize],
    n_paths: usize,
    seed: u64,
    reference: f64,
    scale: fn(usize) -> f64,
    scaling: &str,
) -> Result<ConvergenceTable> {
    let mut rows = Vec::with_capacity(n_list.len());
    for (j, &n) in n_list.iter().enumerate() {
        let batches = simulate_family(
            family,
            policies,
            n,
            n_paths,
            seed.wrapping_add(j as u64),
            &SimOptions::default(),
        )?;
        let r = scale(n);
        let est = sup_mean(&batches, |p| phi.eval(p.final_sum / r));
        if !est.value.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite estimate of {} at n = {n}",
                phi.tag()
            )));
        }
        rows.push(ConvergenceRow {
            n,
            estimate: est.value,
            standard_error: est.standard_error,
            best_policy: batches[est.best_policy].policy.clone(),
            error: (est.value - reference).abs(),
            per_policy: est
                .per_policy
                .iter()
                .map(|(l, m, _)| (l.clone(), *m))
                .collect(),
        });
    }
    let nonincreasing = rows.windows(2).all(|w| {
        w[1].error <= w[0].error + TREND_SE * w[0].standard_error.hypot(w[1].standard_error)
    });
    Ok(ConvergenceTable {
        phi: phi.tag().into(),
        family: family.tag(),
        scaling: scaling.into(),
        reference,
        final_error: rows.last().expect("nonempty").error,
        rows,
        nonincreasing,
    })
}

/// `max_policy E[φ(S_n/√n)]` against the G-normal value of `φ`.
pub fn clt_experiment(
    phi: &TestFunction,
    family: &StepFamily,
    policies: &[AdversaryPolicy],
    n_list: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    check_n_list(n_list, n_paths)?;
    family.validate()?;
    let g = phi.growth_order();
    if g > 2 && !family.shape.has_moment(g as f64) {
        return Err(Error::Rejected(format!(
            "`{}` grows like |x|^{g}; convergence needs E[|X_1|^p] < ∞ for some p > 2 covering it, which {} lacks",
            phi.tag(),
            family.shape.tag()
        )));
    }
    if !family.shape.finite_variance() {
        return Err(Error::Rejected(format!(
            "{} has infinite variance",
            family.shape.tag()
        )));
    }
    if !family.is_centered() {
        return Err(Error::Rejected(
            "the central limit needs E[X] = E[-X] = 0".into(),
        ));
    }
    let reference = gnormal_expect_with_growth(phi, &family.params, REFERENCE_NX, g.max(2))?;
    table(
        phi,
        family,
        policies,
        n_list,
        n_paths,
        seed,
        reference,
        |n| (n as f64).sqrt(),
        "sqrt-n",
    )
}

/// `max_policy E[φ(S_n/n)]` against `max_{μ̲ ≤ x ≤ μ̄} φ(x)`.
pub fn wlln_experiment(
    phi: &TestFunction,
    family: &StepFamily,
    policies: &[AdversaryPolicy],
    n_list: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    check_n_list(n_list, n_paths)?;
    family.validate()?;
    if !family.shape.has_moment(1.0) {
        return Err(Error::Rejected(format!(
            "{} has no finite mean",
            family.shape.tag()
        )));
    }
    let reference = maximal_expect(phi, &family.params)?;
    table(
        phi,
        family,
        policies,
        n_list,
        n_paths,
        seed,
        reference,
        |n| n as f64,
        "n",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnormal::GParams;
    use crate::sim::{standard_policies, StepShape};

    #[test]
    fn square_is_exact_under_max_variance() {
        let fam = StepFamily::two_point(0.25, 1.0).unwrap();
        let pol = [AdversaryPolicy::constant(0.0, 1.0)];
        let t = clt_experiment(&TestFunction::square(), &fam, &pol, &[10, 100], 2000, 5).unwrap();
        assert!((t.reference - 1.0).abs() < 1e-3);
        for r in &t.rows {
            assert!(
                (r.estimate - 1.0).abs() < 5.0 * r.standard_error + 1e-12,
                "{r:?}"
            );
        }
    }

    #[test]
    fn wlln_mean_max() {
        let p = GParams::new(1.0, 1.0, -1.0, 1.0).unwrap();
        let fam = StepFamily::new(StepShape::Gaussian, p).unwrap();
        let pols = standard_policies(&p);
        let id =
            wlln_experiment(&TestFunction::identity(), &fam, &pols, &[100, 1000], 500, 9).unwrap();
        assert_eq!(id.reference, 1.0);
        assert!(id.final_error < 0.01);
        let sq = TestFunction::from_tag("sq_shift:1").unwrap();
        let t = wlln_experiment(
            &sq,
            &fam,
            &[AdversaryPolicy::constant(1.0, 1.0)],
            &[100, 1000],
            500,
            9,
        )
        .unwrap();
        // the maximal value sits at the other end of the mean interval
        assert!((t.reference - 4.0).abs() < 1e-9);
        assert!((t.rows[1].estimate - 1e-3).abs() < 5e-4);
    }

    #[test]
    fn growth_and_mean_preconditions() {
        let fam = StepFamily::new(
            StepShape::StudentT { dof: 3.0 },
            GParams::variance(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let pol = [AdversaryPolicy::constant(0.0, 1.0)];
        let cube = TestFunction::from_tag("cube").unwrap();
        assert!(matches!(
            clt_experiment(&cube, &fam, &pol, &[10], 10, 1),
            Err(Error::Rejected(_))
        ));
        let m = StepFamily::new(
            StepShape::Gaussian,
            GParams::new(1.0, 1.0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(clt_experiment(&TestFunction::abs(), &m, &pol, &[10], 10, 1).is_err());
        assert!(clt_experiment(&TestFunction::abs(), &m, &pol, &[10, 10], 10, 1).is_err());
    }
}

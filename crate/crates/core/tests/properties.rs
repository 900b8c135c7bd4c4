use proptest::prelude::*;

use sublinear_core::gnormal::{
    control_tree_value, gnormal_expect, gnormal_expect_with_growth, solve_g_heat, PdeGrid,
};
use sublinear_core::ineq::smooth_indicator;
use sublinear_core::limits::REFERENCE_NX;
use sublinear_core::quadrature::gaussian_expect;
use sublinear_core::scenario::{
    holder_check, independent_product, nested_conjugate_expect, nested_expect,
};
use sublinear_core::sim::{
    lower_capacity_from, simulate_family, simulate_paths, standard_policies, upper_capacity_from,
    AdversaryPolicy, SimOptions, StepFamily,
};
use sublinear_core::{CapacityKind, DiscreteDistribution, GParams, ScenarioSet, TestFunction};

const EXACT: f64 = 1e-12;

fn distribution(values: Vec<f64>, weights: Vec<f64>) -> DiscreteDistribution {
    let total: f64 = weights.iter().sum();
    DiscreteDistribution::new(
        values
            .into_iter()
            .zip(weights)
            .map(|(v, w)| (v, w / total))
            .collect(),
    )
    .unwrap()
}

fn member(lo: f64, hi: f64, max_atoms: usize) -> impl Strategy<Value = DiscreteDistribution> {
    (1..=max_atoms).prop_flat_map(move |k| {
        (
            prop::collection::vec(lo..hi, k),
            prop::collection::vec(0.01f64..1.0, k),
        )
            .prop_map(|(v, w)| distribution(v, w))
    })
}

fn set(
    lo: f64,
    hi: f64,
    max_members: usize,
    max_atoms: usize,
) -> impl Strategy<Value = ScenarioSet> {
    prop::collection::vec(member(lo, hi, max_atoms), 1..=max_members)
        .prop_map(|m| ScenarioSet::new(m).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sublinear_axioms(s in set(-5.0, 5.0, 5, 6), c in -3.0f64..3.0, lambda in 0.0f64..4.0) {
        let f = |x: &f64| x.sin() + 0.3 * x;
        let g = |x: &f64| x * x - 1.0;
        let ef = s.sublinear_expect(f).unwrap();
        let eg = s.sublinear_expect(g).unwrap();
        // monotonicity: f ≤ f + g² pointwise
        prop_assert!(ef <= s.sublinear_expect(|x| f(x) + g(x) * g(x)).unwrap() + EXACT);
        prop_assert!(close(s.sublinear_expect(|_| c).unwrap(), c, EXACT));
        prop_assert!(s.sublinear_expect(|x| f(x) + g(x)).unwrap() <= ef + eg + EXACT);
        prop_assert!(close(s.sublinear_expect(|x| lambda * f(x)).unwrap(), lambda * ef, EXACT));
        prop_assert!(s.conjugate_expect(f).unwrap() <= ef + EXACT);
        prop_assert!(close(s.sublinear_expect(|x| f(x) + c).unwrap(), ef + c, EXACT));
        prop_assert!(s.sublinear_expect(|x| f(x) - g(x)).unwrap() >= ef - eg - EXACT);
    }

    #[test]
    fn capacity_relations(s in set(-3.0, 3.0, 5, 6), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let in_a = |x: &f64| *x <= a;
        let in_b = |x: &f64| *x > b;
        let up = s.upper_capacity(|x| in_a(x) || in_b(x));
        prop_assert!(up <= s.upper_capacity(in_a) + s.upper_capacity(in_b) + EXACT);
        prop_assert!(s.lower_capacity(|x| in_a(x) || in_b(x)) <= s.lower_capacity(in_a) + s.upper_capacity(in_b) + EXACT);
        prop_assert!(s.conjugate_expect(|x| x + x.cos()).unwrap()
            <= s.conjugate_expect(|x| *x).unwrap() + s.sublinear_expect(|x| x.cos()).unwrap() + EXACT);
        prop_assert!(close(s.lower_capacity(in_a), 1.0 - s.upper_capacity(|x| !in_a(x)), EXACT));
        prop_assert!(s.lower_capacity(in_a) <= s.upper_capacity(in_a) + EXACT);
    }

    #[test]
    fn choquet_of_singleton_is_linear(m in member(-4.0, 4.0, 6)) {
        let s = ScenarioSet::singleton(m.clone());
        let f = |x: &f64| x.powi(3) - x;
        let linear = m.expect(f);
        for kind in [CapacityKind::Upper, CapacityKind::Lower] {
            prop_assert!(close(s.choquet_integral(kind, f).unwrap(), linear, 1e-10));
        }
    }

    #[test]
    fn holder_on_random_sets(s in set(-3.0, 3.0, 5, 6), p in 1.2f64..6.0) {
        let q = p / (p - 1.0);
        prop_assert!(holder_check(&s, |x| x.cos() + x, |x| x * x - 0.5, p, q).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_identities(x in set(0.0, 3.0, 4, 5), y in set(0.0, 3.0, 4, 5)) {
        let joint = independent_product(&x, &y).unwrap();
        let phi = |a: f64, b: f64| (a - 1.0) * (b - 1.5) + (a * b).sin();
        prop_assert!(close(joint.sublinear_expect(|p| phi(p[0], p[1])).unwrap(), nested_expect(&x, &y, phi).unwrap(), 1e-10));
        prop_assert!(close(
            joint.conjugate_expect(|p| phi(p[0], p[1])).unwrap(),
            nested_conjugate_expect(&x, &y, phi).unwrap(),
            1e-10
        ));
        let exy = joint.sublinear_expect(|p| p[0] * p[1]).unwrap();
        let ex = x.sublinear_expect(|v| *v).unwrap();
        let ey = y.sublinear_expect(|v| *v).unwrap();
        prop_assert!(close(exy, ex * ey, 1e-10));
        let cxy = joint.conjugate_expect(|p| p[0] * p[1]).unwrap();
        let cx = x.conjugate_expect(|v| *v).unwrap();
        let cy = y.conjugate_expect(|v| *v).unwrap();
        prop_assert!(close(cxy, cx * cy, 1e-10));
    }
}

fn fixed_grid(nx: usize) -> PdeGrid {
    PdeGrid {
        x_min: -10.0,
        x_max: 10.0,
        nx,
        t_horizon: 1.0,
        nt: PdeGrid::stable_steps(-10.0, 10.0, nx, 1.0, 1.0),
    }
}

fn mixture(a: f64, b: f64, c: f64) -> TestFunction {
    TestFunction::new(format!("mix({a},{b},{c})"), 2, true, move |x: f64| {
        a * x.tanh() + b * (2.0 * x).cos() + c * x * x
    })
}

fn params() -> GParams {
    GParams::variance(0.25, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pde_comparison_and_subadditivity(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -0.5f64..0.5,
        d in -1.0f64..1.0, e in -1.0f64..1.0, bump in 0.0f64..2.0,
    ) {
        let grid = fixed_grid(201);
        let p = params();
        let f1 = mixture(a, b, c);
        let f2 = mixture(d, e, -c);
        let above = f1.sum(&TestFunction::small_ball(2.0).scaled(bump));
        let u1 = solve_g_heat(&f1, &p, &grid).unwrap();
        let u2 = solve_g_heat(&f2, &p, &grid).unwrap();
        let up = solve_g_heat(&above, &p, &grid).unwrap();
        let us = solve_g_heat(&f1.sum(&f2), &p, &grid).unwrap();
        for k in 0..u1.values.len() {
            for i in 0..grid.nx {
                let (v1, v2) = (u1.values[k][i], u2.values[k][i]);
                prop_assert!(v1 <= up.values[k][i] + EXACT * (1.0 + v1.abs()));
                prop_assert!(us.values[k][i] <= v1 + v2 + EXACT * (1.0 + v1.abs() + v2.abs()));
            }
        }
    }

    #[test]
    fn pde_preserves_constants(c in -100.0f64..100.0) {
        let u = solve_g_heat(&TestFunction::constant(c), &params(), &fixed_grid(101)).unwrap();
        prop_assert!(u.values.iter().flatten().all(|&v| v == c));
    }

    #[test]
    fn scaling(a in -1.0f64..1.0, b in -1.0f64..1.0, t in 0.5f64..3.0) {
        let p = params();
        let f = mixture(a, b, 0.0);
        let lhs = gnormal_expect(&f.rescaled(t), &p, 401).unwrap();
        let rhs = gnormal_expect(&f, &p.scaled(t), 401).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-6, "{lhs} vs {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn convex_and_concave_match_classical(a in 0.1f64..1.0, m in -1.0f64..1.0, k in -1.0f64..1.0) {
        let p = params();
        let convex = TestFunction::new("convex", 2, true, move |x: f64| a * (x - m) * (x - m) + (1.0 + (x - k).exp()).ln());
        let hi = gnormal_expect(&convex, &p, REFERENCE_NX).unwrap();
        let hi_ref = gaussian_expect(|x| convex.eval(x), 1.0, 64);
        prop_assert!((hi - hi_ref).abs() <= 1e-3, "{hi} vs {hi_ref}");
        let concave = convex.scaled(-1.0);
        let lo = gnormal_expect(&concave, &p, REFERENCE_NX).unwrap();
        let lo_ref = gaussian_expect(|x| concave.eval(x), 0.5, 64);
        prop_assert!((lo - lo_ref).abs() <= 1e-3, "{lo} vs {lo_ref}");
    }

    #[test]
    fn quartic_needs_a_wider_growth_limit(s2 in 0.25f64..1.0) {
        let p = GParams::variance(s2 * 0.5, s2).unwrap();
        let q = TestFunction::from_tag("quartic").unwrap();
        prop_assert!(gnormal_expect(&q, &p, 401).is_err());
        let v = gnormal_expect_with_growth(&q, &p, REFERENCE_NX, 4).unwrap();
        prop_assert!((v - 3.0 * s2 * s2).abs() <= 1e-2 * s2 * s2, "{v}");
    }
}

#[test]
fn tree_and_pde_gap_shrinks_under_refinement() {
    let p = params();
    let mut gaps = Vec::new();
    for (depth, nx) in [(25, 201), (100, 801), (400, REFERENCE_NX)] {
        let mut gap = 0.0f64;
        for tag in ["tanh", "cos"] {
            let f = TestFunction::from_tag(tag).unwrap();
            let pde = gnormal_expect(&f, &p, nx).unwrap();
            let tree = control_tree_value(&f, &p, depth, 3).unwrap();
            gap = gap.max((pde - tree).abs());
        }
        println!("depth {depth:>4}  nx {nx:>5}  |PDE - tree| = {gap:.3e}");
        gaps.push(gap);
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn smooth_indicator_sandwich() {
    for eps in [0.01, 0.1, 0.5, 0.9] {
        for i in 0..=200_000 {
            let x = -1.0 + 3.0 * i as f64 / 200_000.0;
            let g = smooth_indicator(x, eps);
            let lo = if x >= 1.0 { 1.0 } else { 0.0 };
            let hi = if x > 1.0 - eps { 1.0 } else { 0.0 };
            assert!(lo <= g && g <= hi, "x={x} eps={eps} g={g}");
        }
    }
}

#[test]
fn capacity_estimators() {
    let fam = StepFamily::two_point(0.25, 1.0).unwrap();
    let pols = standard_policies(&fam.params);
    let batches = simulate_family(&fam, &pols, 50, 2000, 11, &SimOptions::default()).unwrap();
    for x in [-2.0, 0.0, 1.0, 3.0, 6.0] {
        let ev = |p: &sublinear_core::sim::PathSummary| p.final_sum >= x;
        let lo = lower_capacity_from(&batches, ev);
        let hi = upper_capacity_from(&batches, ev);
        assert!(lo.value <= hi.value, "x={x}");
        let mut last = 0.0;
        for k in 1..=batches.len() {
            let v = upper_capacity_from(&batches[..k], ev).value;
            assert!(v >= last);
            last = v;
        }
    }
}

#[test]
fn simulation_is_reproducible() {
    let fam = StepFamily::two_point(0.25, 1.0).unwrap();
    let pol = AdversaryPolicy::constant(0.0, 1.0);
    let a = simulate_paths(&fam, &pol, 300, 500, 5).unwrap();
    let b = simulate_paths(&fam, &pol, 300, 500, 5).unwrap();
    assert_eq!(a, b);
    let c = simulate_paths(&fam, &pol, 300, 500, 6).unwrap();
    assert_ne!(a, c);
}

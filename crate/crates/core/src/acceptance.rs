//! The acceptance criteria as runnable checks, shared by the `acceptance`
//! integration test and the `selftest` subcommand.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{build_policies, PolicySpec};
use crate::error::{Error, Result};
use crate::gnormal::{control_tree_value, gnormal_expect, GParams};
use crate::ineq::{
    canned_config, shipped_families, verify_bound, BoundName, VerifyConfig, VerifyOutcome,
};
use crate::limits::{
    choquet_moment_check, clt_experiment, lil_experiment, LilConfig, LilExperiment, SeriesClass,
    REFERENCE_NX,
};
use crate::quadrature::gaussian_expect;
use crate::scenario::{independent_product, nested_expect, DiscreteDistribution, ScenarioSet};
use crate::sim::{AdversaryPolicy, StepFamily, StepShape};
use crate::test_function::TestFunction;

/// Tolerance of the exact identities in criteria 1 and 2.
pub const IDENTITY_TOL: f64 = 1e-10;
/// G-normal oracle tolerances of criterion 3.
pub const QUADRATIC_TOL: f64 = 1e-3;
pub const TREE_TOL: f64 = 1e-2;
pub const TREE_DEPTH: usize = 2000;
pub const QUADRATURE_TOL: f64 = 1e-3;
/// Final CLT error allowed by criterion 7.
pub const CLT_FINAL_TOL: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// The sizes stated in the criteria.
    Full,
    /// Reduced sizes for smoke runs and the determinism replays.
    Quick,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {:<28} {:>7.1}s / {:>4.0}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_secs,
            self.budget_secs,
            self.detail
        )
    }
}

/// FNV-1a over the bit patterns of the aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Digest(pub u64);

impl Default for Digest {
    fn default() -> Self {
        Digest(0xcbf2_9ce4_8422_2325)
    }
}

impl Digest {
    pub fn push(&mut self, x: f64) {
        for b in x.to_bits().to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100_0000_01b3);
        }
    }

    fn outcome(&mut self, o: &VerifyOutcome) {
        for r in &o.reports {
            self.push(r.analytic_value);
            self.push(r.empirical_estimate);
            self.push(r.standard_error);
        }
    }
}

struct Check {
    ok: bool,
    detail: String,
    digest: Digest,
}

fn timed(
    id: u8,
    name: &str,
    budget: f64,
    scale: Scale,
    f: impl FnOnce() -> Result<Check>,
) -> CriterionResult {
    let t = Instant::now();
    let res = f();
    let elapsed = t.elapsed().as_secs_f64();
    let (ok, detail) = match res {
        Ok(c) => (c.ok, c.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = scale == Scale::Quick || elapsed < budget;
    let detail = if ok && !in_time {
        format!("{detail}; over the runtime budget")
    } else {
        detail
    };
    CriterionResult {
        id,
        name: name.into(),
        passed: ok && in_time,
        detail,
        elapsed_secs: elapsed,
        budget_secs: budget,
    }
}

fn random_set(rng: &mut ChaCha8Rng, max_members: usize, max_atoms: usize) -> Result<ScenarioSet> {
    let m = rng.random_range(1..=max_members);
    let mut members = Vec::with_capacity(m);
    for _ in 0..m {
        let k = rng.random_range(1..=max_atoms);
        let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let atoms = w
            .iter()
            .map(|wi| (rng.random_range(-3.0..3.0), wi / total))
            .collect();
        members.push(DiscreteDistribution::new(atoms)?);
    }
    ScenarioSet::new(members)
}

/// Criterion 1: axioms, conjugate ordering, translation and mixed sub-additivity.
pub fn axiom_suite(scale: Scale) -> CriterionResult {
    let n_sets = if scale == Scale::Full { 1000 } else { 200 };
    timed(1, "axiom suite", 10.0, scale, || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut failures = Vec::new();
        let tol = IDENTITY_TOL;
        for i in 0..n_sets {
            let set = random_set(&mut rng, 5, 6)?;
            let (c1, c2, c3) = (
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let y = move |w: f64| c1 * w + c2 * w.abs() + c3 * w.cos();
            let lam: f64 = rng.random_range(0.0..3.0);
            let c: f64 = rng.random_range(-2.0..2.0);
            let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let e = |f: &dyn Fn(f64) -> f64| set.sublinear_expect(|&w| f(w));
            let eps = |f: &dyn Fn(f64) -> f64| set.conjugate_expect(|&w| f(w));
            let ex = e(&|w| w)?;
            let ey = e(&y)?;
            let checks = [
                ("monotonicity", ex <= e(&|w| w + y(w).abs())? + tol),
                ("constants", (e(&|_| c)? - c).abs() <= tol),
                ("sub-additivity", e(&|w| w + y(w))? <= ex + ey + tol),
                ("homogeneity", (e(&|w| lam * w)? - lam * ex).abs() <= tol),
                ("conjugate order", eps(&|w| w)? <= ex + tol),
                (
                    "conjugate identity",
                    (eps(&|w| w)? + e(&|w| -w)?).abs() <= tol,
                ),
                ("translation", (e(&|w| w + c)? - (ex + c)).abs() <= tol),
                (
                    "mixed sub-additivity",
                    eps(&|w| w + y(w))? <= eps(&|w| w)? + ey + tol,
                ),
                (
                    "mixed capacity",
                    set.lower_capacity(|&w| w >= a || y(w) >= b)
                        <= set.lower_capacity(|&w| w >= a)
                            + set.upper_capacity(|&w| y(w) >= b)
                            + tol,
                ),
                (
                    "capacity sub-additivity",
                    set.upper_capacity(|&w| w >= a || y(w) >= b)
                        <= set.upper_capacity(|&w| w >= a)
                            + set.upper_capacity(|&w| y(w) >= b)
                            + tol,
                ),
            ];
            for (name, ok) in checks {
                if !ok {
                    failures.push(format!("set {i}: {name}"));
                }
            }
        }
        Ok(Check {
            ok: failures.is_empty(),
            detail: if failures.is_empty() {
                format!("{n_sets} random sets, 10 relations each")
            } else {
                format!("{} violations, first: {}", failures.len(), failures[0])
            },
            digest: Digest::default(),
        })
    })
}

fn pool(values: &[f64], step: usize) -> Result<Vec<DiscreteDistribution>> {
    // every weight vector on the simplex grid with resolution 1/step
    let k = values.len();
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        if idx.iter().sum::<usize>() == step {
            let atoms: Vec<(f64, f64)> = values
                .iter()
                .zip(&idx)
                .filter(|(_, &c)| c > 0)
                .map(|(&v, &c)| (v, c as f64 / step as f64))
                .collect();
            out.push(DiscreteDistribution::new(atoms)?);
        }
        let mut i = 0;
        while i < k {
            idx[i] += 1;
            if idx[i] <= step {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    Ok(out)
}

fn sets_of(pool: &[DiscreteDistribution]) -> Result<Vec<ScenarioSet>> {
    let mut out = Vec::new();
    for i in 0..pool.len() {
        out.push(ScenarioSet::singleton(pool[i].clone()));
        for j in i + 1..pool.len() {
            out.push(ScenarioSet::new(vec![pool[i].clone(), pool[j].clone()])?);
        }
    }
    Ok(out)
}

/// Criterion 2: product identities on exhaustively enumerated small sets.
pub fn independence_products(scale: Scale) -> CriterionResult {
    timed(2, "independence products", 30.0, scale, || {
        let step = if scale == Scale::Full { 2 } else { 1 };
        let xs = sets_of(&pool(&[0.0, 1.0, 3.0], step)?)?;
        let ys_pos = sets_of(&pool(&[0.0, 0.5, 2.0], step)?)?;
        let ys_signed = sets_of(&pool(&[-1.0, 0.0, 2.0], step)?)?;
        let mut pairs = 0usize;
        let mut failures = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys_pos.iter().chain(&ys_signed).enumerate() {
                let joint = independent_product(x, y)?;
                let ex = x.sublinear_expect(|&v| v)?;
                let ey = y.sublinear_expect(|&v| v)?;
                let exy = joint.sublinear_expect(|p| p[0] * p[1])?;
                if ey >= 0.0 {
                    pairs += 1;
                    if (exy - ex * ey).abs() > IDENTITY_TOL {
                        failures.push(format!("E[XY] pair ({i},{j}): {exy} vs {}", ex * ey));
                    }
                }
                if y.members()
                    .iter()
                    .all(|m| m.atoms().iter().all(|(v, _)| *v >= 0.0))
                {
                    let lx = x.conjugate_expect(|&v| v)?;
                    let ly = y.conjugate_expect(|&v| v)?;
                    let lxy = joint.conjugate_expect(|p| p[0] * p[1])?;
                    if (lxy - lx * ly).abs() > IDENTITY_TOL {
                        failures.push(format!("ε[XY] pair ({i},{j}): {lxy} vs {}", lx * ly));
                    }
                }
                let nested = nested_expect(x, y, |a, b| (a - b).abs() + a * b)?;
                let direct = joint.sublinear_expect(|p| (p[0] - p[1]).abs() + p[0] * p[1])?;
                if (nested - direct).abs() > IDENTITY_TOL {
                    failures.push(format!("nested pair ({i},{j})"));
                }
            }
        }
        Ok(Check {
            ok: failures.is_empty(),
            detail: if failures.is_empty() {
                format!(
                    "{} set pairs, {pairs} with E[Y] ≥ 0",
                    xs.len() * (ys_pos.len() + ys_signed.len())
                )
            } else {
                format!("{} violations, first: {}", failures.len(), failures[0])
            },
            digest: Digest::default(),
        })
    })
}

/// Bounded Lipschitz test functions used by criteria 3 and 7.
pub const BOUNDED_LIPSCHITZ: [&str; 3] = ["ramp", "tanh", "cos"];

/// Criterion 3: G-normal oracles.
pub fn gnormal_oracles(scale: Scale) -> CriterionResult {
    timed(3, "G-normal oracles", 120.0, scale, || {
        let p = GParams::variance(0.25, 1.0)?;
        let mut worst = Vec::new();
        let sq = gnormal_expect(&TestFunction::square(), &p, REFERENCE_NX)?;
        let nsq = gnormal_expect(&TestFunction::neg_square(), &p, REFERENCE_NX)?;
        let mut ok = (sq - 1.0).abs() <= QUADRATIC_TOL && (nsq + 0.25).abs() <= QUADRATIC_TOL;
        worst.push(format!(
            "x² {:.1e}, -x² {:.1e}",
            (sq - 1.0).abs(),
            (nsq + 0.25).abs()
        ));
        let depth = if scale == Scale::Full {
            TREE_DEPTH
        } else {
            400
        };
        let mut tree_gap = 0.0f64;
        for tag in BOUNDED_LIPSCHITZ {
            let f = TestFunction::from_tag(tag)?;
            let pde = gnormal_expect(&f, &p, REFERENCE_NX)?;
            let tree = control_tree_value(&f, &p, depth, 3)?;
            tree_gap = tree_gap.max((pde - tree).abs());
        }
        ok &= tree_gap <= TREE_TOL;
        worst.push(format!("PDE vs tree(depth {depth}) {tree_gap:.1e}"));
        let mut quad_gap = 0.0f64;
        for s2 in [0.25, 1.0] {
            let eq = GParams::variance(s2, s2)?;
            for tag in ["ramp", "tanh", "cos", "sq"] {
                let f = TestFunction::from_tag(tag)?;
                let pde = gnormal_expect(&f, &eq, REFERENCE_NX)?;
                let gh = gaussian_expect(|x| f.eval(x), s2.sqrt(), 64);
                quad_gap = quad_gap.max((pde - gh).abs());
            }
        }
        ok &= quad_gap <= QUADRATURE_TOL;
        worst.push(format!("σ̲ = σ̄ vs Gauss-Hermite {quad_gap:.1e}"));
        Ok(Check {
            ok,
            detail: worst.join("; "),
            digest: Digest::default(),
        })
    })
}

fn kolmogorov_configs(scale: Scale) -> Vec<VerifyConfig> {
    let fams = shipped_families();
    let (n, paths) = if scale == Scale::Full {
        (1000, 100_000)
    } else {
        (200, 4000)
    };
    [&fams[0], &fams[1]]
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut c = canned_config("kolmogorov-two-point").expect("canned");
            c.family = f.clone();
            c.n_steps = n;
            c.n_paths = paths;
            c.seed = 41 + i as u64;
            c
        })
        .collect()
}

fn summarize(outcomes: &[VerifyOutcome]) -> (bool, String, Digest) {
    let mut d = Digest::default();
    let mut cells = 0;
    let mut bad = 0;
    let mut tightest = f64::INFINITY;
    for o in outcomes {
        d.outcome(o);
        for r in &o.reports {
            cells += 1;
            if !r.dominated {
                bad += 1;
            }
            if r.standard_error > 0.0 {
                tightest = tightest.min(r.margin() / r.standard_error);
            }
        }
    }
    (
        bad == 0,
        format!(
            "{}/{cells} cells dominated, tightest margin {tightest:.1} SE",
            cells - bad
        ),
        d,
    )
}

fn run_verify(cfgs: &[VerifyConfig]) -> Result<Check> {
    let outs = cfgs.iter().map(verify_bound).collect::<Result<Vec<_>>>()?;
    let (ok, detail, digest) = summarize(&outs);
    Ok(Check { ok, detail, digest })
}

/// Criterion 4: the Kolmogorov-type bound over the full policy family.
pub fn kolmogorov_bound(scale: Scale) -> CriterionResult {
    timed(4, "Kolmogorov bound", 180.0, scale, || {
        run_verify(&kolmogorov_configs(scale))
    })
}

fn chebyshev_configs(scale: Scale) -> Vec<VerifyConfig> {
    let paths = if scale == Scale::Full { 20_000 } else { 2000 };
    let mut out = Vec::new();
    for (i, f) in shipped_families().into_iter().enumerate() {
        for n in [100, 1000] {
            let mut c =
                VerifyConfig::new(BoundName::Chebyshev, f.clone(), n, paths, 500 + i as u64);
            c.x_scaled = vec![0.25, 0.5, 1.0, 2.0, 3.0, 4.0];
            out.push(c);
        }
    }
    out
}

/// Criterion 5: the Chebyshev form with the frozen constant.
pub fn chebyshev_bound(scale: Scale) -> CriterionResult {
    timed(5, "Chebyshev form", 60.0, scale, || {
        run_verify(&chebyshev_configs(scale))
    })
}

fn lower_bound_config(scale: Scale) -> VerifyConfig {
    let mut c = canned_config("lower-bound-b0").expect("canned");
    c.seed = 61;
    if scale == Scale::Full {
        c.n_list = vec![10_000, 100_000];
        c.n_paths = 2000;
    } else {
        c.n_list = vec![1000, 2000];
        c.n_paths = 500;
    }
    c.n_steps = *c.n_list.last().expect("nonempty");
    c
}

/// Criterion 6: the small-ball lower bound at `b = 0`.
pub fn lower_bound(scale: Scale) -> CriterionResult {
    timed(6, "lower bound", 120.0, scale, || {
        run_verify(&[lower_bound_config(scale)])
    })
}

fn clt_run(scale: Scale) -> Result<Check> {
    let family = StepFamily::two_point(0.25, 1.0)?;
    let (n_list, paths, tags): (Vec<usize>, usize, &[&str]) = if scale == Scale::Full {
        (vec![100, 1000, 10_000], 20_000, &BOUNDED_LIPSCHITZ)
    } else {
        (vec![100, 1000], 2000, &BOUNDED_LIPSCHITZ[..1])
    };
    let mut d = Digest::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        let specs = vec![
            PolicySpec::Standard {},
            PolicySpec::Feedback {
                phi: tag.to_string(),
                nx: 801,
                snapshots: 201,
                label: None,
            },
        ];
        let pols = build_policies(&specs, &family)?;
        let phi = TestFunction::from_tag(tag)?;
        let t = clt_experiment(&phi, &family, &pols, &n_list, paths, 70 + i as u64)?;
        for r in &t.rows {
            d.push(r.estimate);
            d.push(r.standard_error);
        }
        let good = t.nonincreasing && t.final_error <= CLT_FINAL_TOL;
        ok &= good;
        let errs: Vec<String> = t
            .rows
            .iter()
            .map(|r| format!("{:.4}±{:.4}", r.error, r.standard_error))
            .collect();
        parts.push(format!(
            "{tag}: [{}]{}",
            errs.join(", "),
            if good { "" } else { " ✗" }
        ));
    }
    Ok(Check {
        ok,
        detail: parts.join("; "),
        digest: d,
    })
}

/// Criterion 7: CLT errors against the G-heat reference.
pub fn clt_convergence(scale: Scale) -> CriterionResult {
    timed(7, "CLT convergence", 300.0, scale, || clt_run(scale))
}

/// The two shipped LIL runs: `±1` steps, and variance in `[0.25, 1]` under
/// the max-variance policy.
pub fn lil_runs(scale: Scale) -> Result<Vec<LilExperiment>> {
    let (n_max, paths) = if scale == Scale::Full {
        (1_000_000, 200)
    } else {
        (10_000, 20)
    };
    let mut out = Vec::new();
    for (seed, lo) in [(20_240_801u64, 1.0), (20_240_802, 0.25)] {
        let family = StepFamily::two_point(lo, 1.0)?;
        let mut cfg = LilConfig::new(seed);
        cfg.n_max = n_max;
        cfg.n_paths = paths;
        out.push(lil_experiment(
            &family,
            &[AdversaryPolicy::constant(0.0, 1.0)],
            &cfg,
        )?);
    }
    Ok(out)
}

fn lil_check(scale: Scale) -> Result<Check> {
    let runs = lil_runs(scale)?;
    let mut d = Digest::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for r in &runs {
        let p = &r.per_policy[0];
        for t in &p.traces {
            d.push(t.running_max);
            d.push(t.running_min);
        }
        ok &= r.band_holds;
        parts.push(format!(
            "σ̲²={:.2}: {:.0}% in band (tail window {:.0}%), median max {:.3}, largest {:.3}, sandwich {:.0}%/{:.0}%",
            r.sigma_lower * r.sigma_lower,
            100.0 * p.fraction_max_in_band,
            100.0 * p.fraction_tail_max_in_band,
            p.median_running_max,
            p.largest_running_max,
            100.0 * p.fraction_within_outer,
            100.0 * p.fraction_covers_inner
        ));
    }
    Ok(Check {
        ok,
        detail: parts.join("; "),
        digest: d,
    })
}

/// Criterion 8: banded desk-scale check of the iterated logarithm.
pub fn lil_band(scale: Scale) -> CriterionResult {
    timed(8, "LIL desk-scale band", 300.0, scale, || lil_check(scale))
}

/// Criterion 9: Choquet moment classifier against the tail oracles.
pub fn moment_classifier(scale: Scale) -> CriterionResult {
    timed(9, "Choquet moment classifier", 60.0, scale, || {
        let p = GParams::variance(0.25, 1.0)?;
        let cases = [
            (StepShape::TwoPoint, SeriesClass::Convergent),
            (StepShape::Gaussian, SeriesClass::Convergent),
            (StepShape::Pareto { alpha: 2.0 }, SeriesClass::Divergent),
        ];
        let mut ok = true;
        let mut parts = Vec::new();
        for (shape, expect) in cases {
            let fam = StepFamily::new(shape, p)?;
            let r = choquet_moment_check(&fam, &[0.5, 1.0, 2.0], 1e6, 1e6)?;
            let good = r.integral.class == expect && r.classes_agree;
            ok &= good;
            parts.push(format!(
                "{}: {:?}{}",
                shape.tag(),
                r.integral.class,
                if good { "" } else { " ✗" }
            ));
        }
        Ok(Check {
            ok,
            detail: parts.join(", "),
            digest: Digest::default(),
        })
    })
}

fn stochastic_digests(scale: Scale) -> Result<Vec<Digest>> {
    Ok(vec![
        run_verify(&kolmogorov_configs(scale))?.digest,
        run_verify(&chebyshev_configs(scale))?.digest,
        run_verify(&[lower_bound_config(scale)])?.digest,
        clt_run(scale)?.digest,
        lil_check(scale)?.digest,
    ])
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Criterion 10: the stochastic criteria replayed at reduced size give
/// bit-identical aggregates across repeated runs and worker counts.
pub fn determinism(scale: Scale) -> CriterionResult {
    timed(10, "determinism", 300.0, scale, || {
        let base = stochastic_digests(Scale::Quick)?;
        let again = stochastic_digests(Scale::Quick)?;
        let one = in_pool(1, || stochastic_digests(Scale::Quick))??;
        let four = in_pool(4, || stochastic_digests(Scale::Quick))??;
        let ok = base == again && base == one && base == four;
        Ok(Check {
            ok,
            detail: format!(
                "{} stochastic suites × (repeat, 1 worker, 4 workers)",
                base.len()
            ),
            digest: Digest::default(),
        })
    })
}

/// Every criterion at the given scale, in order.
pub fn run_all(scale: Scale, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let runs: [fn(Scale) -> CriterionResult; 10] = [
        axiom_suite,
        independence_products,
        gnormal_oracles,
        kolmogorov_bound,
        chebyshev_bound,
        lower_bound,
        clt_convergence,
        lil_band,
        moment_classifier,
        determinism,
    ];
    runs.iter()
        .map(|f| {
            let r = f(scale);
            report(&r);
            r
        })
        .collect()
}

/// Axioms, PDE against the control tree, and the Kolmogorov bound at reduced size.
pub fn run_quick(mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    [
        axiom_suite(Scale::Quick),
        gnormal_oracles(Scale::Quick),
        kolmogorov_bound(Scale::Quick),
    ]
    .into_iter()
    .inspect(|r| report(r))
    .collect()
}

use std::path::{Path, PathBuf};

use serde::Serialize;

use sublinear_core::acceptance::{run_all, run_quick, Scale};
use sublinear_core::config::build_policies;
use sublinear_core::gnormal::{
    gnormal_expect_with_growth, solve_g_heat_with, symmetric_grid, PdeGrid, SolveOptions,
};
use sublinear_core::ineq::{calibrate, canned_config, frozen_constants, BoundName, CANNED_CONFIGS};
use sublinear_core::limits::{
    choquet_moment_check, clt_experiment, lil_experiment, wlln_experiment, ClusterEstimate,
    ConvergenceTable, LilConfig, REFERENCE_NX,
};
use sublinear_core::sim::{
    lower_capacity_from, simulate_family, upper_capacity_from, CapacityEstimate, PathBatch,
    SimOptions,
};
use sublinear_core::{CapacityKind, GParams, ScenarioSet, TestFunction};

use crate::config::{
    load, ConvergenceFile, GheatFile, LilFile, MomentFile, OutputSpec, SimulateFile, VerifyFile,
    SCHEMA_VERSION,
};
use crate::output::Output;
use crate::{CliError, GnormalFlags, Overrides, Verdict};

fn num(x: f64) -> String {
    format!("{x}")
}

fn finish(out: &Output) {
    for p in out.written() {
        eprintln!("wrote {}", p.display());
    }
}

fn params_from(flags: &GnormalFlags, base: Option<GParams>) -> Result<GParams, CliError> {
    let lo = flags.sigma_lo.map(|s| s * s);
    let hi = flags.sigma_hi.map(|s| s * s);
    let p = match (base, lo, hi) {
        (Some(b), lo, hi) => GParams {
            sigma_lower_sq: lo.unwrap_or(b.sigma_lower_sq),
            sigma_upper_sq: hi.unwrap_or(b.sigma_upper_sq),
            ..b
        },
        (None, Some(lo), Some(hi)) => GParams::variance(lo, hi)?,
        (None, _, _) => {
            return Err(CliError::Config(
                "--sigma-lo and --sigma-hi are required without --config".into(),
            ))
        }
    };
    p.validate()?;
    Ok(p)
}

pub fn solve_gheat(
    config: Option<&Path>,
    flags: &GnormalFlags,
    t: Option<f64>,
    out_flag: Option<&PathBuf>,
) -> Result<Verdict, CliError> {
    let mut cfg = match config {
        Some(path) => load::<GheatFile>(path)?,
        None => GheatFile {
            schema_version: SCHEMA_VERSION,
            phi: flags
                .phi
                .clone()
                .ok_or_else(|| CliError::Config("--phi is required without --config".into()))?,
            params: params_from(flags, None)?,
            t_horizon: 1.0,
            nx: 801,
            snapshots: 11,
            growth_limit: 2,
            output: OutputSpec::default(),
        },
    };
    if let Some(phi) = &flags.phi {
        cfg.phi = phi.clone();
    }
    cfg.params = params_from(flags, Some(cfg.params))?;
    cfg.t_horizon = t.unwrap_or(cfg.t_horizon);
    cfg.nx = flags.nx.unwrap_or(cfg.nx);
    cfg.growth_limit = flags.growth_limit.unwrap_or(cfg.growth_limit);

    let phi = TestFunction::from_tag(&cfg.phi)?;
    if phi.growth_order() > cfg.growth_limit {
        return Err(sublinear_core::Error::Rejected(format!(
            "`{}` has growth order {} > {}",
            cfg.phi,
            phi.growth_order(),
            cfg.growth_limit
        ))
        .into());
    }
    if !(cfg.t_horizon > 0.0) {
        return Err(CliError::Config("t_horizon must be positive".into()));
    }
    let grid = symmetric_grid(&phi, &cfg.params, cfg.t_horizon, cfg.nx);
    let sol = solve_g_heat_with(
        &phi,
        &cfg.params,
        &grid,
        SolveOptions {
            snapshots: cfg.snapshots.max(2),
        },
    )?;

    let mut out = Output::resolve(out_flag, &cfg.output, "solve-gheat")?;
    out.config(&cfg)?;
    let rows = sol.times.iter().enumerate().flat_map(|(k, &tk)| {
        let sol = &sol;
        (0..grid.nx).map(move |i| vec![num(tk), num(grid.x(i)), num(sol.values[k][i])])
    });
    out.csv("surface", &["t", "x", "u"], rows)?;
    let last = sol.final_slice();
    out.plot(
        "final",
        ("x", "u(T,x)"),
        (0..grid.nx).map(|i| (grid.x(i), last[i])),
    )?;
    #[derive(Serialize)]
    struct Summary<'a> {
        phi: &'a str,
        params: GParams,
        grid: PdeGrid,
        times: &'a [f64],
        value_at_origin: f64,
    }
    let s = Summary {
        phi: &cfg.phi,
        params: cfg.params,
        grid,
        times: &sol.times,
        value_at_origin: sol.value_at_origin(),
    };
    out.json("summary", "solve-gheat", &s)?;
    println!("u({}, 0) = {}", cfg.t_horizon, s.value_at_origin);
    finish(&out);
    Ok(Verdict::Pass)
}

pub fn eval_gnormal(flags: &GnormalFlags, json: bool) -> Result<Verdict, CliError> {
    let tag = flags
        .phi
        .clone()
        .ok_or_else(|| CliError::Config("--phi is required".into()))?;
    let phi = TestFunction::from_tag(&tag)?;
    let params = params_from(flags, None)?;
    let nx = flags.nx.unwrap_or(REFERENCE_NX);
    let growth = flags.growth_limit.unwrap_or(2);
    let value = gnormal_expect_with_growth(&phi, &params, nx, growth)?;
    if json {
        let v = serde_json::json!({ "phi": tag, "params": params, "nx": nx, "value": value });
        println!("{v}");
    } else {
        println!("{value:.6}");
    }
    Ok(Verdict::Pass)
}

fn apply(overrides: &Overrides, seed: &mut u64, n_paths: &mut usize) {
    if let Some(s) = overrides.seed {
        *seed = s;
    }
    if let Some(n) = overrides.n_paths {
        *n_paths = n;
    }
}

fn capacity_json(c: &CapacityEstimate, batches: &[PathBatch]) -> serde_json::Value {
    serde_json::json!({
        "value": c.value,
        "standard_error": c.standard_error,
        "policy": batches[c.best_policy].policy,
    })
}

pub fn simulate(
    path: &Path,
    overrides: &Overrides,
    out_flag: Option<&PathBuf>,
) -> Result<Verdict, CliError> {
    let mut cfg: SimulateFile = load(path)?;
    apply(overrides, &mut cfg.seed, &mut cfg.n_paths);
    let policies = build_policies(&cfg.policies, &cfg.family)?;
    let opts = SimOptions {
        checkpoints: cfg.checkpoints.clone(),
        ..Default::default()
    };
    let batches = simulate_family(
        &cfg.family,
        &policies,
        cfg.n_steps,
        cfg.n_paths,
        cfg.seed,
        &opts,
    )?;

    let mut out = Output::resolve(out_flag, &cfg.output, "simulate")?;
    out.config(&cfg)?;
    let mut header = vec![
        "policy",
        "path",
        "final_sum",
        "max_sum",
        "min_sum",
        "max_abs_sum",
        "max_step",
    ];
    let ck_names: Vec<String> = cfg.checkpoints.iter().map(|n| format!("s_{n}")).collect();
    header.extend(ck_names.iter().map(String::as_str));
    let rows = batches.iter().flat_map(|b| {
        b.paths.iter().enumerate().map(move |(i, p)| {
            let mut r = vec![
                b.policy.clone(),
                i.to_string(),
                num(p.final_sum),
                num(p.max_sum),
                num(p.min_sum),
                num(p.max_abs_sum),
                num(p.max_step),
            ];
            r.extend(p.checkpoint_sums.iter().map(|&s| num(s)));
            r
        })
    });
    out.csv("paths", &header, rows)?;

    let root_n = (cfg.n_steps as f64).sqrt();
    for (k, b) in batches.iter().enumerate() {
        let mut z: Vec<f64> = b.final_sums().map(|s| s / root_n).collect();
        z.sort_by(f64::total_cmp);
        let m = z.len() as f64;
        out.plot(
            &format!("ecdf-{k}"),
            ("S_n/sqrt(n)", "F"),
            z.iter().enumerate().map(|(i, &x)| (x, (i + 1) as f64 / m)),
        )?;
    }
    #[derive(Serialize)]
    struct PolicyStats {
        policy: String,
        mean_final_sum: f64,
        mean_square_over_n: f64,
        mean_max_sum: f64,
    }
    let stats: Vec<PolicyStats> = batches
        .iter()
        .map(|b| {
            let m = b.n_paths as f64;
            PolicyStats {
                policy: b.policy.clone(),
                mean_final_sum: b.final_sums().sum::<f64>() / m,
                mean_square_over_n: b.final_sums().map(|s| s * s).sum::<f64>()
                    / m
                    / cfg.n_steps as f64,
                mean_max_sum: b.paths.iter().map(|p| p.max_sum).sum::<f64>() / m,
            }
        })
        .collect();
    let ev = |p: &sublinear_core::sim::PathSummary| p.final_sum >= root_n;
    let summary = serde_json::json!({
        "family": cfg.family.tag(),
        "n_steps": cfg.n_steps,
        "n_paths": cfg.n_paths,
        "seed": cfg.seed,
        "per_policy": stats,
        "upper_capacity_sum_above_sqrt_n": capacity_json(&upper_capacity_from(&batches, ev), &batches),
        "lower_capacity_sum_above_sqrt_n": capacity_json(&lower_capacity_from(&batches, ev), &batches),
    });
    out.json("summary", "simulate", &summary)?;
    finish(&out);
    Ok(Verdict::Pass)
}

fn run_calibration(overrides: &Overrides, out_flag: Option<&PathBuf>) -> Result<Verdict, CliError> {
    let seed = overrides
        .seed
        .ok_or_else(|| CliError::Config("--calibrate needs --seed".into()))?;
    let frozen = frozen_constants();
    let paths = overrides.n_paths.unwrap_or(frozen.calibration_paths);
    let cal = calibrate(seed, paths)?;
    let mut out = Output::resolve(out_flag, &OutputSpec::default(), "calibration")?;
    let rows = cal.cells.iter().map(|c| {
        vec![
            c.bound.as_str().to_string(),
            c.variant.map(|v| format!("{v:?}")).unwrap_or_default(),
            num(c.p),
            c.family.clone(),
            c.n_steps.to_string(),
            num(c.needed),
        ]
    });
    out.csv(
        "cells",
        &["bound", "variant", "p", "family", "n_steps", "needed"],
        rows,
    )?;
    out.json("constants", "verify-ineq", &cal.constants)?;
    let same = cal.constants == *frozen;
    println!(
        "calibrated on seed {seed} with {paths} paths; {}",
        if same {
            "matches the frozen constants"
        } else {
            "differs from the frozen constants"
        }
    );
    finish(&out);
    Ok(Verdict::Pass)
}

pub fn verify_ineq(
    config: Option<&Path>,
    bound: Option<&str>,
    canned: Option<&str>,
    calibrate: bool,
    overrides: &Overrides,
    out_flag: Option<&PathBuf>,
) -> Result<Verdict, CliError> {
    if calibrate {
        return run_calibration(overrides, out_flag);
    }
    let mut file = match (config, canned) {
        (Some(p), _) => load::<VerifyFile>(p)?,
        (None, Some(name)) => VerifyFile {
            schema_version: SCHEMA_VERSION,
            verify: canned_config(name).map_err(|_| {
                CliError::Config(format!(
                    "unknown canned config `{name}`; known: {}",
                    CANNED_CONFIGS.join(", ")
                ))
            })?,
            output: OutputSpec {
                dir: None,
                prefix: Some(name.to_string()),
            },
        },
        (None, None) => {
            return Err(CliError::Config(
                "give --config, --canned or --calibrate".into(),
            ))
        }
    };
    if let Some(b) = bound {
        file.verify.bound = BoundName::parse(b)?;
    }
    apply(overrides, &mut file.verify.seed, &mut file.verify.n_paths);
    let outcome = sublinear_core::ineq::verify_bound(&file.verify)?;

    let mut out = Output::resolve(out_flag, &file.output, file.verify.bound.as_str())?;
    out.config(&file)?;
    let inputs = |r: &sublinear_core::ineq::BoundReport| {
        r.inputs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    let rows = outcome.reports.iter().map(|r| {
        vec![
            r.bound_name.clone(),
            format!("{:?}", r.direction).to_lowercase(),
            r.policy.clone(),
            inputs(r),
            num(r.analytic_value),
            num(r.empirical_estimate),
            num(r.standard_error),
            num(r.margin()),
            r.dominated.to_string(),
        ]
    });
    out.csv(
        "reports",
        &[
            "bound",
            "direction",
            "policy",
            "inputs",
            "analytic",
            "empirical",
            "standard_error",
            "margin",
            "dominated",
        ],
        rows,
    )?;
    out.plot(
        "pairs",
        ("analytic", "empirical"),
        outcome
            .reports
            .iter()
            .map(|r| (r.analytic_value, r.empirical_estimate)),
    )?;
    out.json("summary", "verify-ineq", &outcome)?;

    println!(
        "{} on {} (n = {}, {} paths, seed {}){}",
        outcome.bound.as_str(),
        outcome.family,
        outcome.n_steps,
        outcome.n_paths,
        outcome.seed,
        outcome
            .constant
            .map(|c| format!(", constant {c}"))
            .unwrap_or_default()
    );
    println!(
        "{:<28} {:<22} {:>12} {:>12} {:>10} {:>5}",
        "inputs", "policy", "analytic", "empirical", "se", "ok"
    );
    for r in &outcome.reports {
        println!(
            "{:<28} {:<22} {:>12.6} {:>12.6} {:>10.2e} {:>5}",
            inputs(r),
            r.policy,
            r.analytic_value,
            r.empirical_estimate,
            r.standard_error,
            if r.dominated { "yes" } else { "NO" }
        );
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    finish(&out);
    Ok(Verdict::from_bool(outcome.all_dominated))
}

pub fn run_convergence(
    path: &Path,
    overrides: &Overrides,
    out_flag: Option<&PathBuf>,
    wlln: bool,
) -> Result<Verdict, CliError> {
    let mut cfg: ConvergenceFile = load(path)?;
    apply(overrides, &mut cfg.seed, &mut cfg.n_paths);
    let name = if wlln { "run-wlln" } else { "run-clt" };
    if cfg.phi.is_empty() {
        return Err(CliError::Config(
            "phi must list at least one test function".into(),
        ));
    }
    let policies = build_policies(&cfg.policies, &cfg.family)?;
    let mut tables: Vec<ConvergenceTable> = Vec::new();
    for tag in &cfg.phi {
        let phi = TestFunction::from_tag(tag)?;
        let t = if wlln {
            wlln_experiment(
                &phi,
                &cfg.family,
                &policies,
                &cfg.n_list,
                cfg.n_paths,
                cfg.seed,
            )?
        } else {
            clt_experiment(
                &phi,
                &cfg.family,
                &policies,
                &cfg.n_list,
                cfg.n_paths,
                cfg.seed,
            )?
        };
        tables.push(t);
    }

    let mut out = Output::resolve(out_flag, &cfg.output, name)?;
    out.config(&cfg)?;
    let rows = tables.iter().flat_map(|t| {
        t.rows.iter().map(move |r| {
            vec![
                t.phi.clone(),
                r.n.to_string(),
                num(r.estimate),
                num(r.standard_error),
                num(t.reference),
                num(r.error),
                r.best_policy.clone(),
            ]
        })
    });
    out.csv(
        "table",
        &[
            "phi",
            "n",
            "estimate",
            "standard_error",
            "reference",
            "error",
            "best_policy",
        ],
        rows,
    )?;
    for (k, t) in tables.iter().enumerate() {
        out.plot(
            &format!("error-{k}"),
            ("n", "error"),
            t.rows.iter().map(|r| (r.n as f64, r.error)),
        )?;
    }
    let ok = tables.iter().all(|t| t.nonincreasing);
    out.json("summary", name, &serde_json::json!({ "family": cfg.family.tag(), "tables": tables, "all_nonincreasing": ok }))?;
    for t in &tables {
        println!(
            "{:<12} reference {:>10.6}  final error {:.2e}  nonincreasing {}",
            t.phi, t.reference, t.final_error, t.nonincreasing
        );
    }
    finish(&out);
    Ok(Verdict::from_bool(ok))
}

pub fn run_lil(
    path: &Path,
    overrides: &Overrides,
    out_flag: Option<&PathBuf>,
) -> Result<Verdict, CliError> {
    let mut cfg: LilFile = load(path)?;
    apply(overrides, &mut cfg.lil.seed, &mut cfg.lil.n_paths);
    let policies = build_policies(&cfg.policies, &cfg.family)?;
    let exp = lil_experiment(&cfg.family, &policies, &cfg.lil)?;

    let mut out = Output::resolve(out_flag, &cfg.output, "run-lil")?;
    out.config(&cfg)?;
    let traces = exp.per_policy.iter().flat_map(|p| {
        p.traces.iter().flat_map(move |t| {
            t.checkpoints.iter().map(move |&(n, r)| {
                vec![p.policy.clone(), t.path.to_string(), n.to_string(), num(r)]
            })
        })
    });
    out.csv("traces", &["policy", "path", "n", "ratio"], traces)?;
    let per_path = exp.per_policy.iter().flat_map(|p| {
        p.traces.iter().zip(&p.clusters).map(move |(t, c)| {
            vec![
                p.policy.clone(),
                t.path.to_string(),
                num(t.running_max),
                num(t.running_min),
                num(c.liminf),
                num(c.limsup),
                c.within_outer.to_string(),
                c.covers_inner.to_string(),
            ]
        })
    });
    out.csv(
        "paths",
        &[
            "policy",
            "path",
            "running_max",
            "running_min",
            "liminf",
            "limsup",
            "within_outer",
            "covers_inner",
        ],
        per_path,
    )?;
    if let Some(p) = exp.per_policy.first() {
        let k = p.traces.first().map_or(0, |t| t.checkpoints.len());
        let envelope = |pick: fn(f64, f64) -> f64, init: f64| {
            (0..k)
                .map(|j| {
                    let n = p.traces[0].checkpoints[j].0 as f64;
                    (
                        n,
                        p.traces.iter().map(|t| t.checkpoints[j].1).fold(init, pick),
                    )
                })
                .collect::<Vec<_>>()
        };
        out.plot(
            "upper-envelope",
            ("n", "max_paths S_n/a_n"),
            envelope(f64::max, f64::NEG_INFINITY),
        )?;
        out.plot(
            "lower-envelope",
            ("n", "min_paths S_n/a_n"),
            envelope(f64::min, f64::INFINITY),
        )?;
    }

    #[derive(Serialize)]
    struct PolicySummary<'a> {
        policy: &'a str,
        fraction_max_in_band: f64,
        fraction_tail_max_in_band: f64,
        median_running_max: f64,
        largest_running_max: f64,
        fraction_within_outer: f64,
        fraction_covers_inner: f64,
        decomposition_residual: f64,
        first_cluster: Option<&'a ClusterEstimate>,
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        family: &'a str,
        config: &'a LilConfig,
        sigma_upper: f64,
        sigma_lower: f64,
        per_policy: Vec<PolicySummary<'a>>,
        band_capacity_upper: &'a CapacityEstimate,
        band_capacity_lower: &'a CapacityEstimate,
        band_holds: bool,
        sandwich_holds: bool,
    }
    let summary = Summary {
        family: &exp.family,
        config: &exp.config,
        sigma_upper: exp.sigma_upper,
        sigma_lower: exp.sigma_lower,
        per_policy: exp
            .per_policy
            .iter()
            .map(|p| PolicySummary {
                policy: &p.policy,
                fraction_max_in_band: p.fraction_max_in_band,
                fraction_tail_max_in_band: p.fraction_tail_max_in_band,
                median_running_max: p.median_running_max,
                largest_running_max: p.largest_running_max,
                fraction_within_outer: p.fraction_within_outer,
                fraction_covers_inner: p.fraction_covers_inner,
                decomposition_residual: p.decomposition_residual,
                first_cluster: p.clusters.first(),
            })
            .collect(),
        band_capacity_upper: &exp.band_capacity_upper,
        band_capacity_lower: &exp.band_capacity_lower,
        band_holds: exp.band_holds,
        sandwich_holds: exp.sandwich_holds,
    };
    out.json("summary", "run-lil", &summary)?;
    for p in &summary.per_policy {
        println!(
            "{:<20} in band {:>5.1}%  median max {:.3}  largest {:.3}  outer {:>5.1}%  inner {:>5.1}%",
            p.policy,
            100.0 * p.fraction_max_in_band,
            p.median_running_max,
            p.largest_running_max,
            100.0 * p.fraction_within_outer,
            100.0 * p.fraction_covers_inner
        );
    }
    println!(
        "band holds: {}; sandwich holds: {}",
        exp.band_holds, exp.sandwich_holds
    );
    finish(&out);
    Ok(Verdict::from_bool(exp.band_holds && exp.sandwich_holds))
}

pub fn check_moment(path: &Path, out_flag: Option<&PathBuf>) -> Result<Verdict, CliError> {
    let cfg: MomentFile = load(path)?;
    let report = choquet_moment_check(&cfg.family, &cfg.deltas, cfg.n_max, cfg.t_max)?;
    let mut out = Output::resolve(out_flag, &cfg.output, "check-moment")?;
    out.config(&cfg)?;
    let all = report
        .series
        .iter()
        .chain(std::iter::once(&report.integral))
        .chain(&report.truncated_moment_series);
    let rows = all.flat_map(|s| {
        s.partial_sums
            .iter()
            .map(move |&(n, v)| vec![s.label.clone(), num(n), num(v)])
    });
    out.csv("series", &["label", "upper_limit", "partial_sum"], rows)?;
    out.plot(
        "integral",
        ("T", "partial integral"),
        report.integral.partial_sums.iter().copied(),
    )?;
    out.json("summary", "check-moment", &report)?;
    println!(
        "{}: integral {:?}, condition {}, classes agree {}",
        report.family,
        report.integral.class,
        if report.satisfies_condition {
            "satisfied"
        } else {
            "violated"
        },
        report.classes_agree
    );
    finish(&out);
    Ok(Verdict::from_bool(report.classes_agree))
}

pub fn choquet(set_path: &Path, tag: &str, threshold: Option<f64>) -> Result<Verdict, CliError> {
    let text = std::fs::read_to_string(set_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", set_path.display())))?;
    let set: ScenarioSet = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!(
            "{}: line {}, column {}: {e}",
            set_path.display(),
            e.line(),
            e.column()
        ))
    })?;
    let phi = TestFunction::from_tag(tag)?;
    let f = |x: &f64| phi.eval(*x);
    let mut v = serde_json::json!({
        "phi": tag,
        "members": set.members().len(),
        "sublinear_expect": set.sublinear_expect(f)?,
        "conjugate_expect": set.conjugate_expect(f)?,
        "choquet_upper": set.choquet_integral(CapacityKind::Upper, f)?,
        "choquet_lower": set.choquet_integral(CapacityKind::Lower, f)?,
    });
    if let Some(t) = threshold {
        v["threshold"] = t.into();
        v["upper_capacity"] = set.upper_capacity(|x| f(x) >= t).into();
        v["lower_capacity"] = set.lower_capacity(|x| f(x) >= t).into();
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&v).expect("json values serialize")
    );
    Ok(Verdict::Pass)
}

pub fn selftest(quick: bool) -> Verdict {
    let print = |r: &sublinear_core::acceptance::CriterionResult| println!("{}", r.line());
    let results = if quick {
        run_quick(print)
    } else {
        run_all(Scale::Full, print)
    };
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed} of {} criteria passed", results.len());
    Verdict::from_bool(passed == results.len())
}

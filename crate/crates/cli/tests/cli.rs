use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sublinear"));
    c.env_remove("SUBLINEAR_OUT_DIR");
    c
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SIM: &str = r#"{
  "schema_version": 1,
  "seed": 9,
  "family": {"shape": {"kind": "two-point"}, "params": {"sigma_lower_sq": 0.25, "sigma_upper_sq": 1}},
  "n_steps": 50,
  "n_paths": 200
}"#;

#[test]
fn eval_gnormal_convex_case() {
    let o = run(&[
        "eval-gnormal",
        "--phi",
        "sq",
        "--sigma-lo",
        "0.5",
        "--sigma-hi",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-3);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = run(&["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let broken = write(
        dir.path(),
        "broken.json",
        "{\n  \"schema_version\": 1,\n  \"seed\": ,\n}",
    );
    let o = run(&[
        "simulate",
        "--config",
        broken.to_str().unwrap(),
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3, column"), "{}", stderr(&o));

    let cases = [
        SIM.replace("\"seed\": 9,", ""),
        SIM.replace("\"n_paths\"", "\"paths\""),
        SIM.replace("\"schema_version\": 1", "\"schema_version\": 7"),
        SIM.replace(
            "\"kind\": \"two-point\"",
            "\"kind\": \"two-point\", \"cut\": 2",
        ),
    ];
    for (i, text) in cases.iter().enumerate() {
        let p = write(dir.path(), &format!("bad{i}.json"), text);
        let o = run(&[
            "simulate",
            "--config",
            p.to_str().unwrap(),
            "--out-dir",
            out,
        ]);
        assert_eq!(code(&o), 2, "case {i}: {}", stderr(&o));
    }
    let o = run(&[
        "simulate",
        "--config",
        "/nonexistent/file.json",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 2);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn effective_config_reproduces_outputs_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = shipped("simulate.json");
    let o = run(&[
        "--workers",
        "1",
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--n-paths",
        "300",
        "--out-dir",
        a.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let effective = a.path().join("simulate.config.json");
    let o = run(&[
        "simulate",
        "--config",
        effective.to_str().unwrap(),
        "--workers",
        "3",
        "--out-dir",
        b.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 8);
    assert_eq!(fa, fb);
    let csv = String::from_utf8(
        fa.iter()
            .find(|(n, _)| n == "simulate.paths.csv")
            .unwrap()
            .1
            .clone(),
    )
    .unwrap();
    assert!(csv.starts_with("policy,path,final_sum,"));
    assert_eq!(csv.lines().count(), 1 + 5 * 300);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM);
    let target = dir.path().join("env-out");
    let o = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("SUBLINEAR_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(target.join("simulate.summary.json").exists());
}

#[test]
fn verify_ineq_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "verify-ineq",
        "--canned",
        "chebyshev",
        "--n-paths",
        "2000",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("chebyshev.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["all_dominated"], true);

    // a constant far below the calibrated one cannot dominate
    let tiny = r#"{
      "schema_version": 1,
      "verify": {
        "bound": "rosenthal-moment",
        "family": {"shape": {"kind": "two-point"}, "params": {"sigma_lower_sq": 0.25, "sigma_upper_sq": 1}},
        "n_steps": 100, "n_paths": 2000, "seed": 4, "p": 2, "constant": 0.001
      }
    }"#;
    let p = write(dir.path(), "tiny.json", tiny);
    let o = run(&[
        "verify-ineq",
        "--config",
        p.to_str().unwrap(),
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("NO"));

    let o = run(&[
        "verify-ineq",
        "--canned",
        "no-such-config",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 2);
    let o = run(&[
        "verify-ineq",
        "--config",
        p.to_str().unwrap(),
        "--bound",
        "nonsense",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn convergence_runs_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let clt = shipped("clt.json");
    let o = run(&[
        "run-clt",
        "--config",
        clt.to_str().unwrap(),
        "--n-paths",
        "400",
        "--out-dir",
        out,
    ]);
    assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("run-clt.table.csv")).unwrap();
    assert!(table.starts_with("phi,n,estimate,standard_error,reference,error,best_policy"));
    assert_eq!(table.lines().count(), 1 + 3 * 3);
    for k in 0..3 {
        assert!(dir.path().join(format!("run-clt.error-{k}.dat")).exists());
    }
    let wlln = shipped("wlln.json");
    let o = run(&[
        "run-wlln",
        "--config",
        wlln.to_str().unwrap(),
        "--n-paths",
        "300",
        "--out-dir",
        out,
    ]);
    assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("run-wlln.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(s["tables"][0]["reference"], 1.0);
}

#[test]
fn clt_rejects_growth_beyond_moments() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
      "schema_version": 1, "seed": 1,
      "family": {"shape": {"kind": "student-t", "dof": 3}, "params": {"sigma_lower_sq": 1, "sigma_upper_sq": 1}},
      "phi": ["quartic"], "n_list": [10], "n_paths": 10
    }"#;
    let p = write(dir.path(), "clt.json", text);
    let o = run(&[
        "run-clt",
        "--config",
        p.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("rejected"), "{}", stderr(&o));
}

#[test]
fn lil_run_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
      "schema_version": 1,
      "family": {"shape": {"kind": "two-point"}, "params": {"sigma_lower_sq": 1, "sigma_upper_sq": 1}},
      "lil": {"seed": 5, "n_max": 20000, "n_paths": 10}
    }"#;
    let p = write(dir.path(), "lil.json", text);
    let o = run(&[
        "run-lil",
        "--config",
        p.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
    let traces = fs::read_to_string(dir.path().join("run-lil.traces.csv")).unwrap();
    assert!(traces.starts_with("policy,path,n,ratio"));
    let paths = fs::read_to_string(dir.path().join("run-lil.paths.csv")).unwrap();
    // σ̲ = σ̄ collapses the standard family to the single constant policy
    assert_eq!(paths.lines().count(), 1 + 10);
    assert!(dir.path().join("run-lil.upper-envelope.dat").exists());

    let seedless = text.replace("\"seed\": 5, ", "");
    let p = write(dir.path(), "seedless.json", &seedless);
    let o = run(&[
        "run-lil",
        "--config",
        p.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn moment_check_and_choquet() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "check-moment",
        "--config",
        shipped("moment-pareto.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("violated"));

    let o = run(&[
        "choquet",
        "--set",
        shipped("scenario-set.json").to_str().unwrap(),
        "--phi",
        "sq",
        "--threshold",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["sublinear_expect"], 4.0);
    assert_eq!(v["conjugate_expect"], 0.0);
    assert_eq!(v["upper_capacity"], 1.0);
}

#[test]
fn solve_gheat_from_flags_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "solve-gheat",
        "--phi",
        "neg_sq",
        "--sigma-lo",
        "0.5",
        "--sigma-hi",
        "1",
        "--nx",
        "201",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("solve-gheat.summary.json")).unwrap(),
    )
    .unwrap();
    assert!((s["value_at_origin"].as_f64().unwrap() + 0.25).abs() < 1e-3);
    let surface = fs::read_to_string(dir.path().join("solve-gheat.surface.csv")).unwrap();
    assert_eq!(surface.lines().count(), 1 + 11 * 201);

    let o = run(&[
        "solve-gheat",
        "--config",
        shipped("gheat.json").to_str().unwrap(),
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&[
        "solve-gheat",
        "--phi",
        "cube",
        "--sigma-lo",
        "0.5",
        "--sigma-hi",
        "1",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn selftest_quick_passes() {
    let o = run(&["selftest", "--quick"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(
        stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(),
        3
    );
}

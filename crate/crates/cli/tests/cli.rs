use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dynpictures_cli::emit_plot_data;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn dynpictures(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynpictures")).args(args).output().expect("binary runs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dynpictures(&args)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    dynpictures_cli::output::read_table(path).unwrap()
}

#[test]
fn pictures_equivalence_on_harmonic_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("pictures_harmonic.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path());
    assert!(s["max_pairwise_diff"].as_f64().unwrap() < 1e-6);
    assert_eq!(s["checks"]["picture_equivalence"], true);
    let (header, rows) = csv_rows(&dir.path().join("expectations.csv"));
    assert_eq!(header, ["t", "observable", "schrodinger", "heisenberg", "interaction", "max_pairwise_diff"]);
    assert_eq!(rows.len(), 21 * 4);
    assert!(dir.path().join("resolved_config.json").exists());
}

#[test]
fn negative_mass_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("pictures_harmonic.json"), dir.path(), &["--override", "model.params.m=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m"), "{}", stderr(&o));
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn unknown_keys_fail_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = run(&configs().join("constant_force.json"), &out, &["--override", "numerics.typo=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("typo"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn lyapunov_on_standard_map_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("lyapunov_standard_map.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path());
    let (l, oracle) = (s["lambda1"].as_f64().unwrap(), s["oracle_lambda1"].as_f64().unwrap());
    assert!((l - oracle).abs() < 0.1 * oracle && l > 0.5);
    for path in [dir.path().join("lambda_vs_t.csv"), dir.path().join("plots/lambda_vs_t.csv")] {
        let (header, rows) = csv_rows(&path);
        assert_eq!(&header[..3], ["checkpoint_t", "lambda_1", "lambda_2"]);
        let t: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
        assert!(t.len() > 2 && t.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn compare_chaos_emits_two_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("compare_chaos.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("plots/growth.csv"));
    assert_eq!(header, ["t", "ln_norm_T_quantum", "ln_norm_T_classical"]);
    assert_eq!(rows.len(), 201);
    let s = summary(dir.path());
    assert!(s["quantum_slope"].as_f64().unwrap() < 0.05 * s["lambda1"].as_f64().unwrap());
    assert!(dir.path().join("plots/bound_margins.csv").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("constant_force.json");
    assert_eq!(run(&cfg, a.path(), &[]).status.code(), Some(0));
    assert_eq!(run(&cfg, b.path(), &["--override", "numerics.parallel=false"]).status.code(), Some(0));
    for name in ["marginal.csv", "moments.csv", "plots/marginal_vs_q.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn constant_force_summary_explains_sign() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("constant_force.json"), dir.path(), &["--override", "numerics.samples=3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path());
    assert!(s["sup_marginal_diff"].as_f64().unwrap() < 1e-8);
    assert!(s["alternate_form_sup_diff"].as_f64().unwrap() > 1e-3);
    assert!(s["sign_resolution"].as_str().unwrap().contains("pullback"));
    assert_eq!(s["momentum_support_exact"], true);
}

#[test]
fn numeric_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &configs().join("lyapunov_henon_heiles.json"),
        dir.path(),
        &["--override", "numerics.integrator.max_steps=10"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("numeric failure"), "{}", stderr(&o));
}

#[test]
fn failed_checks_are_written_then_reported() {
    let dir = tempfile::tempdir().unwrap();
    // A basis this small cannot hold the state for long.
    let o = run(
        &configs().join("quantum_double_well.json"),
        dir.path(),
        &["--override", "numerics.dim=12", "--override", "numerics.gate_dim=16", "--override", "numerics.samples=10"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let s = summary(dir.path());
    assert_eq!(s["passed"], false);
    assert_eq!(s["checks"]["truncation_gate"], false);
}

#[test]
fn validate_prints_resolved_defaults() {
    let o = dynpictures(&["validate", configs().join("quantum_harmonic.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["numerics"]["omega_ref"], 1.0);
    assert_eq!(v["numerics"]["samples"], 3200);
    let o = dynpictures(&["validate", "/nonexistent/config.json"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn every_shipped_config_validates() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let o = dynpictures(&["validate", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
    }
}

#[test]
fn plot_data_on_empty_directory_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_plot_data(dir.path()).unwrap().is_empty());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

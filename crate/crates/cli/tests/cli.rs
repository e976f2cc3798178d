use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ph-loewner"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// `1/(s+1)` sampled at six points, alternating sides.
fn write_lag(path: &Path) {
    let mut s = String::from("side,omega,dir_re_1,dir_im_1,resp_re_1,resp_im_1\n");
    for (k, w) in [0.1f64, 0.3, 1.0, 2.0, 5.0, 10.0].iter().enumerate() {
        let d = 1.0 + w * w;
        s.push_str(&format!("{},{w},1,0,{},{}\n", if k % 2 == 0 { "R" } else { "L" }, 1.0 / d, -w / d));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn staged_workflow_on_a_coarse_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["generate-fom", "--h", "0.5", "--out-prefix", "fom/wave"]);
    let manifest = d.join("fom/wave_manifest.json");
    assert_eq!(json(&manifest)["n_bnd"], 16);
    ok(d, &["sample", "--fom", "fom/wave_manifest.json", "--channels", "1", "--out", "data.csv", "--response", "resp.json"]);
    ok(d, &["identify", "--data", "data.csv", "--out", "ph.json", "--diagnostics", "diag.json"]);
    assert_eq!(json(&d.join("ph.json"))["kind"], "ph");
    let summary = ok(d, &["compare", "--response", "resp.json", "--loewner", "ph.json", "--ph", "ph.json", "--out", "report.json"]);
    assert!(!summary.is_empty());
    let report = json(&d.join("report.json"));
    assert!(report["comparisons"][0]["ph_error"]["max_rel"].as_f64().unwrap() < 1e-6);
    ok(d, &["export", "--report", "report.json", "--which", "freq-response", "--dir", "figs"]);
    let csv = std::fs::read_to_string(d.join("figs/freq_response_1_1.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 301);
}

#[test]
fn run_writes_the_full_artifact_set() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["--out-dir", "out", "run", "--h", "0.5"]);
    for f in ["config.json", "data.csv", "pencil.json", "singular_values.csv", "loewner.json", "ph.json", "ph_shifted.json", "report.json"] {
        assert!(tmp.path().join("out").join(f).exists(), "missing {f}");
    }
}

#[test]
fn config_file_values_are_used() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("cfg.toml"), "shift = 2.0\nout_dir = \"res\"\n[fom]\nkind = \"generate\"\nh = 0.5\n").unwrap();
    ok(tmp.path(), &["--config", "cfg.toml", "run"]);
    assert_eq!(json(&tmp.path().join("res/config.json"))["shift"], 2.0);
}

#[test]
fn project_stable_removes_an_unstable_pole() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("anti.json"), r#"{"kind": "standard", "a": [[1.0]], "b": [[1.0]], "c": [[1.0]], "d": [[0.0]]}"#).unwrap();
    ok(d, &["project-stable", "--model", "anti.json", "--mode", "nehari", "--out", "proj.json", "--report", "proj_report.json"]);
    let rep = json(&d.join("proj_report.json"));
    assert!((rep["achieved_error"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    let proj = json(&d.join("proj.json"));
    assert!((proj["d"][0][0].as_f64().unwrap() + 0.5).abs() < 1e-10);
}

#[test]
fn identify_on_lag_data_recovers_the_order() {
    let tmp = tempfile::tempdir().unwrap();
    write_lag(&tmp.path().join("lag.csv"));
    ok(tmp.path(), &["identify", "--data", "lag.csv", "--shift", "1", "--out", "lag_ph.json"]);
    let ph = json(&tmp.path().join("lag_ph.json"));
    assert_eq!(ph["j"].as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes_separate_input_errors_from_numerical_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    std::fs::write(d.join("bad.toml"), "shfit = 1\n").unwrap();
    let out = run(d, &["--config", "bad.toml", "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error [config]"));

    let out = run(d, &["identify", "--data", "missing.csv"]);
    assert_eq!(out.status.code(), Some(2));

    // without the shift, data with D = 0 has too few right-half-plane zeros
    write_lag(&d.join("lag.csv"));
    let out = run(d, &["identify", "--data", "lag.csv", "--shift", "0", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error [identify]") && err.contains("step 5"), "{err}");
}

use std::collections::BTreeMap;
use std::path::Path;

use ph_loewner::io;
use ph_loewner::pipeline::{self, files, FomSource, RunConfig};
use ph_loewner::stable::StabilizationMode;
use ph_loewner::wave::WaveParams;

fn config(out: &Path) -> RunConfig {
    RunConfig {
        fom: FomSource::Generate { h: 0.5, params: WaveParams::default() },
        channels: vec![1],
        out_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn coarse_run_is_accurate_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let rep = pipeline::run_pipeline(&config(&a)).unwrap();
    pipeline::run_pipeline(&config(&b)).unwrap();

    let c = rep.channel(1, 1).unwrap();
    let err = c.ph_error.unwrap();
    assert!(err.max_rel_mag <= 1e-6 && err.accurate, "{err:?}");
    assert!(rep.degraded().is_empty());
    assert!(rep.orders.r < rep.orders.n_fom.unwrap());

    let (ca, cb) = (contents(&a), contents(&b));
    assert_eq!(ca.keys().collect::<Vec<_>>(), cb.keys().collect::<Vec<_>>());
    for name in [files::DATA, files::PH, files::PH_SHIFTED, files::REPORT, files::DIAGNOSTICS, files::LOEWNER] {
        assert!(ca.contains_key(name), "missing {name}");
    }
    for (name, bytes) in &ca {
        if name != files::CONFIG {
            assert!(bytes == &cb[name], "{name} differs between runs");
        }
    }
}

#[test]
fn config_echo_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig { seed: 17, degraded_threshold: 1e-3, ..config(tmp.path()) };
    pipeline::run_pipeline(&cfg).unwrap();
    let back: RunConfig = io::read_json(&tmp.path().join(files::CONFIG)).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn stable_interpolant_needs_no_stabilization() {
    let tmp = tempfile::tempdir().unwrap();
    let nehari = pipeline::run_pipeline(&config(&tmp.path().join("n"))).unwrap();
    let off = pipeline::run_pipeline(&RunConfig { stabilization: StabilizationMode::Off, ..config(&tmp.path().join("o")) }).unwrap();
    let (e1, e2) = (nehari.channel(1, 1).unwrap().ph_error.unwrap(), off.channel(1, 1).unwrap().ph_error.unwrap());
    assert!((e1.max_rel - e2.max_rel).abs() <= 1e-9, "{e1:?} vs {e2:?}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let err = serde_json::from_str::<RunConfig>(r#"{"shfit": 1.0}"#).unwrap_err();
    assert!(err.to_string().contains("shfit"));
    let cfg: RunConfig = serde_json::from_str(r#"{"fom": {"kind": "generate", "h": 0.5}, "channels": [2, 5]}"#).unwrap();
    assert_eq!(cfg.channels, vec![2, 5]);
    assert!(RunConfig { channels: vec![0], ..cfg }.validate().is_err());
}

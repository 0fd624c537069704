use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use roomscope_core::inverse::{detect_peaks, PeakOptions};
use roomscope_core::validation::compare_responses;
use roomscope_core::TransferFunction;
use serde_json::Value;

const CONCRETE: &str = r#"{"kind": "rigid", "band_alpha": [0.029, 0.048, 0.043]}"#;
const MATERIAL_A: &str = r#"{"kind": "porous", "thickness_m": 0.04, "flow_resistivity": 47000}"#;

fn roomscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roomscope"))
        .args(args)
        .env_remove("ROOMSCOPE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn materials(surface1: &str) -> String {
    let rest: Vec<String> = (2..=6).map(|s| format!(r#""{s}": {CONCRETE}"#)).collect();
    format!(r#"{{"1": {surface1}, {}}}"#, rest.join(", "))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_rigid_room_one_corner_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &format!(r#"{{"room": {{"id": 1}}, "materials": {}}}"#, materials(CONCRETE)),
    );
    let out = dir.path().join("tf.csv");
    let o = roomscope(&[
        "simulate",
        "--config",
        s(&cfg),
        "--src",
        "0.05,0.05,0.05",
        "--rcv",
        "2.95,4.45,2.65",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tf = TransferFunction::load_csv(&out).unwrap();
    assert_eq!(tf.len(), 707);
    let peaks = detect_peaks(&tf, &PeakOptions::default());
    for (p, f) in peaks.iter().zip([38.11, 57.17, 63.52, 68.71]) {
        let g = tf.grid();
        let lo = g.freq(p.bin.saturating_sub(1));
        let hi = g.freq(p.bin + 1);
        assert!(lo <= f && f <= hi, "peak bin {} Hz does not bracket {f}", g.freq(p.bin));
    }
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("tf.json")).unwrap()).unwrap();
    assert_eq!(side["solver"], "modal");
    assert_eq!(side["room_m"], serde_json::json!([3.0, 4.5, 2.7]));
    assert_eq!(side["grid"]["bins"], 707);
}

#[test]
fn fdm_reproduces_modal_on_cube_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &format!(
            r#"{{"room": {{"dims": [2, 2, 2]}}, "materials": {},
                "solver": {{"fdm": {{"max_spacing": 0.05}}, "modal": {{"cutoff_margin": 3.0}}}}}}"#,
            materials(MATERIAL_A)
        ),
    );
    let grid = ["--f-min", "20", "--f-max", "150", "--f-step", "0.5"];
    let fdm = dir.path().join("fdm.csv");
    let mut args = vec![
        "simulate",
        "--config",
        s(&cfg),
        "--solver",
        "fdm",
        "--src",
        "0.3,0.4,0.5",
    ];
    args.extend(["--rcv", "1.7,1.45,1.6", "--out", s(&fdm)]);
    args.extend(grid);
    let o = roomscope(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    // the modal run uses the lattice positions reported in the sidecar
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fdm.json")).unwrap()).unwrap();
    let pos = |k: &str| {
        let v: Vec<String> = side[k]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap().to_string())
            .collect();
        v.join(",")
    };
    let (src, rcv) = (pos("source"), pos("receiver"));
    let modal = dir.path().join("modal.csv");
    let mut args = vec![
        "simulate",
        "--config",
        s(&cfg),
        "--src",
        &src,
        "--rcv",
        &rcv,
        "--out",
        s(&modal),
    ];
    args.extend(grid);
    let o = roomscope(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    let a = TransferFunction::load_csv(&modal).unwrap();
    let b = TransferFunction::load_csv(&fdm).unwrap();
    let c = compare_responses(&a, &b).unwrap();
    assert!(c.max_level_db < 1.0, "{c:?}");
    assert!(c.max_peak_rel < 0.01, "{c:?}");
}

#[test]
fn missing_materials_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", r#"{"room": {"id": 1}}"#);
    let o = roomscope(&[
        "simulate",
        "--config",
        s(&cfg),
        "--src",
        "1,1,1",
        "--rcv",
        "2,2,2",
        "--out",
        "x.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("materials"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_incomplete_materials_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.json", r#"{"room": {"id": 1}, "colour": "red"}"#);
    let o = roomscope(&["dataset", "--config", s(&cfg), "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let cfg = write_config(
        dir.path(),
        "b.json",
        &format!(r#"{{"materials": {{"1": {CONCRETE}}}}}"#),
    );
    let o = roomscope(&["dataset", "--config", s(&cfg), "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));

    let o = roomscope(&["simulate", "--config", s(&cfg), "--src", "1,1", "--rcv", "2,2,2"]);
    assert_eq!(o.status.code(), Some(2));

    let o = roomscope(&["dataset", "--config", "/nonexistent/run.json", "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn source_outside_room_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &format!(r#"{{"room": {{"id": 1}}, "materials": {}}}"#, materials(CONCRETE)),
    );
    let out = dir.path().join("tf.csv");
    let o = roomscope(&[
        "simulate",
        "--config",
        s(&cfg),
        "--src",
        "5,1,1",
        "--rcv",
        "2,2,2",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("source position"), "{}", stderr(&o));
}

#[test]
fn dataset_smoke_and_full_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", r#"{"seed": 11}"#);
    let o = roomscope(&["dataset", "--config", s(&cfg), "--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("total: 141750"), "{}", stdout(&o));

    let run = |out: &Path, jobs: &str| {
        let o = roomscope(&[
            "dataset",
            "--config",
            s(&cfg),
            "--subset",
            "1,2,2,2",
            "--policy",
            "both",
            "--jobs",
            jobs,
            "--out",
            s(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let a = run(&dir.path().join("a"), "1");
    let b = run(&dir.path().join("b"), "2");
    assert!(a.contains("total: 16"), "{a}");
    assert!(a.contains("seed: 11"), "{a}");
    let crcs = |t: &str| -> Vec<String> {
        t.lines()
            .filter_map(|l| l.split("crc32=").nth(1))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(crcs(&a).len(), 2);
    assert_eq!(crcs(&a), crcs(&b));

    let o = Command::new(env!("CARGO_BIN_EXE_roomscope"))
        .args(["dataset", "--config", s(&cfg), "--subset", "1,1,1,2", "--dry-run"])
        .env("ROOMSCOPE_SEED", "5")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("total: 2"), "{}", stdout(&o));
    assert!(stdout(&o).contains("seed: 5"), "{}", stdout(&o));
}

#[test]
fn infer_dims_on_room_one_material_a() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &format!(r#"{{"room": {{"id": 1}}, "materials": {}}}"#, materials(MATERIAL_A)),
    );
    let tf = dir.path().join("tf.csv");
    let o = roomscope(&[
        "simulate",
        "--config",
        s(&cfg),
        "--src",
        "0.05,0.05,0.05",
        "--rcv",
        "2.95,4.45,2.65",
        "--out",
        s(&tf),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let report = dir.path().join("report.json");
    let o = roomscope(&[
        "infer-dims",
        "--tf",
        s(&tf),
        "--truth",
        "3,4.5,2.7",
        "--report",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for e in v["axis_errors_m"].as_array().unwrap() {
        assert!(e.as_f64().unwrap() <= 0.10, "{v}");
    }
    let full: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(full["peaks"].as_array().unwrap().len() > 10);

    // manual override: the three lowest axial peaks
    let o = roomscope(&["infer-dims", "--tf", s(&tf), "--manual-peaks", "38.1,57.2,63.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let axes = v["estimate"]["axes"].as_array().unwrap();
    assert_eq!(axes.len(), 3);
    for a in axes {
        assert!(a["flags"].as_array().unwrap().iter().any(|f| f == "MANUAL"), "{a}");
    }
}

#[test]
fn infer_dims_without_resolvable_peaks_fails() {
    let dir = tempfile::tempdir().unwrap();
    // a broad mode just above the lower band edge: detected, never resolved
    let tf = dir.path().join("edge.csv");
    let mut text = String::from("frequency_hz,re,im\n");
    let (w0, d) = (2.0 * std::f64::consts::PI * 42.0, 20.0);
    for i in 0..40 {
        let f = 40.0 + 0.5 * i as f64;
        let w = 2.0 * std::f64::consts::PI * f;
        let (re, im) = (w0 * w0 - w * w, 2.0 * d * w);
        let n = re * re + im * im;
        text.push_str(&format!("{f},{:e},{:e}\n", re / n, -im / n));
    }
    std::fs::write(&tf, text).unwrap();
    let o = roomscope(&["infer-dims", "--tf", s(&tf), "--min-prominence", "0.5"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("UNRESOLVED"), "{}", stderr(&o));
}

#[test]
fn validate_suites() {
    let o = roomscope(&["validate", "--suite", "restoration"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() >= 5, "{out}");
    assert!(!out.contains("FAIL"));

    let o = roomscope(&["validate", "--suite", "fdm-only"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_every_command() {
    let o = roomscope(&["--help"]);
    let h = stdout(&o);
    for c in ["simulate", "dataset", "infer-dims", "validate"] {
        assert!(h.contains(c), "{h}");
    }
    let o = roomscope(&["infer-dims", "--help"]);
    for f in ["--tf", "--tolerance", "--manual-peaks", "--truth"] {
        assert!(stdout(&o).contains(f));
    }
}

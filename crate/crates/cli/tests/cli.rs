use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_euler-spectra"))
        .args(args)
        .env_remove("EULER_SPECTRA_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn cx(v: &Value) -> (f64, f64) {
    (v["re"].as_f64().unwrap(), v["im"].as_f64().unwrap())
}

#[test]
fn eigs_cf_reports_golden_quadruple() {
    let v = json(&["eigs-cf", "--p", "1,1", "--khat", "1,0", "--gamma", "1"]);
    let q = v["quadruples"].as_array().unwrap();
    assert_eq!(q.len(), 1);
    let (re, im) = cx(&q[0]["representative"]);
    assert!((re - 0.248_223_018_041_107).abs() < 1e-12);
    assert!((im - 0.351_720_764_585_448).abs() < 1e-12);
    assert_eq!(q[0]["members"].as_array().unwrap().len(), 4);
}

#[test]
fn band_endpoints() {
    let v = json(&["band", "--p", "1,1", "--khat", "1,0", "--gamma", "1"]);
    assert_eq!(cx(&v["lower"]), (0.0, -0.5));
    assert_eq!(cx(&v["upper"]), (0.0, 0.5));
}

#[test]
fn classes_for_diagonal_shear() {
    let v = json(&["classes", "--p", "1,1"]);
    let open: Vec<&Value> = v["meeting_disk"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["meets_open_disk"].as_bool().unwrap())
        .collect();
    assert_eq!(open.len(), 2);
    assert!(open.iter().all(|e| e["verdict"]["kind"] == "Undetermined"));
    for e in v["scanned"].as_array().unwrap() {
        let kind = e["verdict"]["kind"].as_str().unwrap();
        if e["meets_open_disk"].as_bool().unwrap() {
            assert_eq!(kind, "Undetermined");
        } else if e["meets_closed_disk"].as_bool().unwrap() {
            assert_eq!(kind, "StableHalfClassBoth");
        } else {
            assert!(kind == "StableUDT" || kind == "ParallelTrivial", "{kind}");
        }
    }
}

#[test]
fn json_output_is_deterministic() {
    let args = ["eigs-matrix", "--khat", "1,0", "--n-matrix", "60"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_and_flag_override() {
    let dir = std::env::temp_dir().join(format!("euler-spectra-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# band of the (1,0) class\np = 1,1\nkhat = 1,0\nGamma = 2\n").unwrap();
    let path = cfg.to_str().unwrap();
    let v = json(&["band", "--config", path]);
    assert_eq!(cx(&v["upper"]), (0.0, 1.0));
    let v = json(&["band", "--config", path, "--gamma", "1"]);
    assert_eq!(cx(&v["upper"]), (0.0, 0.5));
    let out_file = dir.join("band.csv");
    let out = run(&["band", "--config", path, "--format", "csv", "-o", out_file.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&out_file).unwrap();
    assert!(csv.starts_with("re,im\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn simulate_stable_class_respects_bound() {
    let v = json(&["simulate", "--khat", "3,0", "--dt", "0.01", "--steps", "300"]);
    assert_eq!(v["verdict"]["kind"], "StableUDT");
    assert!(v["max_enstrophy_ratio"].as_f64().unwrap() <= 5.0 / 3.0);
    assert!(v["I_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn euler_sim_conserves() {
    let v = json(&["euler-sim", "--amplitude", "0.1", "--steps", "100"]);
    assert!(v["E_drift"].as_f64().unwrap() < 1e-8);
    assert!(v["J_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["eigs-cf"]).status.code(), Some(1));
    assert_eq!(run(&["band", "--khat", "1,0", "--set", "sizes.bogus=1"]).status.code(), Some(1));
    assert_eq!(run(&["eigs-matrix", "--khat", "1,0", "--n-matrix", "100000"]).status.code(), Some(1));
    let out = run(&["eigs-matrix", "--khat", "1,0", "--n-matrix", "60", "--eig-residual", "1e-300"]);
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_euler-spectra"))
        .args(["band", "--khat", "1,0"])
        .env("EULER_SPECTRA_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_single_criterion() {
    let out = run(&["verify", "--only", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("[PASS] 7."));
    assert_eq!(run(&["verify", "--only", "42"]).status.code(), Some(1));
}

#[test]
fn thread_cap_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_euler-spectra"))
        .args(["eigs-cf", "--khat", "1,0"])
        .env("EULER_SPECTRA_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let single: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(single, json(&["eigs-cf", "--khat", "1,0"]));
}

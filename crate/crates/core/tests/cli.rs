use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bsq(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsq")).args(args).current_dir(cwd).env_remove("BSQ_OUT_DIR").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn scenario(dir: &Path, file: &str, json: &str) -> PathBuf {
    let p = dir.join(file);
    std::fs::write(&p, json).unwrap();
    p
}

fn torus_eq4(name: &str, n: usize) -> String {
    format!(
        r#"{{"name": "{name}", "surface": {{"model": "flat_torus", "level": 1}}, "seed": 5,
            "checks": ["eq4"], "N": {n}, "samples": {{"cycles": 3, "field_pairs": 2}}}}"#
    )
}

#[test]
fn list_checks() {
    let tmp = TempDir::new().unwrap();
    let out = bsq(&["list-checks"], tmp.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["eq4", "prop1", "bs-fibers", "prop3", "toeplitz", "prop4", "boundary-scan", "convergence"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing");
    }
}

#[test]
fn passing_run_writes_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "a.json", &torus_eq4("mini", 64));
    let out = bsq(&["run", cfg.to_str().unwrap(), "--out-dir", "out"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stdout).unwrap().contains("eq4            PASS"));
    for f in ["report.json", "timings.json"] {
        assert!(tmp.path().join("out/mini").join(f).is_file());
    }
}

#[test]
fn default_output_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "a.json", &torus_eq4("mini", 64));
    assert_eq!(code(&bsq(&["run", "a.json"], tmp.path())), 0);
    assert!(cfg.with_file_name("bsq-out/mini/report.json").is_file());
}

#[test]
fn invalid_input_exits_2() {
    let tmp = TempDir::new().unwrap();
    let odd = scenario(tmp.path(), "odd.json", &torus_eq4("odd", 15));
    let unknown = scenario(tmp.path(), "unknown.json", &torus_eq4("u", 64).replace("\"eq4\"", "\"eq9\""));
    let sphere_only = scenario(tmp.path(), "so.json", &torus_eq4("so", 64).replace("\"eq4\"", "\"toeplitz\""));
    let garbled = scenario(tmp.path(), "bad.json", "{");
    for p in [&odd, &unknown, &sphere_only, &garbled] {
        let out = bsq(&["run", p.to_str().unwrap()], tmp.path());
        assert_eq!(code(&out), 2, "{}", p.display());
        assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
    }
    assert_eq!(code(&bsq(&["run", "missing.json"], tmp.path())), 2);
    assert_eq!(code(&bsq(&["frobnicate"], tmp.path())), 2);
    let ok = scenario(tmp.path(), "ok.json", &torus_eq4("ok", 64));
    assert_eq!(code(&bsq(&["run", ok.to_str().unwrap(), "--tol-scale", "-1"], tmp.path())), 2);
}

#[test]
fn failing_check_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(
        tmp.path(),
        "scan.json",
        r#"{"name": "scan", "surface": {"model": "round_sphere", "level": 4}, "seed": 1, "checks": ["boundary-scan"]}"#,
    );
    let out = bsq(&["run", cfg.to_str().unwrap(), "--out-dir", "out"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stdout).unwrap().contains("boundary-scan  FAIL"));
    let report = std::fs::read_to_string(tmp.path().join("out/scan/report.json")).unwrap();
    assert!(report.contains("\"pass\": false"));
    assert!(tmp.path().join("out/scan/scan.csv").is_file());
}

#[test]
fn converge_across_reports() {
    let tmp = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for n in [64, 128, 256] {
        let cfg = scenario(tmp.path(), &format!("n{n}.json"), &torus_eq4(&format!("n{n}"), n));
        assert_eq!(code(&bsq(&["run", cfg.to_str().unwrap(), "--out-dir", "runs"], tmp.path())), 0);
        reports.push(format!("runs/n{n}/report.json"));
    }
    let single = bsq(&["converge", &reports[0], "--out-dir", "conv1"], tmp.path());
    assert_eq!(code(&single), 2);

    let mut args = vec!["converge"];
    args.extend(reports.iter().map(String::as_str));
    args.extend(["--out-dir", "conv"]);
    let out = bsq(&args, tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(tmp.path().join("conv/convergence.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    assert!(csv.contains("eq4"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(
        tmp.path(),
        "s.json",
        r#"{"name": "s", "surface": {"model": "round_sphere", "level": 3}, "seed": 2, "checks": ["bs-fibers", "prop3", "toeplitz"], "N": 64}"#,
    );
    let mut reports = Vec::new();
    for dir in ["r1", "r2"] {
        assert_eq!(code(&bsq(&["run", cfg.to_str().unwrap(), "--out-dir", dir], tmp.path())), 0);
        reports.push(std::fs::read(tmp.path().join(dir).join("s/report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(code(&bsq(&["run", cfg.to_str().unwrap(), "--out-dir", "r3", "--seed", "9"], tmp.path())), 0);
    assert_ne!(std::fs::read(tmp.path().join("r3/s/report.json")).unwrap(), reports[0]);
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

/// Coarse settings that keep every subcommand to a few seconds.
const SMALL: &[&str] = &[
    "--set",
    "grid.nx=256",
    "--set",
    "grid.ny=8",
    "--set",
    "stability.k_samples=7",
    "--set",
    "stability.cond_samples=5",
];

fn chkp(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chkp"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn small(out: &Path, args: &[&str]) -> Output {
    let all: Vec<&str> = SMALL.iter().chain(args).copied().collect();
    chkp(out, &all)
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

#[test]
fn help_lists_every_subcommand() {
    let o = Command::new(env!("CARGO_BIN_EXE_chkp")).arg("--help").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in [
        "soliton",
        "spectrum",
        "scan",
        "rt-check",
        "grenier",
        "simulate",
        "instability",
        "scaling",
        "report",
    ] {
        assert!(text.contains(cmd), "missing {cmd} in help:\n{text}");
    }
}

#[test]
fn soliton_writes_profile_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = chkp(dir.path(), &["--set", "grid.nx=512", "soliton"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!(v["residual"].as_f64().unwrap() < 1e-8);
    assert!(dir.path().join("soliton.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = chkp(dir.path(), &["--set", "grid.nz=4", "soliton"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("nz"));

    let bad_grid = chkp(dir.path(), &["--set", "grid.nx=100", "soliton"]);
    assert_eq!(bad_grid.status.code(), Some(1));

    let missing = chkp(dir.path(), &["--config", "/nonexistent/chkp.toml", "soliton"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/chkp.toml"));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chkp.toml");
    std::fs::write(&cfg, "[grid]\nnx = 512\nny = 8\n[physics]\nc = 4.0\n").unwrap();
    let o = chkp(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "physics.kappa=1.5",
            "soliton",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let peak = v["properties"]["peak"].as_f64().unwrap();
    assert!((peak - 1.0).abs() < 1e-9, "peak {peak} != c - 2κ = 1");
    assert_eq!(v["nx"], 512);
}

#[test]
fn spectrum_and_scan_report_the_reference_structure() {
    let dir = tempfile::tempdir().unwrap();
    let hc = small(dir.path(), &["spectrum"]);
    assert_eq!(hc.status.code(), Some(0));
    let v = stdout_json(&hc);
    assert_eq!(v["negative_count"], 1);
    assert_eq!(v["near_zero_count"], 1);

    let jl = small(dir.path(), &["spectrum", "--k", "0.2", "--count", "2"]);
    let v = stdout_json(&jl);
    let lead = v["leading"][0][0].as_f64().unwrap();
    assert!(lead > 0.1 && lead < 0.13, "leading Re σ(0.2) = {lead}");
    assert_eq!(v["leading"].as_array().unwrap().len(), 2);

    let scan = small(dir.path(), &["scan"]);
    assert_eq!(scan.status.code(), Some(0));
    let band_hi = stdout_json(&scan)["band"][1].as_f64().unwrap();
    assert!((band_hi - 0.3217).abs() < 1e-3, "band edge {band_hi}");
    let csv = std::fs::read_to_string(dir.path().join("branch.csv")).unwrap();
    assert!(csv.starts_with("k,re_sigma,im_sigma"));
}

#[test]
fn rt_check_passes_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = small(dir.path(), &["rt-check"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    for c in ["cond1", "cond2", "cond3", "cond4"] {
        assert_eq!(v[c]["pass"], true, "{c}");
    }
    assert!(dir.path().join("conditions.json").exists());
}

#[test]
fn grenier_verdict_depends_on_the_fit_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let long = small(dir.path(), &["grenier"]);
    assert_eq!(long.status.code(), Some(0), "{}", String::from_utf8_lossy(&long.stdout));
    assert_eq!(stdout_json(&long)["growth"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(dir.path().join("grenier_norms.csv")).unwrap();
    assert!(csv.starts_with("t,norm_v0,norm_v1,norm_v2\n"));
    // Over a short horizon the transient dominates the higher-order fits.
    let short = small(dir.path(), &["grenier", "--t-end", "10"]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn simulate_writes_traces_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let o = small(dir.path(), &["simulate", "--t-end", "1", "--delta", "1e-3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["steps"], 50);
    assert!(v["h_drift"].as_f64().unwrap() < 1e-6);
    let snap = chkp_core::sim::read_snapshot(&dir.path().join("snapshot.bin")).unwrap();
    assert!((snap.t - 1.0).abs() < 1e-12);
    assert!(dir.path().join("traces.csv").exists());
}

#[test]
fn instability_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = small(dir.path(), &["--set", "run.delta_list=[1e-2,1e-3,1e-4]", "instability"]);
    let v = stdout_json(&o);
    assert_eq!(o.status.code(), Some(0), "{v:#}");
    assert_eq!(v["pass"], true);
    for name in [
        "branch.csv",
        "growth.svg",
        "scaling.csv",
        "growth_1e-3.csv",
        "report.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let svg = std::fs::read_to_string(dir.path().join("growth.svg")).unwrap();
    assert_eq!(svg.matches("class=\"series\"").count(), 4);

    let r = chkp(dir.path(), &["report"]);
    assert_eq!(r.status.code(), Some(0));
    let rv = stdout_json(&r);
    assert_eq!(rv["runs"].as_array().unwrap().len(), 3);
    assert_eq!(rv["scaling"], v["scaling"]);
}

#[test]
fn scaling_requires_two_decades() {
    let dir = tempfile::tempdir().unwrap();
    let o = small(dir.path(), &["--set", "run.delta_list=[1e-3,2e-3,4e-3]", "scaling"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 decades"));
}

#[test]
fn report_on_missing_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = chkp(dir.path(), &["report", "/nonexistent/report.json"]);
    assert_eq!(o.status.code(), Some(1));
}

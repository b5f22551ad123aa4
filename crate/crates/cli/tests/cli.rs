use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dsas_core::synthesis::SynthesisResult;
use dsas_sdp::{export_sdpa, import_sdpa};
use tempfile::TempDir;

fn root(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn reduced() -> PathBuf {
    root("configs/dsas_reduced_wind.toml")
}

fn fixture_gains() -> PathBuf {
    root("fixtures/gains_reduced_wind.txt")
}

fn dsas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsas"))
        .args(args)
        .env_remove("DSAS_CONFIG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&dsas(&["--help"])), 0);
    assert_eq!(code(&dsas(&["frobnicate"])), 1);
    assert_eq!(code(&dsas(&[])), 1);
    let o = dsas(&["simulate", "--gains", "g.txt", "--preset", "test1", "--all-presets"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_config_reports_path() {
    let o = dsas(&["--config", "/nonexistent/cfg.toml", "verify", "--gains", "x"]);
    assert_eq!(code(&o), 1);
    assert!(text(&o.stderr).contains("/nonexistent/cfg.toml"));
}

#[test]
fn verify_accepts_fixture_certificate() {
    let o = dsas(&["--config", s(&reduced()), "verify", "--gains", s(&fixture_gains())]);
    let out = text(&o.stdout);
    assert_eq!(code(&o), 0, "{out}");
    assert!(!out.contains("[FAIL]"));
    assert!(out.contains("[PASS] certificate.boundary_decay"));
    assert!(out.contains("[PASS] sim.wind_free_convergence"));
}

#[test]
fn config_path_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_dsas"))
        .args(["verify", "--quick", "--gains", s(&fixture_gains())])
        .env("DSAS_CONFIG", reduced())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
}

#[test]
fn tampered_certificate_fails_verification() {
    let dir = TempDir::new().unwrap();
    let mut res = SynthesisResult::from_text(&std::fs::read_to_string(fixture_gains()).unwrap()).unwrap();
    res.x[(2, 3)] *= 1.1;
    res.x[(3, 2)] = res.x[(2, 3)];
    let path = dir.path().join("tampered.txt");
    std::fs::write(&path, res.to_text()).unwrap();
    let o = dsas(&["--config", s(&reduced()), "verify", "--quick", "--gains", s(&path)]);
    assert_eq!(code(&o), 4);
    assert!(text(&o.stdout).contains("[FAIL] certificate.lmi_margins"));
}

#[test]
fn unreadable_gains_are_io_errors() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("corrupt.txt");
    let mut body = std::fs::read_to_string(fixture_gains()).unwrap();
    body.truncate(body.len() / 2);
    body.push_str("garbage\n");
    std::fs::write(&bad, body).unwrap();
    for gains in [bad, dir.path().join("absent.txt")] {
        let o = dsas(&["--config", s(&reduced()), "verify", "--gains", s(&gains)]);
        assert_eq!(code(&o), 1);
        let o = dsas(&["--config", s(&reduced()), "simulate", "--gains", s(&gains), "--preset", "test1"]);
        assert_eq!(code(&o), 1);
    }
}

#[test]
fn certificate_for_other_vehicle_is_refused() {
    let dir = TempDir::new().unwrap();
    let layer = dir.path().join("heavier.toml");
    std::fs::write(&layer, "[vehicle]\nM = 1600.0\n").unwrap();
    let cfg = format!("{},{}", s(&reduced()), s(&layer));
    let out = dir.path().join("out");
    let o = dsas(&["--config", &cfg, "simulate", "--gains", s(&fixture_gains()), "--preset", "test1", "--out-dir", s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(text(&o.stderr).contains("fingerprint"));
}

#[test]
fn weak_actuator_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let layer = dir.path().join("weak.toml");
    std::fs::write(&layer, "[design]\nu_max = 0.001\n").unwrap();
    let cfg = format!("{},{}", s(&reduced()), s(&layer));
    let o = dsas(&["--config", &cfg, "synth", "--out", s(&dir.path().join("g.txt"))]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("g.txt").exists());
}

#[test]
fn synth_reproduces_fixture() {
    let dir = TempDir::new().unwrap();
    let gains = dir.path().join("gains.txt");
    let report = dir.path().join("report.txt");
    let o = dsas(&["--config", s(&reduced()), "synth", "--out", s(&gains), "--report", s(&report)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert_eq!(std::fs::read(&gains).unwrap(), std::fs::read(fixture_gains()).unwrap());
    let rep = std::fs::read_to_string(&report).unwrap();
    assert!(rep.contains("tau_1 3.000000e-1"));
    assert!(rep.lines().filter(|l| l.starts_with("K_")).count() == 8);
}

#[test]
fn simulate_test3_shows_clipping() {
    let dir = TempDir::new().unwrap();
    let o = dsas(&[
        "--config",
        s(&reduced()),
        "simulate",
        "--gains",
        s(&fixture_gains()),
        "--preset",
        "test3",
        "--out-dir",
        s(dir.path()),
        "--plot",
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
    assert!(dir.path().join("test3/plot.svg").exists());
    let mut rd = csv::Reader::from_path(dir.path().join("test3/trace.csv")).unwrap();
    let header = rd.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (ur, us, tc, mu) = (col("u_raw"), col("u_sat"), col("T_c"), col("mu"));
    let mut clipped = 0;
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        let v = |k: usize| rec[k].parse::<f64>().unwrap();
        rows += 1;
        assert!(v(us).abs() <= 15.0);
        assert!(v(tc).abs() <= 15.0 * v(mu) + 1e-12);
        if v(ur).abs() > 15.0 {
            assert_eq!(v(us).abs(), 15.0);
            clipped += 1;
        }
    }
    assert_eq!(rows, 100_001);
    assert!(clipped > 0);
}

#[test]
fn simulate_is_deterministic_and_flags_violations() {
    let dir = TempDir::new().unwrap();
    let sc = dir.path().join("yaw.toml");
    std::fs::write(&sc, "name = \"yaw_kick\"\nduration = 2.0\ninitial_state = [0.0, 0.6, 0.0, 0.0, 0.0, 0.0]\n").unwrap();
    let run = |out: &Path| {
        dsas(&[
            "--config",
            s(&reduced()),
            "simulate",
            "--gains",
            s(&fixture_gains()),
            "--scenario",
            s(&sc),
            "--out-dir",
            s(out),
        ])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run(&a);
    assert_eq!(code(&o), 3);
    assert!(text(&o.stdout).contains("VIOLATED"));
    assert_eq!(code(&run(&b)), 3);
    assert_eq!(
        std::fs::read(a.join("yaw_kick/trace.csv")).unwrap(),
        std::fs::read(b.join("yaw_kick/trace.csv")).unwrap()
    );
}

#[test]
fn all_presets_write_one_directory_each() {
    let dir = TempDir::new().unwrap();
    let o = dsas(&[
        "--config",
        s(&reduced()),
        "simulate",
        "--gains",
        s(&fixture_gains()),
        "--all-presets",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
    for p in ["test1", "test2", "test3"] {
        assert!(dir.path().join(p).join("trace.csv").exists());
    }
}

#[test]
fn sdpa_export_round_trips() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("dsas.dat-s");
    let o = dsas(&["--config", s(&reduced()), "export-sdpa", "--out", s(&path)]);
    assert_eq!(code(&o), 0);
    let body = std::fs::read_to_string(&path).unwrap();
    let p = import_sdpa(&body).unwrap();
    assert_eq!(p.num_vars, 855);
    assert_eq!(export_sdpa(&p), body);

    let o = dsas(&["--config", s(&reduced()), "export-sdpa", "--out", "/dev/null/x.dat-s"]);
    assert_eq!(code(&o), 1);
}

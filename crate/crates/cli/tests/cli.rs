use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fcsim_core::rng::SimRng;

fn fcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcsim"))
        .args(args)
        .env_remove("FCSIM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

const SMALL: &str =
    "[run]\nn_initial = 40\nsteps = 3000\nseed = 11\nvariance_window = 20\n\n[model]\nb = 1.2\nhorizon = 5\n";

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_files_and_stable_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    write(&cfg, SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = fcsim(&["simulate", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ts = fs::read_to_string(a.join("timeseries.csv")).unwrap();
    assert!(ts.starts_with("step,price,return,N_c,N_f,N,rolling_variance\n"));
    assert_eq!(ts.lines().count(), 3001);
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["files"].as_array().unwrap().len(), 2);
    assert_eq!(ts, fs::read_to_string(b.join("timeseries.csv")).unwrap());
}

#[test]
fn seed_and_recording_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    write(&cfg, SMALL);
    let dir = tmp.path().join("o");
    let out = fcsim(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "5",
        "--record-every",
        "10",
        "--burn-in",
        "1000",
    ]);
    assert!(out.status.success());
    let ts = fs::read_to_string(dir.join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().count(), 201);
    assert!(ts.lines().nth(1).unwrap().starts_with("1010,"));
    assert_eq!(manifest(&dir)["seed"], 5);
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    write(&cfg, SMALL);
    let dir = tmp.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_fcsim"))
        .args(["simulate", cfg.to_str().unwrap()])
        .env("FCSIM_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    write(&bad, "[model]\ngamma = -0.1\n");
    let out = fcsim(&[
        "simulate",
        bad.to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));

    let hyst = tmp.path().join("h.toml");
    write(&hyst, "[selforg]\ntheta_in = 0.1\ntheta_out = 0.2\n");
    let out = fcsim(&[
        "selforg",
        hyst.to_str().unwrap(),
        "--out",
        tmp.path().join("y").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hysteresis"));

    assert_eq!(fcsim(&["simulate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(fcsim(&[]).status.code(), Some(1));
    assert_eq!(
        fcsim(&["preset", "fig9", "--out", tmp.path().to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(fcsim(&["simulate", "/nonexistent/config.toml"]).status.code(), Some(3));
}

#[test]
fn overflow_exits_with_runtime_code_and_flags_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    write(
        &cfg,
        "[run]\nn_initial = 10\nsteps = 5000\ninitial_chartist_fraction = 1.0\nfrozen_population = true\n\n[model]\nb = 50.0\nsigma = 1.0\nhorizon = 2\n",
    );
    let dir = tmp.path().join("o");
    let out = fcsim(&["simulate", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(&dir);
    assert!(m["aborted"].as_str().unwrap().contains("overflow"));
}

#[test]
fn stats_on_gaussian_walk() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = SimRng::new(31);
    let mut text = String::from("step,price,return,N_c,N_f,N,rolling_variance\n");
    let mut p = 100.0;
    for s in 1..=100_000 {
        let r = rng.standard_normal();
        p += r;
        text.push_str(&format!("{s},{p},{r},0,10,10,\n"));
    }
    let ts = tmp.path().join("ts.csv");
    write(&ts, &text);
    let dir = tmp.path().join("stats");
    let out = fcsim(&["stats", ts.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let kurt: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("excess_kurtosis,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(kurt.abs() < 0.1, "{kurt}");
    assert!(dir.join("acf.csv").exists() && dir.join("conditional.csv").exists());
}

#[test]
fn single_point_sweep_matches_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    write(&cfg, SMALL);
    let sweep = tmp.path().join("s.toml");
    write(&sweep, &format!("mode = \"grid\"\n{SMALL}\n[grid]\nb = [1.2]\n"));
    let sim_dir = tmp.path().join("sim");
    let sweep_dir = tmp.path().join("sweep");
    assert!(
        fcsim(&["simulate", cfg.to_str().unwrap(), "--out", sim_dir.to_str().unwrap()])
            .status
            .success()
    );
    let out = fcsim(&["sweep", sweep.to_str().unwrap(), "--out", sweep_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["timeseries.csv", "config.toml"] {
        assert_eq!(
            fs::read(sim_dir.join(f)).unwrap(),
            fs::read(sweep_dir.join("run_0000").join(f)).unwrap(),
            "{f}"
        );
    }
    let index = fs::read_to_string(sweep_dir.join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), 2);
    assert!(index.lines().nth(1).unwrap().contains(",ok,"));
}

#[test]
fn selforg_command_varies_population() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    write(
        &cfg,
        "[run]\nn_initial = 50\nsteps = 2000\n\n[selforg]\ntheta_in = 1e-9\ntheta_out = 1e-10\nwindow = 10\nn_min = 10\nn_max = 80\n",
    );
    let dir = tmp.path().join("o");
    assert!(
        fcsim(&["selforg", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
            .status
            .success()
    );
    let ts = fs::read_to_string(dir.join("timeseries.csv")).unwrap();
    let last = ts.lines().last().unwrap();
    assert_eq!(last.split(',').nth(5), Some("80"));
}

#[test]
fn preset_runs_all_members_in_parallel_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, par) in [(&a, "1"), (&b, "3")] {
        let out = fcsim(&[
            "preset",
            "fig2_intermittency",
            "--out",
            dir.to_str().unwrap(),
            "--max-parallel",
            par,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for label in ["n50", "n500", "n5000"] {
        let f = |d: &Path| fs::read(d.join("fig2_intermittency").join(label).join("timeseries.csv")).unwrap();
        assert_eq!(f(&a), f(&b), "{label}");
    }
}

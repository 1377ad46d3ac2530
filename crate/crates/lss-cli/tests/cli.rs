//! Contract tests for the command-line surface: exit codes, file formats,
//! and reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lss")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_counterexample(dir: &Path) -> PathBuf {
    let path = dir.join("counterexample.json");
    std::fs::write(
        &path,
        r#"{"kind": "quadratic", "dx": 1, "dy": 1, "matrix": [[1, 1], [1, 0.1]]}"#,
    )
    .unwrap();
    path
}

fn write_toy(dir: &Path) -> PathBuf {
    let path = dir.join("toy.json");
    std::fs::write(&path, r#"{"kind": "toy2d"}"#).unwrap();
    path
}

#[test]
fn analyze_counterexample_reports_non_nash_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_counterexample(dir.path());
    let out = dir.path().join("report.json");
    let (code, _, _) = run(&[
        "analyze",
        "--game",
        game.to_str().unwrap(),
        "--box",
        "-2,2",
        "--grid",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let points = report.as_array().unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0]["classification"], "non_nash_lase");
    for eig in points[0]["jacobian_eigs"].as_array().unwrap() {
        assert!((eig["re"].as_f64().unwrap() - 0.45).abs() <= 1e-3);
        assert!((eig["im"].as_f64().unwrap().abs() - 0.835).abs() <= 1e-3);
    }
}

#[test]
fn analyze_toy2d_census() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_toy(dir.path());
    let (code, stdout, _) = run(&["analyze", "--game", game.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let points = report.as_array().unwrap();
    let count = |c: &str| points.iter().filter(|p| p["classification"] == c).count();
    assert_eq!(points.len(), 9);
    assert_eq!(count("dne"), 3);
    assert_eq!(count("non_nash_lase"), 1);
    assert_eq!(count("unstable"), 5);
}

#[test]
fn analyze_flags_non_hyperbolic_with_exit_2() {
    // f = xy: J = [[0,1],[-1,0]], purely imaginary eigenvalues
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("rotation.json");
    std::fs::write(
        &game,
        r#"{"kind": "quadratic", "dx": 1, "dy": 1, "matrix": [[0, 1], [1, 0]]}"#,
    )
    .unwrap();
    let (code, stdout, _) = run(&["analyze", "--game", game.to_str().unwrap(), "--box", "-1,1", "--grid", "3"]);
    assert_eq!(code, 2);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report[0]["classification"], "non_hyperbolic");
    assert_eq!(report[0]["hyperbolic"], false);
}

#[test]
fn analyze_rejects_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kind": "quadratic", "dx": 1, "dy": 1, "matrix": [[1, 1]]}"#).unwrap();
    let (code, _, stderr) = run(&["analyze", "--game", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("matrix"), "stderr must name the offending field: {stderr}");

    let asym = dir.path().join("asym.json");
    std::fs::write(
        &asym,
        r#"{"kind": "quadratic", "dx": 1, "dy": 1, "matrix": [[1, 1], [0.9, 0.1]]}"#,
    )
    .unwrap();
    let (code, _, _) = run(&["analyze", "--game", asym.to_str().unwrap()]);
    assert_eq!(code, 1);

    let toy = write_toy(dir.path());
    let (code, _, _) = run(&["analyze", "--game", toy.to_str().unwrap(), "--box", "2,-2"]);
    assert_eq!(code, 1, "empty box (lo > hi) is a usage error");
}

#[test]
fn simulate_co_reaches_origin_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_counterexample(dir.path());
    let out = dir.path().join("co.csv");
    let args = [
        "simulate",
        "--game",
        game.to_str().unwrap(),
        "--rule",
        "co",
        "--lambda-co",
        "1",
        "--init",
        "0.3,-0.3",
        "--steps",
        "20000",
        "--a-c",
        "0.05",
        "--stride",
        "100",
        "--out",
        out.to_str().unwrap(),
    ];
    let (code, _, _) = run(&args);
    assert_eq!(code, 0);
    let first = std::fs::read(&out).unwrap();
    let last_row = String::from_utf8_lossy(&first);
    let last_row = last_row.lines().last().unwrap();
    let cols: Vec<f64> = last_row.split(',').skip(1).take(2).map(|c| c.parse().unwrap()).collect();
    assert!((cols[0].powi(2) + cols[1].powi(2)).sqrt() <= 1e-3);

    // byte-identical on re-run with the same flags
    let (code, _, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);

    // the JSON mirror echoes the resolved config
    let mirror: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(mirror["config"]["rule"], "co");
    assert_eq!(mirror["config"]["steps"], 20000);
    assert!(mirror["game_hash"].as_str().unwrap().len() == 64);
    assert!(mirror["trajectory"]["samples"].as_array().unwrap().len() > 1);
}

#[test]
fn simulate_zero_steps_emits_initial_row_only() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_toy(dir.path());
    let out = dir.path().join("zero.csv");
    let (code, _, _) = run(&[
        "simulate",
        "--game",
        game.to_str().unwrap(),
        "--rule",
        "lss",
        "--init",
        "0.5,0.5",
        "--steps",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2); // header + initial state
    assert!(lines[0].starts_with("n,z_0,z_1,v_0,v_1"));
    assert!(lines[1].starts_with("0,0.5,0.5"));
}

#[test]
fn simulate_divergence_exits_3_with_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_counterexample(dir.path());
    let out = dir.path().join("div.csv");
    // undamped adjusted flow on the linear game diverges along y
    let (code, _, _) = run(&[
        "simulate",
        "--game",
        game.to_str().unwrap(),
        "--rule",
        "lss-ode",
        "--xi2",
        "0",
        "--init",
        "0.3,-0.3",
        "--dt",
        "0.05",
        "--steps",
        "10000",
        "--stride",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().count() > 2, "partial data retained");
    assert!(text.trim_end().ends_with('3') || text.contains("# DIVERGED at n="));
    assert!(text.lines().last().unwrap().starts_with("# DIVERGED at n="));
}

#[test]
fn simulate_svg_is_emitted_and_does_not_change_csv() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_counterexample(dir.path());
    let plain = dir.path().join("plain.csv");
    let with_svg = dir.path().join("plot.csv");
    let svg = dir.path().join("plot.svg");
    let base = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--game".into(),
            game.to_str().unwrap().into(),
            "--rule".into(),
            "simgd".into(),
            "--init".into(),
            "0.3,-0.3".into(),
            "--steps".into(),
            "2000".into(),
            "--a-c".into(),
            "0.05".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let (code, _, _) = run(&base(&plain).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(code, 0);
    let mut args = base(&with_svg);
    args.push("--svg".into());
    args.push(svg.to_str().unwrap().into());
    let (code, _, _) = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(code, 0);

    assert_eq!(std::fs::read(&plain).unwrap(), std::fs::read(&with_svg).unwrap());
    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.starts_with("<svg"));
    assert!(svg_text.contains("<polyline"));
    assert!(svg_text.contains('*'), "non-Nash marker rendered");
}

#[test]
fn simulate_noise_seed_controls_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_toy(dir.path());
    let run_seed = |seed: &str, out: &Path| {
        let (code, _, _) = run(&[
            "simulate",
            "--game",
            game.to_str().unwrap(),
            "--rule",
            "lss",
            "--init",
            "12.2,-6.2",
            "--steps",
            "2000",
            "--a-c",
            "0.01",
            "--a-alpha",
            "0.8",
            "--b-c",
            "0.005",
            "--b-alpha",
            "0.6",
            "--noise",
            "bounded-uniform",
            "--cz",
            "0.05",
            "--cv",
            "0.05",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        std::fs::read(out).unwrap()
    };
    let a = run_seed("7", &dir.path().join("a.csv"));
    let b = run_seed("7", &dir.path().join("b.csv"));
    let c = run_seed("8", &dir.path().join("c.csv"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn preset_rejects_unknown_name_listing_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(&["preset", "--name", "bogus", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    for name in ["toy2d-figure1", "toy2d-figure2", "counterexample-appB"] {
        assert!(stderr.contains(name), "stderr must list `{name}`: {stderr}");
    }
}

#[test]
fn preset_counterexample_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("appB");
    let (code, _, _) = run(&["preset", "--name", "counterexample-appB", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["all_pass"], true);
    assert_eq!(summary["any_diverged"], false);
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 8); // 2ts + 3 co + 3 sga + lss
    for r in runs {
        assert_eq!(r["pass"], true, "run {} failed its expectation", r["name"]);
        let rule = r["rule"].as_str().unwrap();
        if rule == "lss" {
            assert_eq!(r["terminal"], "escaped");
        } else {
            assert_eq!(r["terminal"], "non_nash_lase");
        }
        // per-run files exist
        assert!(out.join(r["csv"].as_str().unwrap()).exists());
        assert!(out.join(r["svg"].as_str().unwrap()).exists());
    }
}

#[test]
fn preset_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let serial = dir.path().join("serial");
    let parallel = dir.path().join("parallel");
    for (threads, out) in [("0", &serial), ("4", &parallel)] {
        let status = Command::new(bin())
            .args(["preset", "--name", "counterexample-appB", "--out-dir", out.to_str().unwrap()])
            .env("LSS_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for entry in std::fs::read_dir(&serial).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            assert_eq!(
                std::fs::read(serial.join(&name)).unwrap(),
                std::fs::read(parallel.join(&name)).unwrap(),
                "{name:?} differs between serial and parallel runs"
            );
        }
    }
}

#[test]
fn lockin_validates_radii_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_toy(dir.path());
    let (code, _, stderr) = run(&[
        "lockin",
        "--game",
        game.to_str().unwrap(),
        "--center",
        "12.395007146419,-6.372831318444",
        "--r0",
        "0.05",
        "--epsilon",
        "0.1",
        "--n0",
        "10",
        "--n1",
        "20",
        "--horizon",
        "30",
        "--trials",
        "2",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("epsilon"));
}

#[test]
fn lockin_noise_free_reports_certainty() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_toy(dir.path());
    let out = dir.path().join("lockin.json");
    let (code, _, _) = run(&[
        "lockin",
        "--game",
        game.to_str().unwrap(),
        "--center",
        "12.395007146419,-6.372831318444",
        "--r0",
        "0.1",
        "--epsilon",
        "0.05",
        "--n0",
        "1000",
        "--n1",
        "11000",
        "--horizon",
        "16000",
        "--trials",
        "10",
        "--a-c",
        "0.05",
        "--a-alpha",
        "0.8",
        "--b-c",
        "0.2",
        "--b-alpha",
        "0.6",
        "--noise",
        "none",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["p_hat"], 1.0);
    assert_eq!(report["successes"], 10);
    assert!(report["wall_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["config"]["noise"], "none");
}

#[test]
fn help_and_bad_flags_follow_exit_contract() {
    let (code, stdout, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("analyze"));
    let (code, _, _) = run(&["analyze", "--no-such-flag"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 1);
}

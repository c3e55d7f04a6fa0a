//! End-to-end exercises of the `polnlos` binary: the simulate /
//! reconstruct / metrics pipeline, transport conditioning, sweep CSV
//! output, run manifests, and error exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default_table1.json")
}

fn polnlos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polnlos"))
        .args(args)
        .output()
        .expect("binary must spawn")
}

fn run_ok(args: &[&str]) -> String {
    let out = polnlos(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout must be utf-8")
}

/// Parse `key value` lines as printed by `cond` and `metrics`.
fn value_of(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no `{key}` line in {stdout:?}"))
        .parse()
        .expect("value must parse as f64")
}

#[test]
fn transport_and_cond_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.pnlt");
    let cfg = config_path();
    let stdout = run_ok(&[
        "transport",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        t.to_str().unwrap(),
        "--polarizer",
        "off",
    ]);
    assert!(stdout.contains("transport matrix"));
    assert!(t.exists());
    // A manifest is written next to the output.
    let manifest = dir.path().join("t.pnlt.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "transport");

    let kappa = value_of(&run_ok(&["cond", "--transport", t.to_str().unwrap()]), "condition_number");
    assert!(kappa.is_finite() && kappa > 1.0);

    // The polarized matrix of the default scene is better conditioned.
    let tp = dir.path().join("tp.pnlt");
    run_ok(&[
        "transport",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tp.to_str().unwrap(),
        "--polarizer",
        "on",
    ]);
    let kappa_pol =
        value_of(&run_ok(&["cond", "--transport", tp.to_str().unwrap()]), "condition_number");
    assert!(kappa_pol < kappa, "{kappa_pol} !< {kappa}");
}

#[test]
fn simulate_reconstruct_metrics_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path();
    let cfg = cfg.to_str().unwrap();
    let scene = dir.path().join("scene.pgm");
    let obs = dir.path().join("obs.pnlt");
    let t = dir.path().join("t.pnlt");
    let recon = dir.path().join("recon.pgm");

    // 3x3 scene image matching the default config's scene grid.
    let mut pgm = b"P5\n3 3\n65535\n".to_vec();
    for v in [0.1f64, 0.9, 0.1, 0.9, 0.5, 0.9, 0.1, 0.9, 0.1] {
        let q = (v * 65535.0).round() as u16;
        pgm.extend_from_slice(&q.to_be_bytes());
    }
    std::fs::write(&scene, pgm).unwrap();

    run_ok(&[
        "simulate",
        "--config",
        cfg,
        "--out",
        obs.to_str().unwrap(),
        "--polarizer",
        "on",
        "--scene",
        scene.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    run_ok(&[
        "transport",
        "--config",
        cfg,
        "--out",
        t.to_str().unwrap(),
        "--polarizer",
        "on",
    ]);
    run_ok(&[
        "reconstruct",
        "--transport",
        t.to_str().unwrap(),
        "--obs",
        obs.to_str().unwrap(),
        "--out",
        recon.to_str().unwrap(),
        "--tv",
        "0",
    ]);

    // Noise-free observations on a tiny scene reconstruct essentially
    // exactly; PSNR against the input should be very high.
    let stdout = run_ok(&[
        "metrics",
        "--ref",
        scene.to_str().unwrap(),
        "--test",
        recon.to_str().unwrap(),
    ]);
    let p = value_of(&stdout, "psnr");
    assert!(p > 40.0, "reconstruction PSNR {p} unexpectedly low");
    let z = value_of(&stdout, "zncc");
    assert!(z > 0.99, "reconstruction ZNCC {z} unexpectedly low");
    // 3x3 images are too small for the 11x11 SSIM window.
    assert!(stdout.contains("ssim undefined"));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path();
    let cfg = cfg.to_str().unwrap();
    let read = |p: &Path| std::fs::read(p).unwrap();
    let sim = |out: &Path, seed: &str| {
        run_ok(&[
            "simulate", "--config", cfg, "--out", out.to_str().unwrap(), "--polarizer", "off",
            "--seed", seed,
        ]);
    };
    let a = dir.path().join("a.pnlt");
    let b = dir.path().join("b.pnlt");
    sim(&a, "11");
    sim(&b, "11");
    assert_eq!(read(&a), read(&b), "same seed must give identical bytes");
}

#[test]
fn sweep_writes_long_format_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let cfg = config_path();
    run_ok(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--param",
        "roughness",
        "--from",
        "0.2",
        "--to",
        "0.4",
        "--steps",
        "2",
        "--seed",
        "9",
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("parameter,value,series,condition_number,ratio,seed,version")
    );
    // 2 sweep points x 4 series.
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[0], "roughness");
        assert_eq!(fields[5], "9");
        let kappa: f64 = fields[3].parse().unwrap();
        assert!(kappa > 1.0);
    }
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown sweep parameter.
    let cfg = config_path();
    let out = polnlos(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
        "--param",
        "albedo",
        "--from",
        "0",
        "--to",
        "1",
        "--steps",
        "2",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("albedo"));

    // Missing transport file.
    let out = polnlos(&["cond", "--transport", "/nonexistent/t.pnlt"]);
    assert!(!out.status.success());

    // Truncated matrix file.
    let bad = dir.path().join("bad.pnlt");
    std::fs::write(&bad, b"PNLT\x01\x00\x00\x00").unwrap();
    let out = polnlos(&["cond", "--transport", bad.to_str().unwrap()]);
    assert!(!out.status.success());

    // Usage errors exit with clap's status 2.
    let out = polnlos(&["cond"]);
    assert_eq!(out.status.code(), Some(2));
}

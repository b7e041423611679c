use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lpef_denoise::{read_wav, snr_db, SnrReport};
use tempfile::TempDir;

const LSB: f64 = 1.0 / 32768.0;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lpef-denoise"));
    cmd.env_remove("LPEF_DENOISE_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn samples(path: impl AsRef<Path>) -> Vec<f64> {
    read_wav::<f64>(path).unwrap().into_samples()
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["synth", "--out-dir", arg(dir)];
    args.extend_from_slice(extra);
    ok(&args);
    dir.join("mixed.wav")
}

#[test]
fn synth_writes_three_files_of_the_requested_length() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--f0", "100", "--snr", "0", "--duration", "10", "--seed", "1"]);
    for name in ["clean.wav", "noise.wav", "mixed.wav"] {
        let sig = read_wav::<f64>(dir.path().join(name)).unwrap();
        assert_eq!(sig.len(), 80_000, "{name}");
        assert_eq!(sig.sample_rate(), 8000);
    }
}

#[test]
fn synth_is_byte_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    synth(a.path(), &["--duration", "2", "--seed", "4"]);
    synth(b.path(), &["--duration", "2", "--seed", "4"]);
    for name in ["clean.wav", "noise.wav", "mixed.wav"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn seed_falls_back_to_the_environment() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    synth(a.path(), &["--duration", "1", "--seed", "7"]);
    let out = bin()
        .args(["synth", "--duration", "1", "--out-dir", arg(b.path())])
        .env("LPEF_DENOISE_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(a.path().join("noise.wav")).unwrap(),
        std::fs::read(b.path().join("noise.wav")).unwrap()
    );
}

#[test]
fn synth_snr_holds_on_the_written_files() {
    for (snr, text) in [(10.0, "10"), (-5.0, "-5")] {
        let dir = TempDir::new().unwrap();
        synth(dir.path(), &["--snr", text, "--duration", "4"]);
        let clean = samples(dir.path().join("clean.wav"));
        let noise = samples(dir.path().join("noise.wav"));
        let mixed = samples(dir.path().join("mixed.wav"));
        assert!((snr_db(&clean, &noise).unwrap() - snr).abs() < 1e-6);
        for ((s, d), x) in clean.iter().zip(&noise).zip(&mixed) {
            assert!((s + d - x).abs() <= LSB);
        }
    }
}

#[test]
fn denoise_outputs_sum_back_to_the_input() {
    let dir = TempDir::new().unwrap();
    let mixed = synth(dir.path(), &["--duration", "3"]);
    let out = dir.path().join("out");
    ok(&["denoise", "--in", arg(&mixed), "--out-dir", arg(&out)]);
    let x = samples(&mixed);
    let s = samples(out.join("enhanced.wav"));
    let d = samples(out.join("noise_estimate.wav"));
    for ((s, d), x) in s.iter().zip(&d).zip(&x) {
        assert!((s + d - x).abs() <= LSB * 1.000001, "{s} + {d} vs {x}");
    }
}

#[test]
fn zero_adf_step_passes_the_file_through() {
    let dir = TempDir::new().unwrap();
    let mixed = synth(dir.path(), &["--duration", "2"]);
    let out = dir.path().join("out");
    ok(&["denoise", "--in", arg(&mixed), "--mu-adf", "0", "--out-dir", arg(&out)]);
    for (a, b) in samples(&mixed).iter().zip(samples(out.join("enhanced.wav"))) {
        assert!((a - b).abs() <= LSB);
    }
}

#[test]
fn denoise_report_shows_improvement_and_echoes_the_config() {
    let dir = TempDir::new().unwrap();
    let mixed = synth(dir.path(), &[]);
    let out = dir.path().join("out");
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{ "mu_adf": 0.003, "adf_order": 96 }"#).unwrap();
    ok(&[
        "denoise",
        "--in",
        arg(&mixed),
        "--config",
        arg(&config),
        "--mu-adf",
        "0.002",
        "--out-dir",
        arg(&out),
    ]);
    let report = SnrReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.improvement_db > 0.0, "{report:?}");
    assert_eq!(report.config_echo.mu_adf, 0.002);
    assert_eq!(report.config_echo.adf_order, 96);

    ok(&["denoise", "--in", arg(&mixed), "--format", "csv", "--out-dir", arg(&out)]);
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("input_snr_db,"));
}

#[test]
fn denoise_without_references_writes_only_audio() {
    let dir = TempDir::new().unwrap();
    let mixed = synth(dir.path(), &["--duration", "1"]);
    let lone = dir.path().join("alone");
    std::fs::create_dir(&lone).unwrap();
    std::fs::copy(&mixed, lone.join("in.wav")).unwrap();
    let out = dir.path().join("out");
    ok(&["denoise", "--in", arg(&lone.join("in.wav")), "--out-dir", arg(&out)]);
    assert!(out.join("enhanced.wav").is_file());
    assert!(!out.join("report.json").exists());
}

fn identify_json(extra: &[&str]) -> serde_json::Value {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["identify", "--out-dir", arg(dir.path())];
    args.extend_from_slice(extra);
    ok(&args);
    serde_json::from_str(&std::fs::read_to_string(dir.path().join("identify.json")).unwrap()).unwrap()
}

#[test]
fn identify_fir_noise_tracks_the_oracle() {
    let r = identify_json(&["--shaper", "fir:1,0.9,0.5", "--samples", "100000"]);
    let adaptive = r["adaptive_residual"].as_f64().unwrap();
    let oracle = r["oracle_residual"].as_f64().unwrap();
    assert!(adaptive < 2.0 * oracle, "{adaptive} vs {oracle}");
    assert_eq!(r["adf_taps"].as_array().unwrap().len(), 128);
    assert!(r["tap_error_rel"].as_f64().unwrap().is_finite());
}

#[test]
fn identify_white_noise_leaves_small_taps() {
    let r = identify_json(&["--shaper", "fir:1"]);
    assert!(r["adf_tap_norm"].as_f64().unwrap() < 0.1, "{r}");
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "sweep",
        "--snrs",
        "0,10,20",
        "--configs",
        "0.1:0.02:0.002,0.1:0.02:0.004",
        "--seeds",
        "1,2",
        "--duration",
        "3",
        "--out-dir",
        arg(dir.path()),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 13);
    assert!(lines[0].starts_with("snr_target_db,"));
}

#[test]
fn sweep_improvement_falls_with_input_snr() {
    // measured: about +1.4 dB at 0 dB input, about -15 dB at 20 dB
    let dir = TempDir::new().unwrap();
    ok(&["sweep", "--snrs", "0,20", "--seeds", "1,2,3", "--out-dir", arg(dir.path())]);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mean = |target: &str| {
        let values: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').collect::<Vec<_>>())
            .filter(|f| f[0] == target)
            .map(|f| f[7].parse().unwrap())
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };
    assert!(mean("0") >= mean("20"), "{csv}");
}

#[test]
fn sweep_rows_do_not_depend_on_grid_order() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["sweep", "--snrs", "0,5", "--seeds", "3", "--duration", "1", "--out-dir", arg(&a)]);
    ok(&["sweep", "--snrs", "5,0", "--seeds", "3", "--duration", "1", "--out-dir", arg(&b)]);
    let rows = |p: &Path| {
        let text = std::fs::read_to_string(p.join("sweep.csv")).unwrap();
        let mut rows: Vec<String> = text.lines().skip(1).map(String::from).collect();
        rows.sort();
        rows
    };
    assert_eq!(rows(&a), rows(&b));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["synth", "--no-such-flag"]), 1);
    assert_eq!(code(&["identify", "--samples", "0"]), 1);
    assert_eq!(code(&["sweep", "--configs", "0.1:0.02"]), 1);
    assert_eq!(code(&["synth", "--duration", "1", "--mu-adf", "3"]), 1);
    let missing = dir.path().join("missing.wav");
    assert_eq!(code(&["denoise", "--in", arg(&missing)]), 2);
    let mixed = synth(dir.path(), &["--duration", "1"]);
    assert_eq!(code(&["denoise", "--in", arg(&mixed), "--mu-adf", "2.5"]), 1);
    let bad_config = dir.path().join("bad.json");
    std::fs::write(&bad_config, r#"{ "mu_adf": 0.1, "typo": 1 }"#).unwrap();
    assert_eq!(code(&["denoise", "--in", arg(&mixed), "--config", arg(&bad_config)]), 1);
    assert_eq!(code(&["--help"]), 0);
}

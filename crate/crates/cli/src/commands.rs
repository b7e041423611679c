use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lpef_denoise::eval::{format_sig9, round_sig9, DEFAULT_SEGMENT_FRAME, DEFAULT_SKIP_FRACTION};
use lpef_denoise::oracle::fir_least_squares;
use lpef_denoise::signals::wav::quantize;
use lpef_denoise::{
    gen_white_noise, process_signal, read_wav, segmental_snr, shape_noise, snr_db, snr_improvement,
    whiteness, write_report, write_wav, NoiseShaper, PipelineConfig, ReportFormat, Scenario, Signal64,
    SnrReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{DenoiseArgs, IdentifyArgs, SweepArgs, SynthArgs};
use crate::UsageError;

/// Peak of the loudest synthesized file, leaving room below full scale.
const SYNTH_PEAK: f64 = 0.9;
/// Lags checked by the residual whiteness figure in reports.
const REPORT_WHITENESS_LAGS: usize = 16;
const LSB: f64 = 1.0 / 32768.0;

fn on_pcm_grid(samples: &[f64], gain: f64) -> Vec<f64> {
    samples.iter().map(|&x| quantize(x * gain).0 as f64 * LSB).collect()
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn save_wav(path: &Path, signal: &Signal64) -> Result<()> {
    let stats = write_wav(path, signal).with_context(|| format!("writing {}", path.display()))?;
    if stats.clipped > 0 {
        eprintln!("warning: {} samples clipped in {}", stats.clipped, path.display());
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let scenario = Scenario {
        f0_hz: args.scenario.f0,
        duration_s: args.scenario.duration,
        sample_rate: args.sample_rate,
        snr_db: args.scenario.snr,
        shaper: args.scenario.shaper.clone(),
        seed: args.seed.seed,
    };
    let signals = scenario.synthesize::<f64>()?.with_headroom(SYNTH_PEAK);
    let rate = scenario.sample_rate;

    // Put clean and noise on the PCM grid first, then trim the noise gain so
    // the written pair still meets the requested SNR; mixed is their exact sum.
    let clean = on_pcm_grid(signals.clean.samples(), 1.0);
    let mut gain = 1.0;
    let mut noise = on_pcm_grid(signals.noise.samples(), gain);
    for _ in 0..8 {
        let achieved = snr_db(&clean, &noise)?;
        let miss = achieved - scenario.snr_db;
        if miss.abs() < 1e-9 {
            break;
        }
        gain *= 10f64.powf(miss / 20.0);
        noise = on_pcm_grid(signals.noise.samples(), gain);
    }
    let mixed: Vec<f64> = clean.iter().zip(&noise).map(|(s, d)| s + d).collect();

    create_out_dir(&args.out_dir)?;
    let files = [("clean.wav", clean), ("noise.wav", noise), ("mixed.wav", mixed)];
    for (name, samples) in files {
        save_wav(&args.out_dir.join(name), &Signal64::new(samples, rate)?)?;
    }

    let clean: Signal64 = read_wav(args.out_dir.join("clean.wav"))?;
    let noise: Signal64 = read_wav(args.out_dir.join("noise.wav"))?;
    println!(
        "wrote {} samples at {} Hz to {}; achieved SNR {:.9} dB",
        clean.len(),
        rate,
        args.out_dir.display(),
        snr_db(&clean, &noise)?
    );
    Ok(())
}

fn sibling(input: &Path, name: &str) -> PathBuf {
    input.parent().unwrap_or(Path::new(".")).join(name)
}

/// Scores an enhanced signal against known ground truth.
fn score(
    clean: &[f64],
    noise: &[f64],
    enhanced: &[f64],
    residual: &[f64],
    config: &PipelineConfig,
    seed: u64,
) -> Result<SnrReport> {
    let snr = snr_improvement(clean, noise, enhanced, DEFAULT_SKIP_FRACTION)?;
    let start = (clean.len() as f64 * DEFAULT_SKIP_FRACTION).floor() as usize;
    let segmental = segmental_snr(&clean[start..], &enhanced[start..], DEFAULT_SEGMENT_FRAME)?;
    let rho = whiteness(&residual[start..], REPORT_WHITENESS_LAGS)?;
    Ok(SnrReport::new(snr, segmental, rho, config, seed))
}

pub fn denoise(args: &DenoiseArgs) -> Result<()> {
    let mut config = args.pipeline.resolve()?;
    let input: Signal64 = read_wav(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    if args.pipeline.sample_rate.is_none() {
        config.sample_rate = input.sample_rate();
        config.validate()?;
    }
    let out = process_signal(&config, &input)?;

    create_out_dir(&args.output.out_dir)?;
    save_wav(&args.output.out_dir.join("enhanced.wav"), &out.enhanced)?;
    save_wav(&args.output.out_dir.join("noise_estimate.wav"), &out.noise_estimate)?;

    let clean_path = args.clean.clone().unwrap_or_else(|| sibling(&args.input, "clean.wav"));
    let noise_path = args.noise.clone().unwrap_or_else(|| sibling(&args.input, "noise.wav"));
    if !(clean_path.is_file() && noise_path.is_file()) {
        println!("no clean/noise reference beside the input; wrote enhanced.wav and noise_estimate.wav only");
        return Ok(());
    }
    let clean: Signal64 = read_wav(&clean_path)?;
    let noise: Signal64 = read_wav(&noise_path)?;
    let report = score(
        clean.samples(),
        noise.samples(),
        out.enhanced.samples(),
        out.residual.samples(),
        &config,
        args.seed.seed,
    )?;
    let format = args.output.format;
    let path = args.output.out_dir.join(format!("report.{}", format.extension()));
    write_report(&report, format, &path).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "input SNR {} dB, output SNR {} dB, improvement {} dB; report at {}",
        format_sig9(report.input_snr_db),
        format_sig9(report.output_snr_db),
        format_sig9(report.improvement_db),
        path.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct IdentifyReport {
    shaper: String,
    samples: usize,
    tail: usize,
    seed: u64,
    adaptive_residual: f64,
    oracle_residual: f64,
    residual_ratio: f64,
    tap_error_rel: f64,
    adf_tap_norm: f64,
    oracle_tap_norm: f64,
    adf_taps: Vec<f64>,
    oracle_taps: Vec<f64>,
    config_echo: PipelineConfig,
}

impl IdentifyReport {
    const CSV_HEADER: &'static str = "shaper,samples,tail,seed,adaptive_residual,oracle_residual,residual_ratio,tap_error_rel,adf_tap_norm,oracle_tap_norm";

    fn quantized(mut self) -> Self {
        for v in [
            &mut self.adaptive_residual,
            &mut self.oracle_residual,
            &mut self.residual_ratio,
            &mut self.tap_error_rel,
            &mut self.adf_tap_norm,
            &mut self.oracle_tap_norm,
        ] {
            *v = round_sig9(*v);
        }
        self.adf_taps.iter_mut().for_each(|v| *v = round_sig9(*v));
        self.oracle_taps.iter_mut().for_each(|v| *v = round_sig9(*v));
        self
    }

    fn render(&self, format: ReportFormat) -> Result<String> {
        Ok(match format {
            ReportFormat::Json => serde_json::to_string_pretty(self)? + "\n",
            ReportFormat::Csv => format!(
                "{}\n\"{}\",{},{},{},{},{},{},{},{},{}\n",
                Self::CSV_HEADER,
                self.shaper,
                self.samples,
                self.tail,
                self.seed,
                self.adaptive_residual,
                self.oracle_residual,
                self.residual_ratio,
                self.tap_error_rel,
                self.adf_tap_norm,
                self.oracle_tap_norm
            ),
        })
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn identify(args: &IdentifyArgs) -> Result<()> {
    let config = args.pipeline.resolve()?;
    if args.samples == 0 {
        return Err(UsageError("--samples must be positive".into()).into());
    }
    if args.tail == 0 || args.tail > args.samples {
        return Err(UsageError(format!("--tail must be in 1..={}", args.samples)).into());
    }
    let white = gen_white_noise::<f64>(args.samples, args.seed.seed, 1.0, config.sample_rate);
    let x = shape_noise(&white, &args.shaper)?;
    let out = process_signal(&config, &x)?;

    let start = args.samples - args.tail;
    let tail_energy: f64 = x.samples()[start..].iter().map(|v| v * v).sum();
    let miss: f64 = out.enhanced.samples()[start..].iter().map(|v| v * v).sum();
    let adaptive_residual = miss / tail_energy;
    let fit = fir_least_squares(out.residual.samples(), x.samples(), config.adf_order, start)?;
    let oracle_residual = fit.relative_residual();

    let adf_taps = out.trace.points.last().map(|p| p.adf_taps.clone()).unwrap_or_default();
    let diff: Vec<f64> = adf_taps.iter().zip(&fit.taps).map(|(a, b)| a - b).collect();
    let oracle_tap_norm = norm(&fit.taps);
    let report = IdentifyReport {
        shaper: args.shaper.to_string(),
        samples: args.samples,
        tail: args.tail,
        seed: args.seed.seed,
        adaptive_residual,
        oracle_residual,
        residual_ratio: adaptive_residual / oracle_residual,
        tap_error_rel: norm(&diff) / oracle_tap_norm,
        adf_tap_norm: norm(&adf_taps),
        oracle_tap_norm,
        adf_taps,
        oracle_taps: fit.taps,
        config_echo: config,
    }
    .quantized();

    create_out_dir(&args.output.out_dir)?;
    let format = args.output.format;
    let path = args.output.out_dir.join(format!("identify.{}", format.extension()));
    fs::write(&path, report.render(format)?).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "{}: residual {} vs oracle {} (ratio {}), tap error {}, ADF tap norm {}",
        report.shaper,
        report.adaptive_residual,
        report.oracle_residual,
        report.residual_ratio,
        report.tap_error_rel,
        report.adf_tap_norm
    );
    Ok(())
}

const SWEEP_HEADER: &str = "snr_target_db,mu_large,mu_small,mu_adf,seed,input_snr_db,output_snr_db,improvement_db,segmental_snr_db,whiteness_max_rho";

fn parse_triple(text: &str) -> Result<(f64, f64, f64)> {
    let bad = || UsageError(format!("config `{text}` is not mu_large:mu_small:mu_adf"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(bad().into()),
    }
}

struct Cell {
    snr_db: f64,
    config: PipelineConfig,
    seed: u64,
}

fn run_cell(cell: &Cell, f0: f64, duration: f64, shaper: &NoiseShaper) -> Result<String> {
    let scenario = Scenario {
        f0_hz: f0,
        duration_s: duration,
        sample_rate: cell.config.sample_rate,
        snr_db: cell.snr_db,
        shaper: shaper.clone(),
        seed: cell.seed,
    };
    let s = scenario.synthesize::<f64>()?;
    let out = process_signal(&cell.config, &s.mixed)?;
    let r = score(
        s.clean.samples(),
        s.noise.samples(),
        out.enhanced.samples(),
        out.residual.samples(),
        &cell.config,
        cell.seed,
    )?;
    let fields = [
        format_sig9(cell.snr_db),
        format_sig9(cell.config.mu_large),
        format_sig9(cell.config.mu_small_lpef),
        format_sig9(cell.config.mu_adf),
        cell.seed.to_string(),
        format_sig9(r.input_snr_db),
        format_sig9(r.output_snr_db),
        format_sig9(r.improvement_db),
        format_sig9(r.segmental_snr_db),
        format_sig9(r.whiteness_max_rho),
    ];
    Ok(fields.join(","))
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let base = args.pipeline.resolve()?;
    let seeds = if args.seeds.is_empty() { vec![args.seed.seed] } else { args.seeds.clone() };
    let mut configs = Vec::new();
    for text in &args.configs {
        let (mu_large, mu_small_lpef, mu_adf) = parse_triple(text)?;
        let config = PipelineConfig {
            mu_large,
            mu_small_lpef,
            mu_adf,
            ..base.clone()
        };
        config.validate()?;
        configs.push(config);
    }
    let mut cells = Vec::new();
    for &snr_db in &args.snrs {
        for config in &configs {
            for &seed in &seeds {
                cells.push(Cell {
                    snr_db,
                    config: config.clone(),
                    seed,
                });
            }
        }
    }
    if cells.is_empty() {
        return Err(UsageError("sweep grid is empty".into()).into());
    }

    let rows = cells
        .par_iter()
        .map(|cell| run_cell(cell, args.f0, args.duration, &args.shaper))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    create_out_dir(&args.out_dir)?;
    let path = args.out_dir.join("sweep.csv");
    fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("{} cells written to {}", rows.len(), path.display());
    Ok(())
}

//! SNR, segmental SNR, residual whiteness and report serialization.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pipeline::PipelineConfig;
use crate::scalar::{energy, Real};

/// SNR values are clamped to `[-SNR_CAP_DB, SNR_CAP_DB]` in reports, so a
/// perfect reconstruction reads as 99 dB rather than infinity.
pub const SNR_CAP_DB: f64 = 99.0;

pub const DEFAULT_SKIP_FRACTION: f64 = 0.2;
pub const DEFAULT_SEGMENT_FRAME: usize = 256;
pub const SEGMENT_FLOOR_DB: f64 = -10.0;
pub const SEGMENT_CEIL_DB: f64 = 35.0;
/// Clean frames below this energy are skipped by [`segmental_snr`].
pub const SILENT_FRAME_ENERGY: f64 = 1e-12;

/// Column order of the CSV report.
pub const CSV_HEADER: &str =
    "input_snr_db,output_snr_db,improvement_db,segmental_snr_db,whiteness_max_rho,seed";

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

/// `10 log10(|signal|^2 / |noise|^2)`.
pub fn snr_db<T: Real>(signal: impl AsRef<[T]>, noise: impl AsRef<[T]>) -> Result<f64> {
    let (signal, noise) = (signal.as_ref(), noise.as_ref());
    check_lengths(signal.len(), noise.len())?;
    let noise_energy = energy(noise).as_f64();
    if noise_energy <= 0.0 {
        return Err(Error::ZeroEnergy("noise reference"));
    }
    Ok(10.0 * (energy(signal).as_f64() / noise_energy).log10())
}

/// Input/output SNR measured against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrMeasurement {
    pub input_snr_db: f64,
    pub output_snr_db: f64,
    pub improvement_db: f64,
}

fn capped_snr(signal_energy: f64, noise_energy: f64) -> f64 {
    if noise_energy <= 0.0 {
        return SNR_CAP_DB;
    }
    if signal_energy <= 0.0 {
        return -SNR_CAP_DB;
    }
    (10.0 * (signal_energy / noise_energy).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB)
}

fn scored_start(len: usize, skip_fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&skip_fraction) {
        return Err(invalid("skip_fraction", format!("{skip_fraction} outside [0, 1)")));
    }
    Ok((len as f64 * skip_fraction).floor() as usize)
}

/// Input SNR from `(clean, noise)`, output SNR from `(clean, enhanced - clean)`,
/// both over the samples after the first `skip_fraction` of the run.
pub fn snr_improvement<T: Real>(
    clean: &[T],
    noise: &[T],
    enhanced: &[T],
    skip_fraction: f64,
) -> Result<SnrMeasurement> {
    check_lengths(clean.len(), noise.len())?;
    check_lengths(clean.len(), enhanced.len())?;
    let start = scored_start(clean.len(), skip_fraction)?;
    let clean = &clean[start..];
    let clean_energy = energy(clean).as_f64();
    let input_noise = energy(&noise[start..]).as_f64();
    let output_noise: f64 = clean
        .iter()
        .zip(&enhanced[start..])
        .map(|(&s, &y)| (y - s).as_f64().powi(2))
        .sum();
    let input_snr_db = capped_snr(clean_energy, input_noise);
    let output_snr_db = capped_snr(clean_energy, output_noise);
    Ok(SnrMeasurement {
        input_snr_db,
        output_snr_db,
        improvement_db: output_snr_db - input_snr_db,
    })
}

/// Largest `|rho(k)|`, `k = 1..=max_lag`, of the mean-removed residual.
/// A constant (or silent) input has no defined autocorrelation and returns 1.
pub fn whiteness<T: Real>(residual: &[T], max_lag: usize) -> Result<f64> {
    if max_lag == 0 {
        return Err(invalid("max_lag", "must be at least 1"));
    }
    if residual.len() <= 10 * max_lag {
        return Err(Error::WindowTooShort {
            len: residual.len(),
            required: 10 * max_lag,
        });
    }
    let n = residual.len() as f64;
    let mean = residual.iter().map(|x| x.as_f64()).sum::<f64>() / n;
    let centered: Vec<f64> = residual.iter().map(|x| x.as_f64() - mean).collect();
    let peak = residual.iter().fold(0.0f64, |m, x| m.max(x.as_f64().abs()));
    let r0: f64 = centered.iter().map(|x| x * x).sum();
    if r0 <= n * (1e-12 * peak).powi(2) {
        return Ok(1.0);
    }
    let worst = (1..=max_lag)
        .map(|k| {
            let rk: f64 = centered[k..].iter().zip(&centered).map(|(a, b)| a * b).sum();
            (rk / r0).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Mean per-frame SNR of `enhanced` against `clean`, each frame clamped to
/// `[-10, 35]` dB. Silent clean frames are skipped; a trailing partial frame counts.
pub fn segmental_snr<T: Real>(clean: &[T], enhanced: &[T], frame: usize) -> Result<f64> {
    if frame == 0 {
        return Err(invalid("frame", "must be positive"));
    }
    check_lengths(clean.len(), enhanced.len())?;
    let mut total = 0.0;
    let mut frames = 0usize;
    for (c, y) in clean.chunks(frame).zip(enhanced.chunks(frame)) {
        let signal = energy(c).as_f64();
        if signal < SILENT_FRAME_ENERGY {
            continue;
        }
        let err: f64 = c.iter().zip(y).map(|(&s, &v)| (v - s).as_f64().powi(2)).sum();
        let db = if err > 0.0 {
            10.0 * (signal / err).log10()
        } else {
            SEGMENT_CEIL_DB
        };
        total += db.clamp(SEGMENT_FLOOR_DB, SEGMENT_CEIL_DB);
        frames += 1;
    }
    if frames == 0 {
        return Err(Error::NoValidFrames);
    }
    Ok(total / frames as f64)
}

/// Rounds to 9 significant digits, the precision reports are written with.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Shortest decimal text for `x` after rounding to 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    format!("{}", round_sig9(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub input_snr_db: f64,
    pub output_snr_db: f64,
    pub improvement_db: f64,
    pub segmental_snr_db: f64,
    pub whiteness_max_rho: f64,
    pub seed: u64,
    pub config_echo: PipelineConfig,
}

impl SnrReport {
    pub fn new(
        snr: SnrMeasurement,
        segmental_snr_db: f64,
        whiteness_max_rho: f64,
        config: &PipelineConfig,
        seed: u64,
    ) -> Self {
        Self {
            input_snr_db: snr.input_snr_db,
            output_snr_db: snr.output_snr_db,
            improvement_db: snr.output_snr_db - snr.input_snr_db,
            segmental_snr_db,
            whiteness_max_rho,
            seed,
            config_echo: config.clone(),
        }
    }

    /// The report as it reads back from disk: every float at 9 significant digits.
    pub fn quantized(&self) -> Self {
        Self {
            input_snr_db: round_sig9(self.input_snr_db),
            output_snr_db: round_sig9(self.output_snr_db),
            improvement_db: round_sig9(self.improvement_db),
            segmental_snr_db: round_sig9(self.segmental_snr_db),
            whiteness_max_rho: round_sig9(self.whiteness_max_rho),
            seed: self.seed,
            config_echo: self.config_echo.quantized(),
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{CSV_HEADER}\n{},{},{},{},{},{}\n",
            format_sig9(self.input_snr_db),
            format_sig9(self.output_snr_db),
            format_sig9(self.improvement_db),
            format_sig9(self.segmental_snr_db),
            format_sig9(self.whiteness_max_rho),
            self.seed
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&self.quantized())?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => Ok(self.to_csv()),
            ReportFormat::Json => self.to_json(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Csv,
    #[default]
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(invalid("format", format!("`{other}` is not csv or json"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

pub fn write_report(report: &SnrReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, report.render(format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{gen_white_noise, shape_noise, NoiseShaper};
    use proptest::prelude::*;

    #[test]
    fn snr_examples() {
        let s = [1.0f64, -1.0, 1.0, -1.0];
        let n = [0.0f64, 2.0, 0.0, 0.0];
        assert_eq!(snr_db(s, n).unwrap(), 0.0);

        let s10 = [10f64.sqrt(), 0.0];
        let n10 = [0.0, 1.0f64];
        assert!((snr_db(s10, n10).unwrap() - 10.0).abs() < 1e-12);

        assert!(matches!(snr_db([1.0f64], [0.0f64]), Err(Error::ZeroEnergy(_))));
        assert!(matches!(snr_db([1.0f64], [0.0f64, 1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn improvement_examples() {
        let clean = gen_white_noise::<f64>(1000, 1, 1.0, 8000).into_samples();
        let noise = gen_white_noise::<f64>(1000, 2, 0.5, 8000).into_samples();
        let noisy: Vec<f64> = clean.iter().zip(&noise).map(|(s, d)| s + d).collect();
        let half: Vec<f64> = clean.iter().zip(&noise).map(|(s, d)| s + 0.5 * d).collect();

        let perfect = snr_improvement(&clean, &noise, &clean, 0.2).unwrap();
        assert_eq!(perfect.output_snr_db, SNR_CAP_DB);

        let pass = snr_improvement(&clean, &noise, &noisy, 0.2).unwrap();
        assert!(pass.improvement_db.abs() < 1e-12);

        let halved = snr_improvement(&clean, &noise, &half, 0.2).unwrap();
        assert!((halved.improvement_db - 10.0 * 4f64.log10()).abs() < 1e-9);

        assert!(snr_improvement(&clean, &noise[..999], &clean, 0.2).is_err());
        assert!(snr_improvement(&clean, &noise, &clean, 1.0).is_err());
    }

    #[test]
    fn whiteness_examples() {
        let white = gen_white_noise::<f64>(100_000, 3, 1.0, 8000);
        assert!(whiteness(white.samples(), 64).unwrap() < 0.03);

        let ar = shape_noise(&white, &NoiseShaper::Ar(vec![0.9])).unwrap();
        let rho = whiteness(ar.samples(), 64).unwrap();
        assert!((rho - 0.9).abs() < 0.02, "{rho}");

        assert_eq!(whiteness(&[0.3f64; 1000], 8).unwrap(), 1.0);
        assert_eq!(whiteness(&[0.0f64; 1000], 8).unwrap(), 1.0);
        assert!(matches!(whiteness(&[1.0f64; 80], 8), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn segmental_examples() {
        let clean = gen_white_noise::<f64>(1024, 4, 1.0, 8000).into_samples();
        assert_eq!(segmental_snr(&clean, &clean, 256).unwrap(), SEGMENT_CEIL_DB);
        assert!(matches!(
            segmental_snr(&[0.0f64; 512], &[0.1f64; 512], 256),
            Err(Error::NoValidFrames)
        ));

        let frame = &clean[..256];
        let noise = gen_white_noise::<f64>(256, 5, 1.0, 8000).into_samples();
        let scale = (energy(frame) / (energy(&noise) * 10f64.powf(0.5))).sqrt();
        let noisy: Vec<f64> = frame.iter().zip(&noise).map(|(s, d)| s + scale * d).collect();
        let seg = segmental_snr(frame, &noisy, 256).unwrap();
        assert!((seg - 5.0).abs() < 1e-9, "{seg}");
    }

    fn sample_report() -> SnrReport {
        let snr = SnrMeasurement {
            input_snr_db: 0.000123456789123,
            output_snr_db: 3.15159265358979,
            improvement_db: 0.0,
        };
        SnrReport::new(snr, 2.728281828459, 0.0123456789, &PipelineConfig::default(), 7)
    }

    #[test]
    fn json_round_trip() {
        let report = sample_report();
        let text = report.to_json().unwrap();
        let back = SnrReport::from_json(&text).unwrap();
        assert_eq!(back, report.quantized());
        assert_eq!(back.to_json().unwrap(), text);
        let diff = back.improvement_db - (back.output_snr_db - back.input_snr_db);
        assert!(diff.abs() <= 1e-8 * back.output_snr_db.abs().max(1.0));
    }

    #[test]
    fn csv_shape() {
        let text = sample_report().to_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[1], "3.15159265");
        assert_eq!(fields[5], "7");
    }

    #[test]
    fn write_report_to_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_report(&sample_report(), ReportFormat::Csv, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), sample_report().to_csv());
        let missing = dir.path().join("no/such/dir/r.json");
        assert!(matches!(
            write_report(&sample_report(), ReportFormat::Json, missing),
            Err(Error::Io(_))
        ));
    }

    proptest! {
        #[test]
        fn snr_scale_invariant(seed in 0u64..500, alpha in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0]) {
            let s = gen_white_noise::<f64>(256, seed, 1.0, 8000).into_samples();
            let n = gen_white_noise::<f64>(256, seed + 1, 0.3, 8000).into_samples();
            let sa: Vec<f64> = s.iter().map(|x| x * alpha).collect();
            let na: Vec<f64> = n.iter().map(|x| x * alpha).collect();
            prop_assert!((snr_db(&s, &n).unwrap() - snr_db(&sa, &na).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn whiteness_scale_invariant(seed in 0u64..500, alpha in 0.001f64..1000.0) {
            let w = gen_white_noise::<f64>(2000, seed, 1.0, 8000);
            let ar = shape_noise(&w, &NoiseShaper::Ar(vec![0.5])).unwrap().into_samples();
            let scaled: Vec<f64> = ar.iter().map(|x| x * alpha).collect();
            prop_assert!((whiteness(&ar, 16).unwrap() - whiteness(&scaled, 16).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn sig9_rounding_is_idempotent(x in -1e6f64..1e6) {
            let once = round_sig9(x);
            prop_assert_eq!(round_sig9(once), once);
            prop_assert_eq!(format_sig9(once).parse::<f64>().unwrap(), once);
        }
    }
}

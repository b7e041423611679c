use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lpef_denoise::{NoiseShaper, PipelineConfig, ReportFormat};

#[derive(Debug, Parser)]
#[command(name = "lpef-denoise", version, about = "Adaptive single-channel noise reduction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate clean.wav, noise.wav and mixed.wav for a scenario.
    Synth(SynthArgs),
    /// Run the noise reducer on a WAV file.
    Denoise(DenoiseArgs),
    /// Noise-only system identification demo against a least-squares oracle.
    Identify(IdentifyArgs),
    /// Grid over input SNR, step sizes and seeds; one CSV row per cell.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SeedArgs {
    /// Seed for every stochastic path.
    #[arg(long, env = "LPEF_DENOISE_SEED", default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct ScenarioArgs {
    /// Fundamental of the voiced surrogate, Hz.
    #[arg(long, default_value_t = 100.0)]
    pub f0: f64,
    /// Input SNR, dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub snr: f64,
    /// Length, seconds.
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// Noise shaping system, `ar:a1,a2,..` or `fir:h0,h1,..`.
    #[arg(long, default_value = "ar:1.2,-0.72", allow_hyphen_values = true)]
    pub shaper: NoiseShaper,
}

/// Pipeline settings: JSON file first, then individual flag overrides.
#[derive(Debug, Args, Clone)]
pub struct PipelineArgs {
    /// JSON file with flat keys mirroring the pipeline configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    #[arg(long)]
    pub lpef_order: Option<usize>,
    #[arg(long)]
    pub adf_order: Option<usize>,
    #[arg(long)]
    pub mu_large: Option<f64>,
    /// Small step for the prediction error filter.
    #[arg(long)]
    pub mu_small: Option<f64>,
    #[arg(long)]
    pub mu_adf: Option<f64>,
}

impl PipelineArgs {
    pub fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| {
                    crate::UsageError(format!("config file {}: {e}", path.display()))
                })?
            }
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.sample_rate {
            config.sample_rate = v;
        }
        if let Some(v) = self.lpef_order {
            config.lpef_order = v;
        }
        if let Some(v) = self.adf_order {
            config.adf_order = v;
        }
        if let Some(v) = self.mu_large {
            config.mu_large = v;
        }
        if let Some(v) = self.mu_small {
            config.mu_small_lpef = v;
        }
        if let Some(v) = self.mu_adf {
            config.mu_adf = v;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, default_value_t = 8000)]
    pub sample_rate: u32,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Noisy input (PCM16 mono WAV).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Clean reference; defaults to clean.wav beside the input.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Noise reference; defaults to noise.wav beside the input.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Noise shaping system to identify.
    #[arg(long, default_value = "fir:1,0.9,0.5", allow_hyphen_values = true)]
    pub shaper: NoiseShaper,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Number of final samples the residuals are compared over.
    #[arg(long, default_value_t = 10_000)]
    pub tail: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated input SNRs, dB.
    #[arg(long, value_delimiter = ',', default_value = "0,10,20", allow_hyphen_values = true)]
    pub snrs: Vec<f64>,
    /// Comma-separated `mu_large:mu_small:mu_adf` triples.
    #[arg(long, value_delimiter = ',', default_value = "0.1:0.02:0.002")]
    pub configs: Vec<String>,
    /// Comma-separated seeds; defaults to `--seed`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 100.0)]
    pub f0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    #[arg(long, default_value = "ar:1.2,-0.72", allow_hyphen_values = true)]
    pub shaper: NoiseShaper,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

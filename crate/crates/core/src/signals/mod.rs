//! Deterministic test-signal synthesis and SNR-controlled mixing.
//!
//! Notation used across the crate: `s` clean speech, `d` background noise,
//! `x = s + d` the observation, `e` the prediction error, `d_hat` the
//! reconstructed noise and `s_hat = x - d_hat` the enhanced output.

mod scenario;
pub mod wav;

pub use scenario::{Scenario, ScenarioSignals};

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::scalar::{energy, Real};

pub const DEFAULT_SAMPLE_RATE: u32 = 8000;

/// AR(2) background used by the experiments: poles at radius ~0.85.
pub const DEFAULT_AR_SHAPER: [f64; 2] = [1.2, -0.72];

/// A mono sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> Signal<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(invalid("sample_rate", "must be positive"));
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(bad.as_f64()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![T::zero(); len],
            sample_rate: sample_rate.max(1),
        }
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> T {
        energy(&self.samples)
    }

    pub fn scaled(&self, gain: T) -> Self {
        Self {
            samples: self.samples.iter().map(|&x| x * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn peak(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> Signal<U> {
        Signal {
            samples: self.samples.iter().map(|&x| U::of(x.as_f64())).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

impl<T> AsRef<[T]> for Signal<T> {
    fn as_ref(&self) -> &[T] {
        &self.samples
    }
}

/// The linear system `H(z)` that colors white excitation into background noise.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseShaper {
    /// Impulse-response prefix: `d(n) = sum_k taps[k] w(n-k)`.
    Fir(Vec<f64>),
    /// All-pole form: `d(n) = sum_{k>=1} a[k] d(n-k) + w(n)`.
    Ar(Vec<f64>),
}

impl NoiseShaper {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseShaper::Fir(taps) => {
                if taps.is_empty() || taps.iter().any(|t| !t.is_finite()) {
                    return Err(invalid("fir_taps", "need at least one finite tap"));
                }
                Ok(())
            }
            NoiseShaper::Ar(coeffs) => {
                if coeffs.iter().any(|t| !t.is_finite()) {
                    return Err(invalid("ar_coeffs", "coefficients must be finite"));
                }
                let modulus = max_root_modulus(coeffs);
                if modulus >= 1.0 {
                    return Err(Error::UnstableShaper { modulus });
                }
                Ok(())
            }
        }
    }
}

impl FromStr for NoiseShaper {
    type Err = Error;

    /// Parses `fir:1,0.9,0.5` or `ar:1.2,-0.72`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, list) = s
            .split_once(':')
            .ok_or_else(|| invalid("shaper", format!("expected `fir:...` or `ar:...`, got `{s}`")))?;
        let coeffs = list
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid("shaper", format!("bad coefficient list `{list}`: {e}")))?;
        let shaper = match kind.trim() {
            "fir" => NoiseShaper::Fir(coeffs),
            "ar" => NoiseShaper::Ar(coeffs),
            other => return Err(invalid("shaper", format!("unknown shaper kind `{other}`"))),
        };
        shaper.validate()?;
        Ok(shaper)
    }
}

impl std::fmt::Display for NoiseShaper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (kind, c) = match self {
            NoiseShaper::Fir(c) => ("fir", c),
            NoiseShaper::Ar(c) => ("ar", c),
        };
        let list: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        write!(f, "{kind}:{}", list.join(","))
    }
}

/// Largest root modulus of `z^p - a1 z^(p-1) - ... - ap`.
fn max_root_modulus(coeffs: &[f64]) -> f64 {
    let p = coeffs.len();
    if p == 0 {
        return 0.0;
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (k, &a) in coeffs.iter().enumerate() {
        companion[(0, k)] = a;
    }
    for k in 1..p {
        companion[(k, k - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `n` Gaussian samples with the given variance, drawn from ChaCha8 seeded by `seed`.
pub fn gen_white_noise<T: Real>(n: usize, seed: u64, variance: f64, sample_rate: u32) -> Signal<T> {
    let sigma = variance.max(0.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::of(sigma * z)
        })
        .collect();
    Signal {
        samples,
        sample_rate: sample_rate.max(1),
    }
}

/// Causal FIR filtering truncated to the input length.
pub fn fir_filter<T: Real>(input: &[T], taps: &[T]) -> Vec<T> {
    (0..input.len())
        .map(|n| {
            taps.iter()
                .take(n + 1)
                .enumerate()
                .map(|(k, &h)| h * input[n - k])
                .sum()
        })
        .collect()
}

/// Passes white excitation through `shaper` from zero initial conditions.
pub fn shape_noise<T: Real>(white: &Signal<T>, shaper: &NoiseShaper) -> Result<Signal<T>> {
    shaper.validate()?;
    let samples = match shaper {
        NoiseShaper::Fir(taps) => {
            let taps: Vec<T> = taps.iter().map(|&t| T::of(t)).collect();
            fir_filter(white.samples(), &taps)
        }
        NoiseShaper::Ar(coeffs) => {
            let coeffs: Vec<T> = coeffs.iter().map(|&a| T::of(a)).collect();
            let mut out: Vec<T> = Vec::with_capacity(white.len());
            for (n, &w) in white.samples().iter().enumerate() {
                let feedback: T = coeffs
                    .iter()
                    .take(n)
                    .enumerate()
                    .map(|(k, &a)| a * out[n - 1 - k])
                    .sum();
                out.push(feedback + w);
            }
            out
        }
    };
    Signal::new(samples, white.sample_rate())
}

/// Impulse response of a two-resonance all-pole vocal-tract stand-in
/// (500 Hz and 1500 Hz, 150 Hz bandwidth), truncated to 64 taps.
pub fn default_formant_taps(sample_rate: u32) -> Vec<f64> {
    const LEN: usize = 64;
    let fs = sample_rate as f64;
    let radius = (-std::f64::consts::PI * 150.0 / fs).exp();
    let section = |freq: f64| {
        let theta = 2.0 * std::f64::consts::PI * freq / fs;
        [2.0 * radius * theta.cos(), -radius * radius]
    };
    let mut h = vec![0.0; LEN];
    h[0] = 1.0;
    for [a1, a2] in [section(500.0), section(1500.0)] {
        let mut y = vec![0.0; LEN];
        for n in 0..LEN {
            let y1 = if n >= 1 { y[n - 1] } else { 0.0 };
            let y2 = if n >= 2 { y[n - 2] } else { 0.0 };
            y[n] = h[n] + a1 * y1 + a2 * y2;
        }
        h = y;
    }
    h
}

/// Voiced-speech surrogate: unit impulses every `round(sample_rate / f0_hz)`
/// samples, filtered by `formant_taps` and normalized to unit peak. The seed
/// picks the position of the first pulse within the first period.
pub fn gen_voiced<T: Real>(
    f0_hz: f64,
    duration_s: f64,
    sample_rate: u32,
    formant_taps: &[f64],
    seed: u64,
) -> Result<Signal<T>> {
    if sample_rate == 0 {
        return Err(invalid("sample_rate", "must be positive"));
    }
    if !(f0_hz > 0.0 && f0_hz < sample_rate as f64 / 2.0) {
        return Err(invalid(
            "f0_hz",
            format!("{f0_hz} Hz outside (0, {}) Hz", sample_rate as f64 / 2.0),
        ));
    }
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(invalid("duration_s", format!("{duration_s} s must be positive")));
    }
    if formant_taps.is_empty() || formant_taps.iter().any(|t| !t.is_finite()) {
        return Err(invalid("formant_taps", "need at least one finite tap"));
    }
    let n = (duration_s * sample_rate as f64).round() as usize;
    let period = (sample_rate as f64 / f0_hz).round().max(1.0) as usize;
    let phase = (seed % period as u64) as usize;
    let pulses: Vec<T> = (0..n)
        .map(|i| {
            if i >= phase && (i - phase).is_multiple_of(period) {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    let taps: Vec<T> = formant_taps.iter().map(|&t| T::of(t)).collect();
    let filtered = Signal::new(fir_filter(&pulses, &taps), sample_rate)?;
    let peak = filtered.peak();
    if peak > T::zero() {
        Ok(filtered.scaled(T::one() / peak))
    } else {
        Ok(filtered)
    }
}

/// Scales `noise` so that `10 log10(|clean|^2 / |alpha noise|^2) == snr_db` and
/// returns `(clean + alpha noise, alpha noise)`.
pub fn mix_at_snr<T: Real>(
    clean: &Signal<T>,
    noise: &Signal<T>,
    snr_db: f64,
) -> Result<(Signal<T>, Signal<T>)> {
    if clean.len() != noise.len() {
        return Err(Error::LengthMismatch {
            left: clean.len(),
            right: noise.len(),
        });
    }
    if clean.sample_rate() != noise.sample_rate() {
        return Err(Error::SampleRateMismatch {
            left: clean.sample_rate(),
            right: noise.sample_rate(),
        });
    }
    if !snr_db.is_finite() {
        return Err(invalid("snr_db", "must be finite"));
    }
    let clean_energy = clean.energy().as_f64();
    let noise_energy = noise.energy().as_f64();
    if clean_energy <= 0.0 {
        return Err(Error::ZeroEnergy("clean signal"));
    }
    if noise_energy <= 0.0 {
        return Err(Error::ZeroEnergy("noise signal"));
    }
    let alpha = (clean_energy / (noise_energy * 10f64.powf(snr_db / 10.0))).sqrt();
    let scaled = noise.scaled(T::of(alpha));
    let mixed = clean
        .samples()
        .iter()
        .zip(scaled.samples())
        .map(|(&s, &d)| s + d)
        .collect();
    Ok((Signal::new(mixed, clean.sample_rate())?, scaled))
}

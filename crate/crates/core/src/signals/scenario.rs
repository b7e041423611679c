//! Reproducible noisy-speech scenarios with known ground truth.

use super::{default_formant_taps, gen_voiced, gen_white_noise, mix_at_snr, shape_noise, NoiseShaper, Signal};
use super::{DEFAULT_AR_SHAPER, DEFAULT_SAMPLE_RATE};
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Voiced surrogate plus colored noise mixed at a target SNR. Every output is
/// a pure function of these fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub f0_hz: f64,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub snr_db: f64,
    pub shaper: NoiseShaper,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            f0_hz: 100.0,
            duration_s: 10.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            snr_db: 0.0,
            shaper: NoiseShaper::Ar(DEFAULT_AR_SHAPER.to_vec()),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSignals<T> {
    pub clean: Signal<T>,
    /// Noise already scaled to the target SNR; `mixed = clean + noise`.
    pub noise: Signal<T>,
    pub mixed: Signal<T>,
}

impl Scenario {
    pub fn synthesize<T: Real>(&self) -> Result<ScenarioSignals<T>> {
        let clean: Signal<T> = gen_voiced(
            self.f0_hz,
            self.duration_s,
            self.sample_rate,
            &default_formant_taps(self.sample_rate),
            self.seed,
        )?;
        if clean.is_empty() {
            return Err(invalid("duration_s", "scenario has no samples"));
        }
        let white = gen_white_noise(clean.len(), self.seed, 1.0, self.sample_rate);
        let colored = shape_noise(&white, &self.shaper)?;
        let (mixed, noise) = mix_at_snr(&clean, &colored, self.snr_db)?;
        Ok(ScenarioSignals {
            clean,
            noise,
            mixed,
        })
    }
}

impl<T: Real> ScenarioSignals<T> {
    /// Applies one common gain so the loudest of the three signals peaks at
    /// `peak`. SNRs are unchanged.
    pub fn with_headroom(self, peak: f64) -> Self {
        let loudest = [&self.clean, &self.noise, &self.mixed]
            .iter()
            .map(|s| s.peak().as_f64())
            .fold(0.0, f64::max);
        if loudest <= 0.0 {
            return self;
        }
        let gain = T::of(peak / loudest);
        Self {
            clean: self.clean.scaled(gain),
            noise: self.noise.scaled(gain),
            mixed: self.mixed.scaled(gain),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::snr_db;

    #[test]
    fn default_scenario_shape() {
        let s = Scenario::default().synthesize::<f64>().unwrap();
        assert_eq!(s.clean.len(), 80_000);
        assert_eq!(s.mixed.len(), 80_000);
        assert!(snr_db(&s.clean, &s.noise).unwrap().abs() < 1e-9);
    }

    #[test]
    fn headroom_keeps_snr() {
        let scenario = Scenario {
            snr_db: 7.5,
            duration_s: 1.0,
            ..Scenario::default()
        };
        let s = scenario.synthesize::<f64>().unwrap().with_headroom(0.5);
        let loudest = s.mixed.peak().max(s.clean.peak()).max(s.noise.peak());
        assert!((loudest - 0.5).abs() < 1e-12);
        assert!((snr_db(&s.clean, &s.noise).unwrap() - 7.5).abs() < 1e-9);
    }

    #[test]
    fn seeds_change_the_realization() {
        let a = Scenario { duration_s: 0.5, ..Scenario::default() };
        let b = Scenario { seed: 2, ..a.clone() };
        assert_eq!(a.synthesize::<f64>().unwrap(), a.synthesize::<f64>().unwrap());
        assert_ne!(a.synthesize::<f64>().unwrap().mixed, b.synthesize::<f64>().unwrap().mixed);
    }
}

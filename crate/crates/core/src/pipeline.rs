//! The full noise-reduction system.
//!
//! Per sample:
//!
//! 1. the prediction error filter whitens `x(n)` into `e(n)`, adapting with the
//!    pitch-aware step profile;
//! 2. the noise-reconstruction filter predicts `d_hat(n)` from strictly past
//!    residuals `e(n-1) .. e(n-M)`;
//! 3. it adapts towards `x(n)` (system identification with the noisy
//!    observation as reference) using a small uniform step, so short unvoiced
//!    bursts average out instead of being learned;
//! 4. `e(n)` enters its delay line;
//! 5. the output is `s_hat(n) = x(n) - d_hat(n)`;
//! 6. every hop the pitch of the recent input is re-estimated and the step
//!    profile rebuilt, taking effect from the next sample.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::eval::round_sig9;
use crate::filters::{FilterState, StepSizeProfile, DEFAULT_EPS};
use crate::pitch::{estimate_pitch, make_step_profile, PitchEstimate};
use crate::scalar::Real;
use crate::signals::{Signal, DEFAULT_SAMPLE_RATE};

/// Every tunable of the pipeline. Pitch parameters are in samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub lpef_order: usize,
    pub adf_order: usize,
    pub mu_large: f64,
    pub mu_small_lpef: f64,
    pub mu_adf: f64,
    pub eps: f64,
    pub pitch_window: usize,
    pub pitch_hop: usize,
    pub lag_min: usize,
    pub lag_max: usize,
    pub voiced_threshold: f64,
    pub neighborhood: usize,
    pub sample_rate: u32,
    /// Accumulate the ADF gradient and apply the sum once per `adf_block`
    /// samples instead of updating every sample.
    pub adf_block_average: bool,
    pub adf_block: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lpef_order: 64,
            adf_order: 128,
            mu_large: 0.1,
            mu_small_lpef: 0.02,
            mu_adf: 0.002,
            eps: DEFAULT_EPS,
            pitch_window: 400,
            pitch_hop: 80,
            lag_min: 20,
            lag_max: 160,
            voiced_threshold: 0.4,
            neighborhood: 2,
            sample_rate: DEFAULT_SAMPLE_RATE,
            adf_block_average: false,
            adf_block: 64,
        }
    }
}

fn check_mu(name: &'static str, mu: f64) -> Result<()> {
    if (0.0..2.0).contains(&mu) {
        Ok(())
    } else {
        Err(invalid(name, format!("step size {mu} outside [0, 2)")))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lpef_order == 0 {
            return Err(invalid("lpef_order", "must be at least 1"));
        }
        if self.adf_order == 0 {
            return Err(invalid("adf_order", "must be at least 1"));
        }
        check_mu("mu_large", self.mu_large)?;
        check_mu("mu_small_lpef", self.mu_small_lpef)?;
        check_mu("mu_adf", self.mu_adf)?;
        if self.mu_small_lpef > self.mu_large {
            return Err(invalid(
                "mu_small_lpef",
                format!("{} exceeds mu_large {}", self.mu_small_lpef, self.mu_large),
            ));
        }
        if self.mu_adf >= self.mu_large {
            return Err(invalid(
                "mu_adf",
                format!("{} must be smaller than mu_large {}", self.mu_adf, self.mu_large),
            ));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid("eps", "must be positive"));
        }
        if self.lag_min == 0 || self.lag_min >= self.lag_max {
            return Err(invalid(
                "lag_min",
                format!("need 0 < lag_min < lag_max, got [{}, {}]", self.lag_min, self.lag_max),
            ));
        }
        if self.pitch_window <= 2 * self.lag_max {
            return Err(invalid(
                "pitch_window",
                format!("{} must exceed 2 * lag_max = {}", self.pitch_window, 2 * self.lag_max),
            ));
        }
        if self.pitch_hop == 0 {
            return Err(invalid("pitch_hop", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.voiced_threshold) {
            return Err(invalid("voiced_threshold", "must lie in [0, 1]"));
        }
        if self.sample_rate == 0 {
            return Err(invalid("sample_rate", "must be positive"));
        }
        if self.adf_block_average && self.adf_block == 0 {
            return Err(invalid("adf_block", "must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn quantized(&self) -> Self {
        Self {
            mu_large: round_sig9(self.mu_large),
            mu_small_lpef: round_sig9(self.mu_small_lpef),
            mu_adf: round_sig9(self.mu_adf),
            eps: round_sig9(self.eps),
            voiced_threshold: round_sig9(self.voiced_threshold),
            ..self.clone()
        }
    }
}

/// Signals produced by one [`PipelineState::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput<T> {
    /// Enhanced sample `x - d_hat`.
    pub s_hat: T,
    /// Reconstructed noise.
    pub d_hat: T,
    /// Prediction error of the whitening filter.
    pub e: T,
}

#[derive(Debug, Clone)]
pub struct PipelineState<T> {
    config: PipelineConfig,
    lpef: FilterState<T>,
    adf: FilterState<T>,
    adf_profile: StepSizeProfile<T>,
    pitch_buffer: VecDeque<T>,
    current_profile: StepSizeProfile<T>,
    pitch: PitchEstimate,
    block_gradient: Vec<T>,
    block_fill: usize,
    sample_counter: u64,
}

impl<T: Real> PipelineState<T> {
    pub fn new(config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let eps = T::of(config.eps);
        Ok(Self {
            config: config.clone(),
            lpef: FilterState::new(config.lpef_order)?,
            adf: FilterState::new(config.adf_order)?,
            adf_profile: StepSizeProfile::uniform(config.adf_order, T::of(config.mu_adf), eps)?,
            pitch_buffer: VecDeque::with_capacity(config.pitch_window),
            current_profile: StepSizeProfile::uniform(
                config.lpef_order,
                T::of(config.mu_small_lpef),
                eps,
            )?,
            pitch: PitchEstimate::unvoiced(config.lag_min),
            block_gradient: vec![T::zero(); config.adf_order],
            block_fill: 0,
            sample_counter: 0,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn lpef(&self) -> &FilterState<T> {
        &self.lpef
    }

    pub fn adf(&self) -> &FilterState<T> {
        &self.adf
    }

    pub fn current_profile(&self) -> &StepSizeProfile<T> {
        &self.current_profile
    }

    /// Most recent pitch estimate (unvoiced until the first full window).
    pub fn pitch(&self) -> PitchEstimate {
        self.pitch
    }

    pub fn samples_processed(&self) -> u64 {
        self.sample_counter
    }

    pub fn step(&mut self, x_now: T) -> Result<StepOutput<T>> {
        if !x_now.is_finite() {
            return Err(Error::NonFinite(x_now.as_f64()));
        }
        let e = self.lpef.lpef_step(x_now, &self.current_profile)?.error;

        let d_hat = self.adf.output();
        let adf_error = x_now - d_hat;
        if self.config.adf_block_average {
            self.adf
                .accumulate_normalized_gradient(adf_error, self.adf_profile.eps(), &mut self.block_gradient)?;
            self.block_fill += 1;
            if self.block_fill == self.config.adf_block {
                let step = T::of(self.config.mu_adf);
                self.adf.apply_tap_increment(&self.block_gradient, step)?;
                self.block_gradient.iter_mut().for_each(|g| *g = T::zero());
                self.block_fill = 0;
            }
        } else {
            self.adf.nlms_update(adf_error, &self.adf_profile)?;
        }
        self.adf.push_sample(e)?;

        self.track_pitch(x_now)?;
        Ok(StepOutput {
            s_hat: x_now - d_hat,
            d_hat,
            e,
        })
    }

    fn track_pitch(&mut self, x_now: T) -> Result<()> {
        if self.pitch_buffer.len() == self.config.pitch_window {
            self.pitch_buffer.pop_front();
        }
        self.pitch_buffer.push_back(x_now);
        self.sample_counter += 1;
        if !self.sample_counter.is_multiple_of(self.config.pitch_hop as u64)
            || self.pitch_buffer.len() < self.config.pitch_window
        {
            return Ok(());
        }
        let c = &self.config;
        self.pitch = estimate_pitch(
            self.pitch_buffer.make_contiguous(),
            c.lag_min,
            c.lag_max,
            c.voiced_threshold,
        )?;
        self.current_profile = make_step_profile(
            c.lpef_order,
            &self.pitch,
            c.neighborhood,
            c.mu_large,
            c.mu_small_lpef,
            c.eps,
        )?;
        Ok(())
    }
}

/// One convergence snapshot, taken at the end of every pitch hop.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint<T> {
    /// Number of samples processed when the snapshot was taken.
    pub sample_index: usize,
    /// Mean squared prediction error over the hop.
    pub lpef_mse: f64,
    /// Mean squared `x - d_hat` over the hop.
    pub adf_mse: f64,
    pub pitch: PitchEstimate,
    pub lpef_taps: Vec<T>,
    pub adf_taps: Vec<T>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace<T> {
    pub points: Vec<TracePoint<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput<T> {
    pub enhanced: Signal<T>,
    pub noise_estimate: Signal<T>,
    /// Prediction error `e(n)` of the whitening filter.
    pub residual: Signal<T>,
    pub trace: ConvergenceTrace<T>,
}

/// Runs a fresh pipeline over `input`; every output is aligned 1:1 with it.
pub fn process_signal<T: Real>(config: &PipelineConfig, input: &Signal<T>) -> Result<PipelineOutput<T>> {
    if input.is_empty() {
        return Err(invalid("input", "signal is empty"));
    }
    if input.sample_rate() != config.sample_rate {
        return Err(Error::SampleRateMismatch {
            left: input.sample_rate(),
            right: config.sample_rate,
        });
    }
    let mut state = PipelineState::new(config)?;
    let n = input.len();
    let mut enhanced = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let mut trace = ConvergenceTrace::default();
    let (mut lpef_sq, mut adf_sq, mut in_hop) = (0.0, 0.0, 0usize);

    for (i, &x) in input.samples().iter().enumerate() {
        let out = state.step(x)?;
        enhanced.push(out.s_hat);
        noise.push(out.d_hat);
        residual.push(out.e);

        lpef_sq += out.e.as_f64().powi(2);
        adf_sq += out.s_hat.as_f64().powi(2);
        in_hop += 1;
        if in_hop == config.pitch_hop || i + 1 == n {
            trace.points.push(TracePoint {
                sample_index: i + 1,
                lpef_mse: lpef_sq / in_hop as f64,
                adf_mse: adf_sq / in_hop as f64,
                pitch: state.pitch(),
                lpef_taps: state.lpef().taps().to_vec(),
                adf_taps: state.adf().taps().to_vec(),
            });
            (lpef_sq, adf_sq, in_hop) = (0.0, 0.0, 0);
        }
    }

    let rate = input.sample_rate();
    Ok(PipelineOutput {
        enhanced: Signal::new(enhanced, rate)?,
        noise_estimate: Signal::new(noise, rate)?,
        residual: Signal::new(residual, rate)?,
        trace,
    })
}

//! Pitch-period estimation and the dual step-size profile built from it.
//!
//! The prediction error filter adapts its taps near the pitch lag with a large
//! step (tracking the quasi-periodic voiced excitation) and every other tap
//! with a small one (high-fidelity whitening of the background).

use crate::error::{invalid, Error, Result};
use crate::filters::StepSizeProfile;
use crate::scalar::Real;

/// Autocorrelation peaks within this distance of the maximum count as ties;
/// the smallest tied lag wins.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    /// Pitch period in samples.
    pub lag: usize,
    /// Normalized autocorrelation at `lag`, clamped to `[0, 1]`.
    pub confidence: f64,
    pub voiced: bool,
}

impl PitchEstimate {
    pub fn unvoiced(lag: usize) -> Self {
        Self {
            lag,
            confidence: 0.0,
            voiced: false,
        }
    }
}

/// Normalized autocorrelation of `w` at `lag` over the overlapping region.
/// Returns 0 when either side of the overlap is silent.
pub fn normalized_autocorrelation<T: Real>(w: &[T], lag: usize) -> f64 {
    if lag >= w.len() {
        return 0.0;
    }
    let (mut cross, mut head, mut tail) = (T::zero(), T::zero(), T::zero());
    for (&now, &past) in w[lag..].iter().zip(w) {
        cross = cross + now * past;
        head = head + now * now;
        tail = tail + past * past;
    }
    let denom = (head * tail).sqrt();
    if denom > T::zero() && denom.is_finite() {
        (cross / denom).as_f64()
    } else {
        0.0
    }
}

/// Picks the lag in `[lag_min, lag_max]` maximizing the normalized
/// autocorrelation of `window`.
pub fn estimate_pitch<T: Real>(
    window: &[T],
    lag_min: usize,
    lag_max: usize,
    voiced_threshold: f64,
) -> Result<PitchEstimate> {
    if lag_min == 0 || lag_min >= lag_max {
        return Err(invalid(
            "lag range",
            format!("need 0 < lag_min < lag_max, got [{lag_min}, {lag_max}]"),
        ));
    }
    if window.len() <= 2 * lag_max {
        return Err(Error::WindowTooShort {
            len: window.len(),
            required: 2 * lag_max,
        });
    }
    if window.iter().all(|x| x.is_zero()) {
        return Ok(PitchEstimate::unvoiced(lag_min));
    }

    let rho: Vec<f64> = (lag_min..=lag_max)
        .map(|lag| normalized_autocorrelation(window, lag))
        .collect();
    let best = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let offset = rho
        .iter()
        .position(|&r| r >= best - TIE_TOLERANCE)
        .unwrap_or(0);
    let confidence = best.clamp(0.0, 1.0);
    Ok(PitchEstimate {
        lag: lag_min + offset,
        confidence,
        voiced: confidence >= voiced_threshold,
    })
}

/// Large step on taps `lag - neighborhood ..= lag + neighborhood` (1-based,
/// clamped to the filter), small step everywhere else. Unvoiced frames, or a
/// lag beyond the filter order, get the small step on every tap.
pub fn make_step_profile<T: Real>(
    order: usize,
    pitch: &PitchEstimate,
    neighborhood: usize,
    mu_large: f64,
    mu_small: f64,
    eps: f64,
) -> Result<StepSizeProfile<T>> {
    if !(0.0 <= mu_small && mu_small <= mu_large && mu_large < 2.0) {
        return Err(invalid(
            "step sizes",
            format!("need 0 <= mu_small <= mu_large < 2, got mu_small={mu_small}, mu_large={mu_large}"),
        ));
    }
    let mut mu = vec![T::of(mu_small); order];
    if pitch.voiced && pitch.lag <= order {
        let lo = pitch.lag.saturating_sub(neighborhood).max(1);
        let hi = (pitch.lag + neighborhood).min(order);
        for m in &mut mu[lo - 1..hi] {
            *m = T::of(mu_large);
        }
    }
    StepSizeProfile::new(mu, T::of(eps))
}

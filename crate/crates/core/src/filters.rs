//! Transversal FIR filtering and NLMS coefficient adaptation.
//!
//! [`FilterState`] is the engine under both the prediction error filter and the
//! noise-reconstruction filter. The delay line is kept most-recent-first, so
//! `delay_line[0]` is `x(n-1)` and `delay_line[M-1]` is `x(n-M)`, and the output
//! is the plain dot product of taps and delay line:
//!
//! ```text
//! y(n) = sum_{k=1..M} h_k(n) x(n-k)
//! ```
//!
//! Adaptation is normalized LMS with a per-tap step size:
//!
//! ```text
//! h_k += mu_k * e(n) * x(n-k) / (eps + ||x||^2)
//! ```

use crate::error::{invalid, Error, Result};
use crate::scalar::{dot, energy, Real};

/// Taps whose magnitude drops below this are flushed to zero.
pub const FLUSH_THRESHOLD: f64 = 1e-30;

/// Default NLMS regularization.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Coefficients and input history of one transversal adaptive filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState<T> {
    taps: Vec<T>,
    delay_line: Vec<T>,
}

/// Per-tap NLMS step sizes plus the normalization regularizer.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizeProfile<T> {
    per_tap_mu: Vec<T>,
    eps: T,
}

/// Result of one prediction-error-filter step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpefOutput<T> {
    pub prediction: T,
    pub error: T,
}

fn check_finite<T: Real>(x: T) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(x.as_f64()))
    }
}

impl<T: Real> FilterState<T> {
    /// Zero taps and a silent delay line.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(invalid("order", "filter order must be at least 1"));
        }
        Ok(Self {
            taps: vec![T::zero(); order],
            delay_line: vec![T::zero(); order],
        })
    }

    pub fn from_parts(taps: Vec<T>, delay_line: Vec<T>) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("order", "filter order must be at least 1"));
        }
        if taps.len() != delay_line.len() {
            return Err(Error::DimensionMismatch {
                expected: taps.len(),
                found: delay_line.len(),
            });
        }
        for &v in taps.iter().chain(&delay_line) {
            check_finite(v)?;
        }
        Ok(Self { taps, delay_line })
    }

    pub fn order(&self) -> usize {
        self.taps.len()
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    /// Most-recent-first input history.
    pub fn delay_line(&self) -> &[T] {
        &self.delay_line
    }

    /// `y(n)`: dot product of the taps with the stored past samples.
    pub fn output(&self) -> T {
        dot(&self.taps, &self.delay_line)
    }

    /// Shifts `x` into the delay line, discarding the oldest sample.
    pub fn push_sample(&mut self, x: T) -> Result<()> {
        check_finite(x)?;
        self.delay_line.rotate_right(1);
        self.delay_line[0] = x;
        Ok(())
    }

    /// One normalized-LMS update with the given error; the delay line is untouched.
    pub fn nlms_update(&mut self, error: T, profile: &StepSizeProfile<T>) -> Result<()> {
        check_finite(error)?;
        if profile.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                found: profile.len(),
            });
        }
        let scale = error / (profile.eps + energy(&self.delay_line));
        let flush = T::of(FLUSH_THRESHOLD);
        for ((tap, &mu), &u) in self
            .taps
            .iter_mut()
            .zip(&profile.per_tap_mu)
            .zip(&self.delay_line)
        {
            *tap = *tap + mu * scale * u;
            if tap.abs() < flush {
                *tap = T::zero();
            }
        }
        Ok(())
    }

    /// The normalized gradient direction `u * error / (eps + ||u||^2)`, added into `acc`.
    pub fn accumulate_normalized_gradient(&self, error: T, eps: T, acc: &mut [T]) -> Result<()> {
        check_finite(error)?;
        if acc.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                found: acc.len(),
            });
        }
        let scale = error / (eps + energy(&self.delay_line));
        for (a, &u) in acc.iter_mut().zip(&self.delay_line) {
            *a = *a + scale * u;
        }
        Ok(())
    }

    /// Adds `step * increment[k]` to every tap.
    pub fn apply_tap_increment(&mut self, increment: &[T], step: T) -> Result<()> {
        if increment.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                found: increment.len(),
            });
        }
        let flush = T::of(FLUSH_THRESHOLD);
        for (tap, &inc) in self.taps.iter_mut().zip(increment) {
            let next = *tap + step * inc;
            check_finite(next)?;
            *tap = if next.abs() < flush { T::zero() } else { next };
        }
        Ok(())
    }

    /// Predict `x_now` from the past, adapt on the prediction error, then shift
    /// `x_now` in. `error + prediction == x_now` up to one rounding.
    pub fn lpef_step(&mut self, x_now: T, profile: &StepSizeProfile<T>) -> Result<LpefOutput<T>> {
        check_finite(x_now)?;
        let prediction = self.output();
        let error = x_now - prediction;
        self.nlms_update(error, profile)?;
        self.push_sample(x_now)?;
        Ok(LpefOutput { prediction, error })
    }

    pub fn reset(&mut self) {
        self.taps.iter_mut().for_each(|t| *t = T::zero());
        self.delay_line.iter_mut().for_each(|t| *t = T::zero());
    }
}

impl<T: Real> StepSizeProfile<T> {
    pub fn new(per_tap_mu: Vec<T>, eps: T) -> Result<Self> {
        if per_tap_mu.is_empty() {
            return Err(invalid("per_tap_mu", "profile must cover at least one tap"));
        }
        if let Some(bad) = per_tap_mu
            .iter()
            .find(|&&mu| !(mu >= T::zero() && mu < T::of(2.0)))
        {
            return Err(invalid("per_tap_mu", format!("step size {bad} outside [0, 2)")));
        }
        if !(eps > T::zero() && eps.is_finite()) {
            return Err(invalid("eps", format!("regularization {eps} must be positive")));
        }
        Ok(Self { per_tap_mu, eps })
    }

    pub fn uniform(order: usize, mu: T, eps: T) -> Result<Self> {
        Self::new(vec![mu; order], eps)
    }

    pub fn len(&self) -> usize {
        self.per_tap_mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_tap_mu.is_empty()
    }

    pub fn per_tap_mu(&self) -> &[T] {
        &self.per_tap_mu
    }

    pub fn eps(&self) -> T {
        self.eps
    }
}

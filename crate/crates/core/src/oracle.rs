//! Offline least-squares references for the adaptive filters.
//!
//! These solve the normal equations directly on a recorded realization and
//! share no code with the NLMS path, so they serve as independent checks on
//! what the adaptive filters converge to.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

fn solve(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Vec<f64>> {
    let solution = match matrix.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => matrix
            .lu()
            .solve(&rhs)
            .ok_or_else(|| invalid("normal equations", "matrix is singular"))?,
    };
    Ok(solution.iter().copied().collect())
}

/// Biased autocorrelation estimate `r(k) = (1/N) sum_n x(n) x(n-k)` for `k = 0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..=max_lag)
        .map(|k| {
            if k >= x.len() {
                return 0.0;
            }
            x[k..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n
        })
        .collect()
}

/// Yule-Walker AR coefficients `a_1..a_p` such that `x(n) ~ sum_k a_k x(n-k)`.
pub fn yule_walker(x: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(invalid("order", "must be at least 1"));
    }
    if x.len() <= order {
        return Err(Error::WindowTooShort {
            len: x.len(),
            required: order,
        });
    }
    let r = autocorrelation(x, order);
    let toeplitz = DMatrix::from_fn(order, order, |i, j| r[i.abs_diff(j)]);
    let rhs = DVector::from_iterator(order, r[1..].iter().copied());
    solve(toeplitz, rhs)
}

/// Least-squares FIR fit of `desired(n)` from strictly past `input` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFit {
    /// Tap `k` (0-based) multiplies `input(n - 1 - k)`.
    pub taps: Vec<f64>,
    pub residual_energy: f64,
    pub desired_energy: f64,
}

impl FirFit {
    /// `|desired - fit|^2 / |desired|^2` over the fitted rows.
    pub fn relative_residual(&self) -> f64 {
        self.residual_energy / self.desired_energy
    }
}

/// Fits `desired(n) ~ sum_{k=1..order} g_k input(n-k)` over rows `n` in
/// `start..len`. Samples before index 0 are taken as zero.
pub fn fir_least_squares(input: &[f64], desired: &[f64], order: usize, start: usize) -> Result<FirFit> {
    if input.len() != desired.len() {
        return Err(Error::LengthMismatch {
            left: input.len(),
            right: desired.len(),
        });
    }
    if order == 0 {
        return Err(invalid("order", "must be at least 1"));
    }
    let rows = desired.len().saturating_sub(start);
    if rows <= order {
        return Err(Error::WindowTooShort {
            len: rows,
            required: order,
        });
    }
    let past = |n: usize, k: usize| if n > k { input[n - 1 - k] } else { 0.0 };
    let regressors = DMatrix::from_fn(rows, order, |r, k| past(start + r, k));
    let target = DVector::from_iterator(rows, desired[start..].iter().copied());
    let taps = solve(regressors.tr_mul(&regressors), regressors.tr_mul(&target))?;

    let fitted = &regressors * DVector::from_column_slice(&taps);
    let residual_energy = (&target - fitted).norm_squared();
    let desired_energy = target.norm_squared();
    if desired_energy <= 0.0 {
        return Err(Error::ZeroEnergy("desired signal"));
    }
    Ok(FirFit {
        taps,
        residual_energy,
        desired_energy,
    })
}

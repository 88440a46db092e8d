use nalgebra::DMatrix;

use super::{Dataset, Hyperparameters, MAX_JITTER, MIN_JITTER};
use crate::error::{Error, Result};

/// Squared-exponential correlation `exp(-sum_i 10^omega_i (x_i - x'_i)^2)`.
pub fn correlation(x: &[f64], x_prime: &[f64], omega: &[f64]) -> Result<f64> {
    if x.len() != omega.len() {
        return Err(Error::Dimension {
            expected: omega.len(),
            got: x.len(),
        });
    }
    if x_prime.len() != omega.len() {
        return Err(Error::Dimension {
            expected: omega.len(),
            got: x_prime.len(),
        });
    }
    if x.iter().chain(x_prime).chain(omega).any(|v| !v.is_finite()) {
        return Err(Error::input("correlation arguments must be finite"));
    }
    let scales: Vec<f64> = omega.iter().map(|w| 10f64.powf(*w)).collect();
    Ok(scaled_correlation(x, x_prime, &scales))
}

/// Correlation with the roughness factors `10^omega` already evaluated.
#[inline]
pub(crate) fn scaled_correlation(x: &[f64], x_prime: &[f64], scales: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((a, b), w) in x.iter().zip(x_prime).zip(scales) {
        let d = a - b;
        s += w * d * d;
    }
    (-s).exp()
}

/// `R + delta2 * I` over row-major inputs.
pub(crate) fn noisy_correlation_matrix(
    inputs: &[f64],
    dim: usize,
    scales: &[f64],
    delta2: f64,
) -> DMatrix<f64> {
    let n = inputs.len() / dim;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = &inputs[i * dim..(i + 1) * dim];
        m[(i, i)] = 1.0 + delta2;
        for j in 0..i {
            let r = scaled_correlation(xi, &inputs[j * dim..(j + 1) * dim], scales);
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    m
}

/// Covariance matrix `sigma2 * (R + delta2 * I)` of a dataset, on its inputs
/// exactly as stored (no standardization).
pub fn build_covariance(ds: &Dataset, hyper: &Hyperparameters) -> Result<DMatrix<f64>> {
    hyper.validate(ds.dim())?;
    let scales = hyper.roughness();
    let mut m = noisy_correlation_matrix(ds.flat_inputs(), ds.dim(), &scales, hyper.delta2);
    m *= hyper.sigma2;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "covariance has non-finite entries for {hyper}"
        )));
    }
    Ok(m)
}

/// Lower Cholesky factor of `a`, adding diagonal jitter when needed.
///
/// Plain factorization is tried first; after that the jitter starts at
/// `MIN_JITTER * mean(diag)` and doubles until it would exceed
/// `MAX_JITTER * mean(diag)`. Returns the factor and the absolute jitter used.
pub(crate) fn factorize(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    if let Some(l) = cholesky_lower(a) {
        return Some((l, 0.0));
    }
    let mean_diag = a.diagonal().mean();
    let mut jitter = MIN_JITTER * mean_diag;
    while jitter <= MAX_JITTER * mean_diag {
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] += jitter;
        }
        if let Some(l) = cholesky_lower(&b) {
            return Some((l, jitter));
        }
        jitter *= 2.0;
    }
    None
}

/// Factorization with a fixed jitter, used when rebuilding a stored model.
pub(crate) fn factorize_with(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    if jitter == 0.0 {
        return cholesky_lower(a);
    }
    let mut b = a.clone();
    for i in 0..a.nrows() {
        b[(i, i)] += jitter;
    }
    cholesky_lower(&b)
}

fn cholesky_lower(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = a.clone().cholesky()?;
    let l = chol.unpack();
    if l.diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
        Some(l)
    } else {
        None
    }
}

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::kernel::{factorize, factorize_with, noisy_correlation_matrix, scaled_correlation};
use super::{Dataset, FitReport, Standardization};
use crate::error::{Error, Result};

/// Kernel hyperparameters: roughness exponents `omega`, prior variance
/// `sigma2` and the noise term `delta2` added to the correlation diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub omega: Vec<f64>,
    pub sigma2: f64,
    pub delta2: f64,
}

impl Hyperparameters {
    pub fn new(omega: Vec<f64>, sigma2: f64, delta2: f64) -> Self {
        Hyperparameters {
            omega,
            sigma2,
            delta2,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.omega.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: self.omega.len(),
            });
        }
        if self.omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::input("omega entries must be finite"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(Error::input(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        if !(self.delta2.is_finite() && self.delta2 >= 0.0) {
            return Err(Error::input(format!(
                "delta2 must be non-negative, got {}",
                self.delta2
            )));
        }
        Ok(())
    }

    /// `10^omega_i` for each input dimension.
    pub fn roughness(&self) -> Vec<f64> {
        self.omega.iter().map(|w| 10f64.powf(*w)).collect()
    }
}

impl fmt::Display for Hyperparameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "omega={:?}, sigma2={:e}, delta2={:e}",
            self.omega, self.sigma2, self.delta2
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Posterior variance of the latent function, clamped at zero.
    pub variance: f64,
}

/// A conditioned Gaussian process. Immutable once built.
#[derive(Clone, Debug)]
pub struct TrainedGP {
    dataset: Dataset,
    scaling: Standardization,
    scaled_inputs: Vec<f64>,
    hyper: Hyperparameters,
    roughness: Vec<f64>,
    jitter: f64,
    /// Row-major lower Cholesky factor of `R + delta2 I + jitter I`.
    chol: Vec<f64>,
    weights: Vec<f64>,
    report: FitReport,
}

impl TrainedGP {
    /// Conditions a GP on `dataset` with fixed hyperparameters.
    pub fn new(dataset: Dataset, hyper: Hyperparameters, scaling: Standardization) -> Result<Self> {
        Self::build(dataset, hyper, scaling, None, FitReport::default())
    }

    pub(crate) fn build(
        dataset: Dataset,
        hyper: Hyperparameters,
        scaling: Standardization,
        jitter: Option<f64>,
        report: FitReport,
    ) -> Result<Self> {
        dataset.validate()?;
        hyper.validate(dataset.dim())?;
        scaling.validate()?;
        if scaling.dim() != dataset.dim() {
            return Err(Error::Dimension {
                expected: dataset.dim(),
                got: scaling.dim(),
            });
        }
        let dim = dataset.dim();
        let mut scaled_inputs = vec![0.0; dataset.flat_inputs().len()];
        for (src, dst) in dataset
            .flat_inputs()
            .chunks_exact(dim)
            .zip(scaled_inputs.chunks_exact_mut(dim))
        {
            scaling.apply_into(src, dst);
        }
        let roughness = hyper.roughness();
        let a = noisy_correlation_matrix(&scaled_inputs, dim, &roughness, hyper.delta2);
        let (l, jitter) = match jitter {
            None => factorize(&a),
            Some(j) => factorize_with(&a, j).map(|l| (l, j)),
        }
        .ok_or_else(|| {
            Error::Numeric(format!(
                "correlation matrix not factorizable even with jitter ({hyper})"
            ))
        })?;
        let n = dataset.len();
        let mut chol = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                chol[i * n + j] = l[(i, j)];
            }
        }
        let mut weights = dataset.outputs().to_vec();
        forward_substitute(&chol, n, &mut weights);
        backward_substitute(&chol, n, &mut weights);
        Ok(TrainedGP {
            dataset,
            scaling,
            scaled_inputs,
            hyper,
            roughness,
            jitter,
            chol,
            weights,
            report,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn standardization(&self) -> &Standardization {
        &self.scaling
    }

    pub fn fit_report(&self) -> &FitReport {
        &self.report
    }

    /// Absolute jitter that was added to the correlation diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn input_dim(&self) -> usize {
        self.dataset.dim()
    }

    /// Physical noise variance `sigma2 * delta2`.
    pub fn noise_variance(&self) -> f64 {
        self.hyper.sigma2 * self.hyper.delta2
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("prediction point must be finite"));
        }
        Ok(())
    }

    fn cross_correlation(&self, x: &[f64]) -> Vec<f64> {
        let dim = self.input_dim();
        let xs = self.scaling.apply(x);
        self.scaled_inputs
            .chunks_exact(dim)
            .map(|row| scaled_correlation(&xs, row, &self.roughness))
            .collect()
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let r = self.cross_correlation(x);
        Ok(dot(&r, &self.weights))
    }

    /// Posterior mean and latent variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_point(x)?;
        let mut r = self.cross_correlation(x);
        let mean = dot(&r, &self.weights);
        forward_substitute(&self.chol, self.dataset.len(), &mut r);
        let explained = dot(&r, &r);
        let variance = (self.hyper.sigma2 * (1.0 - explained)).max(0.0);
        Ok(Prediction { mean, variance })
    }

    /// One draw from the posterior at `x`: `mean + sqrt(variance) * z`.
    pub fn sample_posterior<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<f64> {
        let p = self.predict(x)?;
        let z: f64 = rng.sample(StandardNormal);
        if p.variance == 0.0 {
            return Ok(p.mean);
        }
        Ok(p.mean + p.variance.sqrt() * z)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `L v = b` in place for row-major lower-triangular `L`.
fn forward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let s = dot(row, &b[..i]);
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// Solves `L^T v = b` in place.
fn backward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> Dataset {
        Dataset::new(vec![vec![0.0], vec![0.4], vec![1.0]], vec![1.0, -0.5, 2.0]).unwrap()
    }

    #[test]
    fn interpolates_training_points_without_noise() {
        let gp = TrainedGP::new(
            small(),
            Hyperparameters::new(vec![0.5], 2.0, 0.0),
            Standardization::identity(1),
        )
        .unwrap();
        assert_eq!(gp.jitter(), 0.0);
        for (x, y) in [(0.0, 1.0), (0.4, -0.5), (1.0, 2.0)] {
            let p = gp.predict(&[x]).unwrap();
            assert!((p.mean - y).abs() < 1e-12, "{} vs {y}", p.mean);
            assert!(p.variance < 1e-12);
        }
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let gp = TrainedGP::new(
            small(),
            Hyperparameters::new(vec![0.5], 3.0, 0.0),
            Standardization::identity(1),
        )
        .unwrap();
        let p = gp.predict(&[50.0]).unwrap();
        assert!(p.mean.abs() < 1e-12);
        assert!((p.variance - 3.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_variance_at_training_point_below_noise_floor() {
        let hyper = Hyperparameters::new(vec![0.0], 2.0, 0.05);
        let gp = TrainedGP::new(small(), hyper, Standardization::identity(1)).unwrap();
        for x in [0.0, 0.4, 1.0] {
            let p = gp.predict(&[x]).unwrap();
            assert!(p.variance <= gp.noise_variance() + 1e-12);
        }
    }

    #[test]
    fn zero_variance_sample_is_the_mean() {
        let ds = Dataset::new(vec![vec![0.25]], vec![4.5]).unwrap();
        let gp = TrainedGP::new(
            ds,
            Hyperparameters::new(vec![0.0], 2.0, 0.0),
            Standardization::identity(1),
        )
        .unwrap();
        assert_eq!(gp.predict(&[0.25]).unwrap().variance, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(gp.sample_posterior(&[0.25], &mut rng).unwrap(), 4.5);
        }
    }

    #[test]
    fn equal_seeds_give_equal_draw_sequences() {
        let gp = TrainedGP::new(
            small(),
            Hyperparameters::new(vec![0.5], 2.0, 0.01),
            Standardization::identity(1),
        )
        .unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for i in 0..50 {
            let x = [i as f64 / 10.0];
            assert_eq!(
                gp.sample_posterior(&x, &mut a).unwrap().to_bits(),
                gp.sample_posterior(&x, &mut b).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn rejects_bad_points() {
        let gp = TrainedGP::new(
            small(),
            Hyperparameters::new(vec![0.5], 2.0, 0.0),
            Standardization::identity(1),
        )
        .unwrap();
        assert!(matches!(
            gp.predict(&[0.0, 1.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(gp.predict(&[f64::NAN]).is_err());
    }

    #[test]
    fn duplicate_inputs_need_jitter() {
        let ds = Dataset::new(vec![vec![0.3], vec![0.3]], vec![1.0, 1.0]).unwrap();
        let gp = TrainedGP::new(
            ds,
            Hyperparameters::new(vec![0.0], 1.0, 0.0),
            Standardization::identity(1),
        )
        .unwrap();
        assert!(gp.jitter() > 0.0);
    }
}

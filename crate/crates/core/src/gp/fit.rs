use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{factorize, noisy_correlation_matrix};
use super::{Dataset, Hyperparameters, Standardization, TrainedGP};
use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::rng::mix;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Bounds and search settings for maximum-likelihood fitting.
///
/// `sigma2` and `delta2` bounds are on their base-10 logarithms; `omega`
/// bounds apply in the standardized (unit-box) input space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub omega_bounds: (f64, f64),
    pub log10_sigma2_bounds: (f64, f64),
    pub log10_delta2_bounds: (f64, f64),
    pub restarts: usize,
    pub seed: u64,
    pub max_evals: usize,
    pub standardize: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            omega_bounds: (-6.0, 6.0),
            log10_sigma2_bounds: (-6.0, 6.0),
            log10_delta2_bounds: (-12.0, 0.0),
            restarts: 10,
            seed: 0,
            max_evals: 600,
            standardize: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("omega_bounds", self.omega_bounds),
            ("log10_sigma2_bounds", self.log10_sigma2_bounds),
            ("log10_delta2_bounds", self.log10_delta2_bounds),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::input(format!("{name} must be finite with lo <= hi")));
            }
        }
        if self.restarts == 0 {
            return Err(Error::input("restarts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub log_likelihood: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub failed_restarts: usize,
}

/// Gaussian log marginal likelihood of the outputs under a zero-mean prior,
/// evaluated on the dataset inputs as stored.
pub fn log_likelihood(ds: &Dataset, hyper: &Hyperparameters) -> Result<f64> {
    hyper.validate(ds.dim())?;
    let scales = hyper.roughness();
    let a = noisy_correlation_matrix(ds.flat_inputs(), ds.dim(), &scales, hyper.delta2);
    let terms = LikelihoodTerms::new(&a, ds.outputs())
        .ok_or_else(|| Error::Numeric(format!("covariance not factorizable for {hyper}")))?;
    Ok(terms.log_likelihood(hyper.sigma2))
}

/// Pieces of the likelihood that do not depend on `sigma2`.
struct LikelihoodTerms {
    n: f64,
    /// `y^T A^-1 y`
    quad: f64,
    /// `ln |A|`
    log_det: f64,
}

impl LikelihoodTerms {
    fn new(a: &nalgebra::DMatrix<f64>, y: &[f64]) -> Option<Self> {
        let (l, _) = factorize(a)?;
        let n = y.len();
        let mut v = y.to_vec();
        for i in 0..n {
            let mut s = v[i];
            for j in 0..i {
                s -= l[(i, j)] * v[j];
            }
            v[i] = s / l[(i, i)];
        }
        let quad = v.iter().map(|x| x * x).sum();
        let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Some(LikelihoodTerms {
            n: n as f64,
            quad,
            log_det,
        })
    }

    fn log_likelihood(&self, sigma2: f64) -> f64 {
        -0.5 * (self.quad / sigma2 + self.n * sigma2.ln() + self.log_det + self.n * LN_2PI)
    }

    /// Maximizing `sigma2` in closed form, clamped to the configured bounds.
    fn profiled_sigma2(&self, bounds: (f64, f64)) -> f64 {
        let s = (self.quad / self.n).max(f64::MIN_POSITIVE);
        exp10(s.log10().clamp(bounds.0, bounds.1))
    }
}

fn exp10(x: f64) -> f64 {
    10f64.powf(x)
}

struct RestartOutcome {
    theta: Vec<f64>,
    neg_ll: f64,
    evaluations: usize,
}

/// Maximum-likelihood fit with seeded multistart Nelder–Mead.
///
/// The search runs over `(omega, log10 delta2)`; `sigma2` is profiled out in
/// closed form at every step. Restart `r` starts from a point drawn with a
/// generator keyed by `(seed, r)`, so adding restarts never changes the
/// earlier ones and the best-of reduction is order independent.
pub fn fit(ds: &Dataset, cfg: &FitConfig) -> Result<TrainedGP> {
    cfg.validate()?;
    ds.validate()?;
    if ds.len() < 2 {
        return Err(Error::input(format!(
            "fitting needs at least 2 training rows, got {}",
            ds.len()
        )));
    }
    let dim = ds.dim();
    let scaling = if cfg.standardize {
        Standardization::unit_range(ds)
    } else {
        Standardization::identity(dim)
    };
    let mut scaled = vec![0.0; ds.flat_inputs().len()];
    for (src, dst) in ds
        .flat_inputs()
        .chunks_exact(dim)
        .zip(scaled.chunks_exact_mut(dim))
    {
        scaling.apply_into(src, dst);
    }

    let mut lower = vec![cfg.omega_bounds.0; dim];
    let mut upper = vec![cfg.omega_bounds.1; dim];
    lower.push(cfg.log10_delta2_bounds.0);
    upper.push(cfg.log10_delta2_bounds.1);

    let y = ds.outputs();
    let objective = |theta: &[f64]| -> f64 {
        let scales: Vec<f64> = theta[..dim].iter().map(|w| exp10(*w)).collect();
        let delta2 = exp10(theta[dim]);
        let a = noisy_correlation_matrix(&scaled, dim, &scales, delta2);
        match LikelihoodTerms::new(&a, y) {
            Some(t) => -t.log_likelihood(t.profiled_sigma2(cfg.log10_sigma2_bounds)),
            None => f64::INFINITY,
        }
    };

    let opts = NelderMeadOptions {
        max_evals: cfg.max_evals,
        ..Default::default()
    };
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(&[cfg.seed, r as u64]));
            let start: Vec<f64> = lower
                .iter()
                .zip(&upper)
                .map(|(lo, hi)| {
                    if lo < hi {
                        rng.random_range(*lo..*hi)
                    } else {
                        *lo
                    }
                })
                .collect();
            let m = nelder_mead(&objective, &start, &lower, &upper, &opts);
            RestartOutcome {
                theta: m.x,
                neg_ll: m.value,
                evaluations: m.evaluations,
            }
        })
        .collect();

    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let failed_restarts = outcomes.iter().filter(|o| !o.neg_ll.is_finite()).count();
    // ties keep the lowest restart index
    let best = outcomes
        .iter()
        .filter(|o| o.neg_ll.is_finite())
        .fold(None::<&RestartOutcome>, |acc, o| match acc {
            Some(b) if b.neg_ll <= o.neg_ll => Some(b),
            _ => Some(o),
        })
        .ok_or_else(|| Error::Fit {
            restarts: cfg.restarts,
            reason: format!(
                "no restart produced a factorizable covariance (n = {}, dim = {dim})",
                ds.len()
            ),
        })?;

    let omega = best.theta[..dim].to_vec();
    let delta2 = exp10(best.theta[dim]);
    let scales: Vec<f64> = omega.iter().map(|w| exp10(*w)).collect();
    let a = noisy_correlation_matrix(&scaled, dim, &scales, delta2);
    let terms = LikelihoodTerms::new(&a, y).ok_or_else(|| Error::Fit {
        restarts: cfg.restarts,
        reason: "best restart could not be refactorized".into(),
    })?;
    let sigma2 = terms.profiled_sigma2(cfg.log10_sigma2_bounds);
    let report = FitReport {
        log_likelihood: terms.log_likelihood(sigma2),
        evaluations,
        restarts: cfg.restarts,
        failed_restarts,
    };
    TrainedGP::build(
        ds.clone(),
        Hyperparameters::new(omega, sigma2, delta2),
        scaling,
        None,
        report,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_likelihood() {
        let ds = Dataset::new(vec![vec![0.0]], vec![0.0]).unwrap();
        let ll = log_likelihood(&ds, &Hyperparameters::new(vec![0.0], 1.0, 0.0)).unwrap();
        assert!((ll + 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_tiny_datasets() {
        let ds = Dataset::new(vec![vec![0.0]], vec![1.0]).unwrap();
        assert!(fit(&ds, &FitConfig::default()).is_err());
    }

    #[test]
    fn constant_outputs_give_constant_mean() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.7]).collect();
        let ds = Dataset::new(rows, vec![3.25; 12]).unwrap();
        let gp = fit(&ds, &FitConfig::default()).unwrap();
        for i in 0..=77 {
            let x = i as f64 * 0.1;
            let m = gp.predict_mean(&[x]).unwrap();
            assert!((m - 3.25).abs() < 1e-3 * 3.25, "x={x} mean={m}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|i| vec![i as f64, (i * i) as f64 % 7.0])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| (r[0] * 0.3).sin() + 0.1 * r[1])
            .collect();
        let ds = Dataset::new(rows, y).unwrap();
        let cfg = FitConfig {
            seed: 42,
            restarts: 4,
            ..Default::default()
        };
        let a = fit(&ds, &cfg).unwrap();
        let b = fit(&ds, &cfg).unwrap();
        assert_eq!(a.hyperparameters(), b.hyperparameters());
        assert_eq!(a.fit_report(), b.fit_report());
    }
}

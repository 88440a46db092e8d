//! Oracle networks and reference computations shared by the integration
//! tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rcdsp::cdsp::{CdspProblem, DesignVariable, Spread, Targets};
use rcdsp::gp::{Dataset, Hyperparameters};
use rcdsp::network::{
    AnalyticStage, Binding, Design, ExternalVariable, Noise, SubsystemNetwork, SubsystemNode,
    UncertaintySpec,
};

pub const T: &str = "temperature";

/// `x -> y1 = c x -> y2 = a y1 + b`, both stages noise-free.
pub fn linear_chain(c: f64, a: f64, b: f64) -> SubsystemNetwork {
    SubsystemNetwork::new(
        vec![ExternalVariable::new(T, "degF")],
        vec![
            SubsystemNode::new(
                "y1",
                AnalyticStage::linear(vec![c], 0.0),
                vec![Binding::external(T)],
            ),
            SubsystemNode::new(
                "y2",
                AnalyticStage::linear(vec![a], b),
                vec![Binding::node("y1")],
            ),
        ],
        "y2",
    )
    .unwrap()
}

/// Exactly Gaussian output: `y2 = 0.5 T` with no model noise.
pub fn gaussian_oracle() -> SubsystemNetwork {
    linear_chain(1.0, 0.5, 0.0)
}

/// Left-skewed output: `y1 = T / 10`, `y2 = y1 - 10 E` with E standard
/// exponential.
pub fn skew_oracle() -> SubsystemNetwork {
    SubsystemNetwork::new(
        vec![ExternalVariable::new(T, "degF")],
        vec![
            SubsystemNode::new(
                "y1",
                AnalyticStage::linear(vec![0.1], 0.0),
                vec![Binding::external(T)],
            ),
            SubsystemNode::new(
                "y2",
                AnalyticStage::identity().with_noise(Noise::Exponential { scale: -10.0 }),
                vec![Binding::node("y1")],
            ),
        ],
        "y2",
    )
    .unwrap()
}

pub fn problem(
    network: SubsystemNetwork,
    sd: f64,
    targets: Targets,
    n: usize,
    grid_points: usize,
    seed: u64,
) -> CdspProblem {
    CdspProblem {
        network: Arc::new(network),
        uncertainty: UncertaintySpec::new().normal(T, sd),
        design_variable: DesignVariable::new(T, 1000.0, 2000.0, grid_points),
        fixed: Design::new(),
        targets,
        mc_samples: n,
        seed,
        spread: Spread::Additive,
    }
}

pub fn at(x: f64) -> Design {
    Design::from([(T.to_string(), x)])
}

/// Posterior mean and latent variance from the explicit inverse of the
/// covariance matrix `sigma2 (R + delta2 I)`, on unscaled inputs.
pub fn dense_inverse_posterior(ds: &Dataset, h: &Hyperparameters, x: &[f64]) -> (f64, f64) {
    let n = ds.len();
    let corr = |a: &[f64], b: &[f64]| {
        let s: f64 = a
            .iter()
            .zip(b)
            .zip(&h.omega)
            .map(|((p, q), w)| 10f64.powf(*w) * (p - q) * (p - q))
            .sum();
        (-s).exp()
    };
    let k = DMatrix::from_fn(n, n, |i, j| {
        h.sigma2 * (corr(ds.row(i), ds.row(j)) + if i == j { h.delta2 } else { 0.0 })
    });
    let kinv = k.try_inverse().expect("oracle covariance invertible");
    let kx = DVector::from_fn(n, |i, _| h.sigma2 * corr(ds.row(i), x));
    let y = DVector::from_column_slice(ds.outputs());
    let mean = kx.dot(&(&kinv * &y));
    let var = h.sigma2 - kx.dot(&(&kinv * &kx));
    (mean, var)
}

/// Multivariate normal log density of `y` under `N(0, sigma2 (R + delta2 I))`
/// via the explicit inverse and determinant.
pub fn dense_log_likelihood(ds: &Dataset, h: &Hyperparameters) -> f64 {
    let n = ds.len();
    let corr = |a: &[f64], b: &[f64]| {
        let s: f64 = a
            .iter()
            .zip(b)
            .zip(&h.omega)
            .map(|((p, q), w)| 10f64.powf(*w) * (p - q) * (p - q))
            .sum();
        (-s).exp()
    };
    let k = DMatrix::from_fn(n, n, |i, j| {
        h.sigma2 * (corr(ds.row(i), ds.row(j)) + if i == j { h.delta2 } else { 0.0 })
    });
    let det = k.determinant();
    let kinv = k.try_inverse().unwrap();
    let y = DVector::from_column_slice(ds.outputs());
    -0.5 * (y.dot(&(&kinv * &y)) + det.ln() + n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// `4 sqrt(a (1 - a) / n)`.
pub fn mc_band(alpha: f64, n: usize) -> f64 {
    4.0 * (alpha * (1.0 - alpha) / n as f64).sqrt()
}

/// Grid points where the robust and reliability flags disagree although
/// the estimated reliability lies outside the Monte Carlo band around the
/// target.
pub fn equivalence_violations(
    sweep: &[rcdsp::cdsp::DesignEvaluation],
    alpha_target: f64,
    n: usize,
) -> Vec<f64> {
    let band = mc_band(alpha_target, n);
    sweep
        .iter()
        .filter(|e| (e.alpha_hat - alpha_target).abs() > band)
        .filter(|e| e.admissible_robust != e.admissible_reliable)
        .map(|e| e.design_value)
        .collect()
}

/// Largest violation of `EMI / EMI_target + d_minus - d_plus = 1` over a
/// sweep, relative to `max(1, EMI / EMI_target)`.
pub fn goal_identity_error(sweep: &[rcdsp::cdsp::DesignEvaluation], emi_target: f64) -> f64 {
    sweep
        .iter()
        .map(|e| {
            let r = e.emi / emi_target;
            (r + e.d_minus - e.d_plus - 1.0).abs() / r.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::TrainedGP;

/// How a node turns its inputs into an output on one Monte Carlo pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Draw {
    /// Expected output given the inputs.
    Mean,
    /// One random output given the inputs.
    Sample,
}

/// One GP of a mixture, with its selection weight.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub label: String,
    pub weight: f64,
    pub gp: TrainedGP,
}

/// Finite mixture of GPs over the same inputs.
///
/// A draw first picks a component with probability equal to its weight and
/// then samples that component's posterior, so disagreement between the
/// components survives as a multi-modal output rather than being averaged
/// into Gaussian noise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GpMixture {
    components: Vec<MixtureComponent>,
}

impl GpMixture {
    /// Weights are normalized to sum to one.
    pub fn new(mut components: Vec<MixtureComponent>) -> Result<Self> {
        let dim = components
            .first()
            .ok_or_else(|| Error::input("mixture needs at least one component"))?
            .gp
            .input_dim();
        if let Some(c) = components.iter().find(|c| c.gp.input_dim() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: c.gp.input_dim(),
            });
        }
        if components
            .iter()
            .any(|c| !(c.weight.is_finite() && c.weight > 0.0))
        {
            return Err(Error::input("mixture weights must be positive"));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in &mut components {
            c.weight /= total;
        }
        Ok(GpMixture { components })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn input_dim(&self) -> usize {
        self.components[0].gp.input_dim()
    }

    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        let mut m = 0.0;
        for c in &self.components {
            m += c.weight * c.gp.predict_mean(x)?;
        }
        Ok(m)
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let last = self.components.len() - 1;
        for (k, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc || k == last {
                return c.gp.sample_posterior(x, rng);
            }
        }
        unreachable!("mixture has at least one component")
    }
}

/// Additive noise of an analytic stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Noise {
    None,
    /// `sd * Z`, Z standard normal.
    Normal {
        sd: f64,
    },
    /// `scale * E`, E standard exponential. A negative scale gives a long
    /// lower tail.
    Exponential {
        scale: f64,
    },
}

impl Noise {
    fn mean(self) -> f64 {
        match self {
            Noise::None | Noise::Normal { .. } => 0.0,
            Noise::Exponential { scale } => scale,
        }
    }

    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Noise::None => 0.0,
            Noise::Normal { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            Noise::Exponential { scale } => {
                let e: f64 = Exp1.sample(rng);
                scale * e
            }
        }
    }
}

type StageFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Closed-form stage `y = f(x) + noise`.
#[derive(Clone)]
pub struct AnalyticStage {
    name: String,
    dim: usize,
    f: StageFn,
    noise: Noise,
}

impl AnalyticStage {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AnalyticStage {
            name: name.into(),
            dim,
            f: Arc::new(f),
            noise: Noise::None,
        }
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    /// `y = x`.
    pub fn identity() -> Self {
        Self::new("identity", 1, |x| x[0])
    }

    /// `y = intercept + sum_i weights_i x_i`.
    pub fn linear(weights: Vec<f64>, intercept: f64) -> Self {
        let dim = weights.len();
        Self::new("linear", dim, move |x| {
            intercept + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x) + self.noise.mean())
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<f64> {
        Ok((self.f)(x) + self.noise.sample(rng))
    }
}

impl fmt::Debug for AnalyticStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticStage")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise", &self.noise)
            .finish()
    }
}

/// The model inside a network node.
#[derive(Clone, Debug)]
pub enum NodeModel {
    Gp(TrainedGP),
    Mixture(GpMixture),
    Analytic(AnalyticStage),
}

impl NodeModel {
    pub fn input_dim(&self) -> usize {
        match self {
            NodeModel::Gp(gp) => gp.input_dim(),
            NodeModel::Mixture(m) => m.input_dim(),
            NodeModel::Analytic(a) => a.input_dim(),
        }
    }

    pub fn evaluate<R: Rng + ?Sized>(&self, x: &[f64], draw: Draw, rng: &mut R) -> Result<f64> {
        let y = match (self, draw) {
            (NodeModel::Gp(gp), Draw::Mean) => gp.predict_mean(x),
            (NodeModel::Gp(gp), Draw::Sample) => gp.sample_posterior(x, rng),
            (NodeModel::Mixture(m), Draw::Mean) => m.mean(x),
            (NodeModel::Mixture(m), Draw::Sample) => m.sample(x, rng),
            (NodeModel::Analytic(a), Draw::Mean) => a.mean(x),
            (NodeModel::Analytic(a), Draw::Sample) => a.sample(x, rng),
        }?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Numeric(format!("non-finite output {y} at {x:?}")))
        }
    }
}

impl From<TrainedGP> for NodeModel {
    fn from(gp: TrainedGP) -> Self {
        NodeModel::Gp(gp)
    }
}

impl From<GpMixture> for NodeModel {
    fn from(m: GpMixture) -> Self {
        NodeModel::Mixture(m)
    }
}

impl From<AnalyticStage> for NodeModel {
    fn from(a: AnalyticStage) -> Self {
        NodeModel::Analytic(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{Dataset, Hyperparameters, Standardization};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat_gp(level: f64) -> TrainedGP {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![level, level]).unwrap();
        TrainedGP::new(
            ds,
            Hyperparameters::new(vec![0.0], 1.0, 1e-6),
            Standardization::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn mixture_picks_components_by_weight() {
        let m = GpMixture::new(vec![
            MixtureComponent {
                label: "a".into(),
                weight: 1.0,
                gp: flat_gp(0.0),
            },
            MixtureComponent {
                label: "b".into(),
                weight: 3.0,
                gp: flat_gp(100.0),
            },
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let high = (0..n)
            .filter(|_| m.sample(&[0.5], &mut rng).unwrap() > 50.0)
            .count();
        let p = high as f64 / n as f64;
        assert!((p - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
        let parts: Vec<f64> = m
            .components()
            .iter()
            .map(|c| c.gp.predict_mean(&[0.5]).unwrap())
            .collect();
        assert_eq!(m.mean(&[0.5]).unwrap(), 0.25 * parts[0] + 0.75 * parts[1]);
    }

    #[test]
    fn exponential_noise_mean_is_scale() {
        let a = AnalyticStage::identity().with_noise(Noise::Exponential { scale: -2.0 });
        assert_eq!(a.mean(&[1.0]).unwrap(), -1.0);
    }
}

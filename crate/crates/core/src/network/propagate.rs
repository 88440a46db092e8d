use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{empirical_reliability, summarize};
use super::{Draw, SubsystemNetwork};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Nominal value of every external variable, keyed by name.
pub type Design = BTreeMap<String, f64>;

/// Distribution of an uncertain external input around its nominal value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputDistribution {
    /// `nominal + sd * Z`.
    Normal { sd: f64 },
}

impl InputDistribution {
    fn sd(&self) -> f64 {
        match self {
            InputDistribution::Normal { sd } => *sd,
        }
    }
}

/// Parametric uncertainty per external variable. Variables not listed are
/// held at their nominal value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySpec {
    inputs: BTreeMap<String, InputDistribution>,
}

impl UncertaintySpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn normal(mut self, name: &str, sd: f64) -> Self {
        self.inputs
            .insert(name.to_string(), InputDistribution::Normal { sd });
        self
    }

    pub fn get(&self, name: &str) -> Option<&InputDistribution> {
        self.inputs.get(name)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in &self.inputs {
            let sd = d.sd();
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(Error::input(format!(
                    "standard deviation of `{name}` must be finite and >= 0, got {sd}"
                )));
            }
        }
        Ok(())
    }
}

/// Which uncertainty sources a propagation keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Uncertain inputs and posterior draws at every node. Also runs the two
    /// single-source passes to split the spread.
    Full,
    /// Uncertain inputs, node means only.
    MeanOnly,
    /// Inputs at nominal, posterior draws at every node.
    FixedInput,
}

/// Monte Carlo sample of the network output with summary statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputDistribution {
    pub mode: Mode,
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std_total: f64,
    /// Spread from the models alone (inputs at nominal).
    pub std_pr: f64,
    /// Spread from the inputs alone (node means).
    pub std_pa: f64,
    pub skewness: Option<f64>,
    pub ex_kurtosis: Option<f64>,
}

impl OutputDistribution {
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    /// Fraction of samples at or above `y_target`.
    pub fn reliability(&self, y_target: f64) -> f64 {
        empirical_reliability(&self.samples, y_target)
    }
}

/// Smallest sample count accepted by [`propagate`].
pub const MIN_SAMPLES: usize = 100;

const INPUT_STREAM: u64 = 0;
const NODE_STREAM: u64 = 1;

/// Propagates `unc` through `net` at `design` with `n` samples.
///
/// Randomness is counter-based: sample `i` reads its input draws from the
/// stream `(seed, 0, i, 0)` and its node draws from `(seed, 0, i, 1)`, so
/// results do not depend on thread count. In `Full` mode the MeanOnly pass
/// reuses the input draws and the FixedInput pass reuses the node draws.
pub fn propagate(
    net: &SubsystemNetwork,
    design: &Design,
    unc: &UncertaintySpec,
    mode: Mode,
    n: usize,
    seed: u64,
) -> Result<OutputDistribution> {
    propagate_at(net, design, unc, mode, n, seed, 0)
}

/// [`propagate`] for the design point with index `design_index` of a sweep;
/// the index keys the random streams.
pub fn propagate_at(
    net: &SubsystemNetwork,
    design: &Design,
    unc: &UncertaintySpec,
    mode: Mode,
    n: usize,
    seed: u64,
    design_index: u64,
) -> Result<OutputDistribution> {
    if n < MIN_SAMPLES {
        return Err(Error::input(format!(
            "propagation needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    unc.validate()?;
    for key in design.keys() {
        if !net.externals().iter().any(|e| &e.name == key) {
            return Err(Error::input(format!(
                "design sets unknown variable `{key}`"
            )));
        }
    }
    let mut nominal = Vec::with_capacity(net.externals().len());
    let mut sds = Vec::with_capacity(net.externals().len());
    for e in net.externals() {
        let v = *design
            .get(&e.name)
            .ok_or_else(|| Error::Unbound(e.name.clone()))?;
        if !v.is_finite() {
            return Err(Error::input(format!(
                "design value of `{}` is not finite",
                e.name
            )));
        }
        nominal.push(v);
        sds.push(unc.get(&e.name).map_or(0.0, |d| d.sd()));
    }
    let pass = |draw_inputs: bool, draw: Draw| {
        run_pass(
            net,
            &nominal,
            &sds,
            draw_inputs,
            draw,
            n,
            seed,
            design_index,
        )
    };

    let (samples, std_pr, std_pa) = match mode {
        Mode::Full => {
            let full = pass(true, Draw::Sample)?;
            let pa = summarize(&pass(true, Draw::Mean)?)?.std;
            let pr = summarize(&pass(false, Draw::Sample)?)?.std;
            (full, pr, pa)
        }
        Mode::MeanOnly => {
            let s = pass(true, Draw::Mean)?;
            let sd = summarize(&s)?.std;
            (s, 0.0, sd)
        }
        Mode::FixedInput => {
            let s = pass(false, Draw::Sample)?;
            let sd = summarize(&s)?.std;
            (s, sd, 0.0)
        }
    };
    let s = summarize(&samples)?;
    Ok(OutputDistribution {
        mode,
        mean: s.mean,
        std_total: s.std,
        std_pr,
        std_pa,
        skewness: s.skewness,
        ex_kurtosis: s.ex_kurtosis,
        samples,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_pass(
    net: &SubsystemNetwork,
    nominal: &[f64],
    sds: &[f64],
    draw_inputs: bool,
    draw: Draw,
    n: usize,
    seed: u64,
    design_index: u64,
) -> Result<Vec<f64>> {
    let results: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; nominal.len()],
            |x, i| {
                x.copy_from_slice(nominal);
                if draw_inputs {
                    let mut rng = stream(&[seed, design_index, i as u64, INPUT_STREAM]);
                    for (v, sd) in x.iter_mut().zip(sds) {
                        let z: f64 = rng.sample(StandardNormal);
                        *v += sd * z;
                    }
                }
                let mut rng = stream(&[seed, design_index, i as u64, NODE_STREAM]);
                net.evaluate(x, draw, &mut rng)
            },
        )
        .collect();
    // report the lowest failing sample so errors are reproducible
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{AnalyticStage, Binding, ExternalVariable, Noise, SubsystemNode};

    fn single(stage: AnalyticStage) -> SubsystemNetwork {
        SubsystemNetwork::new(
            vec![ExternalVariable::new("x", "")],
            vec![SubsystemNode::new("y", stage, vec![Binding::external("x")])],
            "y",
        )
        .unwrap()
    }

    fn at(x: f64) -> Design {
        Design::from([("x".to_string(), x)])
    }

    #[test]
    fn identity_propagation() {
        let net = single(AnalyticStage::identity());
        let n = 100_000;
        let d = propagate(
            &net,
            &at(0.0),
            &UncertaintySpec::new().normal("x", 1.0),
            Mode::Full,
            n,
            4,
        )
        .unwrap();
        assert!(d.mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((d.std_total - 1.0).abs() < 0.02);
        assert_eq!(d.std_pr, 0.0);
        assert_eq!(d.std_pa, d.std_total);
    }

    #[test]
    fn mean_only_of_noisy_stage_has_no_model_spread() {
        let net = single(AnalyticStage::identity().with_noise(Noise::Normal { sd: 3.0 }));
        let unc = UncertaintySpec::new().normal("x", 2.0);
        let d = propagate(&net, &at(1.0), &unc, Mode::MeanOnly, 20_000, 1).unwrap();
        assert_eq!(d.std_pr, 0.0);
        assert!((d.std_total - 2.0).abs() < 0.05);
        let f = propagate(&net, &at(1.0), &unc, Mode::Full, 20_000, 1).unwrap();
        assert!((f.std_pa - 2.0).abs() < 0.05);
        assert!((f.std_pr - 3.0).abs() < 0.07);
        assert!((f.std_total - 13f64.sqrt()).abs() < 0.1);
    }

    #[test]
    fn missing_design_value_is_unbound() {
        let net = single(AnalyticStage::identity());
        let err = propagate(
            &net,
            &Design::new(),
            &UncertaintySpec::new(),
            Mode::Full,
            100,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unbound(v) if v == "x"));
    }

    #[test]
    fn node_failure_names_node() {
        let net = single(AnalyticStage::new("boom", 1, |_| f64::NAN));
        let err =
            propagate(&net, &at(0.0), &UncertaintySpec::new(), Mode::Full, 100, 0).unwrap_err();
        assert!(
            matches!(err, Error::Node { ref node, .. } if node == "y"),
            "{err}"
        );
    }

    #[test]
    fn too_few_samples_rejected() {
        let net = single(AnalyticStage::identity());
        assert!(propagate(&net, &at(0.0), &UncertaintySpec::new(), Mode::Full, 99, 0).is_err());
    }
}

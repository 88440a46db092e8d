use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{fit, Column, Dataset, FitConfig};
use crate::network::{
    Binding, ExternalVariable, GpMixture, MixtureComponent, NodeModel, SubsystemNetwork,
    SubsystemNode,
};
use crate::process::{generate_training_data, ChainInputs, ChainTrace, ModelSelector};
use crate::rng::{label, mix, stream};

/// Name of the uncertain design variable.
pub const TEMPERATURE: &str = "temperature";
/// Output node of every case network.
pub const YIELD_NODE: &str = "yield_strength";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    A,
    B,
    C,
    D,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::A, CaseId::B, CaseId::C, CaseId::D];

    pub fn letter(self) -> char {
        match self {
            CaseId::A => 'A',
            CaseId::B => 'B',
            CaseId::C => 'C',
            CaseId::D => 'D',
        }
    }

    /// Yield model and training rows per input dimension of the case.
    pub fn defaults(self) -> (ModelSelector, usize) {
        match self {
            CaseId::A => (ModelSelector::Middle, 50),
            CaseId::B => (ModelSelector::Middle, 5),
            CaseId::C => (ModelSelector::All, 50),
            CaseId::D => (ModelSelector::All, 5),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(CaseId::A),
            "B" | "b" => Ok(CaseId::B),
            "C" | "c" => Ok(CaseId::C),
            "D" | "d" => Ok(CaseId::D),
            other => Err(Error::input(format!("unknown case `{other}`"))),
        }
    }
}

/// Training setup of one case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseConfig {
    pub case_id: CaseId,
    pub selector: ModelSelector,
    pub samples_per_dim: usize,
    /// When set, every node trains on exactly this many rows instead of
    /// `samples_per_dim` times its input dimension.
    pub fixed_rows: Option<usize>,
    pub seed: u64,
}

impl CaseConfig {
    /// The standard configuration of `case_id`, seeded from `master_seed`.
    pub fn standard(case_id: CaseId, master_seed: u64) -> Self {
        let (selector, samples_per_dim) = case_id.defaults();
        CaseConfig {
            case_id,
            selector,
            samples_per_dim,
            fixed_rows: None,
            seed: case_seed(master_seed, case_id),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (selector, k) = self.case_id.defaults();
        if self.selector != selector || self.samples_per_dim != k {
            return Err(Error::input(format!(
                "case {} is ({selector}, {k} per dimension), got ({}, {})",
                self.case_id, self.selector, self.samples_per_dim
            )));
        }
        if matches!(self.fixed_rows, Some(n) if n < 2) {
            return Err(Error::input("fixed_rows must be at least 2"));
        }
        Ok(())
    }

    pub fn rows_for(&self, input_dim: usize) -> usize {
        self.fixed_rows.unwrap_or(self.samples_per_dim * input_dim)
    }
}

/// `hash(master, "case", case)`.
pub fn case_seed(master_seed: u64, case_id: CaseId) -> u64 {
    mix(&[master_seed, label("case"), case_id.letter() as u64])
}

/// One stage of the chain as a regression problem.
struct NodeSpec {
    id: &'static str,
    inputs: &'static [(&'static str, &'static str)],
    response: (&'static str, &'static str),
    extract: fn(&ChainTrace) -> f64,
}

impl NodeSpec {
    fn row(&self, t: &ChainTrace) -> Vec<f64> {
        self.inputs
            .iter()
            .map(|(name, _)| {
                if *name == TEMPERATURE {
                    t.temperature
                } else {
                    let src = CHAIN.iter().find(|s| s.id == *name).expect("known node");
                    (src.extract)(t)
                }
            })
            .collect()
    }

    fn dataset(&self, traces: &[ChainTrace], outputs: Vec<f64>) -> Result<Dataset> {
        Dataset::from_rows(
            traces.iter().map(|t| self.row(t)).collect(),
            outputs,
            self.inputs
                .iter()
                .map(|(n, u)| Column::new(*n, *u))
                .collect(),
            Column::new(self.response.0, self.response.1),
        )
    }
}

/// Chain topology; inputs naming another entry read that node's output.
const CHAIN: [NodeSpec; 7] = [
    NodeSpec {
        id: "drx",
        inputs: &[(TEMPERATURE, "degF")],
        response: ("drx_grain_size", "um"),
        extract: |t| t.drx.grain_size,
    },
    NodeSpec {
        id: "mdrx",
        inputs: &[("drx", "um"), (TEMPERATURE, "degF")],
        response: ("recrystallized_grain_size", "um"),
        extract: |t| t.recrystallized_size,
    },
    NodeSpec {
        id: "grain_growth",
        inputs: &[("mdrx", "um"), (TEMPERATURE, "degF")],
        response: ("austenite_grain_size", "um"),
        extract: |t| t.austenite_size,
    },
    NodeSpec {
        id: "ferrite_grain_size",
        inputs: &[("grain_growth", "um")],
        response: ("ferrite_grain_size", "um"),
        extract: |t| t.micro.ferrite_grain_size,
    },
    NodeSpec {
        id: "ferrite_fraction",
        inputs: &[("grain_growth", "um")],
        response: ("ferrite_fraction", "-"),
        extract: |t| t.micro.ferrite_fraction,
    },
    NodeSpec {
        id: "pearlite_spacing",
        inputs: &[("grain_growth", "um")],
        response: ("pearlite_spacing", "um"),
        extract: |t| t.micro.pearlite_spacing,
    },
    NodeSpec {
        id: YIELD_NODE,
        inputs: &[
            ("ferrite_grain_size", "um"),
            ("ferrite_fraction", "-"),
            ("pearlite_spacing", "um"),
        ],
        response: ("yield_strength", "MPa"),
        extract: |t| t.yield_strength,
    },
];

/// A trained case network with the training size of each node.
#[derive(Clone, Debug)]
pub struct CaseNetwork {
    pub config: CaseConfig,
    pub network: Arc<SubsystemNetwork>,
    pub training_rows: BTreeMap<String, usize>,
}

/// Shared settings of case construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildSettings {
    pub chain: ChainInputs,
    /// °F
    pub window: (f64, f64),
    pub fit: FitConfig,
}

impl Default for BuildSettings {
    fn default() -> Self {
        BuildSettings {
            chain: ChainInputs::default(),
            window: crate::process::DESIGN_TEMPERATURE,
            fit: FitConfig::default(),
        }
    }
}

/// Trains one GP per chain stage and wires them together.
///
/// Each node gets its own stratified temperature sample of
/// `rows_for(node dimension)` rows, run through the analytic chain. Interior
/// nodes learn noise-free stage outputs. Under `ModelSelector::All` the
/// yield node becomes a mixture holding one GP per candidate model, each
/// fitted to the rows labeled with that model and weighted by its share of
/// the rows; models with fewer than two rows are left out.
pub fn build_case(config: &CaseConfig, settings: &BuildSettings) -> Result<CaseNetwork> {
    config.validate()?;
    let mut nodes = Vec::with_capacity(CHAIN.len());
    let mut training_rows = BTreeMap::new();
    for spec in &CHAIN {
        let n = config.rows_for(spec.inputs.len());
        let node_key = label(spec.id);
        let mut rng = stream(&[config.seed, node_key, 0]);
        let selector = if spec.id == YIELD_NODE {
            config.selector
        } else {
            ModelSelector::Middle
        };
        let data = generate_training_data(&settings.chain, settings.window, selector, n, &mut rng)
            .map_err(|e| e.in_node(spec.id))?;
        let outputs: Vec<f64> = data.traces.iter().map(spec.extract).collect();
        let ds = spec
            .dataset(&data.traces, outputs)
            .map_err(|e| e.in_node(spec.id))?;
        let fit_cfg = |k: u64| FitConfig {
            seed: mix(&[config.seed, node_key, 1, k]),
            ..settings.fit.clone()
        };
        let model: NodeModel = if selector == ModelSelector::All {
            let mut components = Vec::new();
            for (k, m) in ModelSelector::SINGLE.iter().enumerate() {
                let keep: Vec<usize> = (0..n).filter(|&i| data.labels[i] == *m).collect();
                if keep.len() < 2 {
                    continue;
                }
                let sub = ds.subset(&keep)?;
                let gp = fit(&sub, &fit_cfg(k as u64)).map_err(|e| e.in_node(spec.id))?;
                components.push(MixtureComponent {
                    label: m.name().to_string(),
                    weight: keep.len() as f64,
                    gp,
                });
            }
            GpMixture::new(components)
                .map_err(|e| e.in_node(spec.id))?
                .into()
        } else {
            fit(&ds, &fit_cfg(0))
                .map_err(|e| e.in_node(spec.id))?
                .into()
        };
        let bindings = spec
            .inputs
            .iter()
            .map(|(name, _)| {
                if *name == TEMPERATURE {
                    Binding::external(TEMPERATURE)
                } else {
                    Binding::node(name)
                }
            })
            .collect();
        training_rows.insert(spec.id.to_string(), n);
        nodes.push(SubsystemNode::new(spec.id, model, bindings));
    }
    let network = SubsystemNetwork::new(
        vec![ExternalVariable::new(TEMPERATURE, "degF")],
        nodes,
        YIELD_NODE,
    )?;
    Ok(CaseNetwork {
        config: *config,
        network: Arc::new(network),
        training_rows,
    })
}

//! Acyclic networks of subsystem models and Monte Carlo propagation of
//! input uncertainty through them.
//!
//! Each node maps an ordered list of inputs to one scalar. An input is
//! either an external variable (the design variables, possibly uncertain) or
//! the output of an upstream node. A propagation pass draws the external
//! inputs, walks the nodes in topological order and records the output of
//! the designated node.

mod model;
mod propagate;
mod stats;

pub use model::{AnalyticStage, Draw, GpMixture, MixtureComponent, NodeModel, Noise};
pub use propagate::{
    propagate, propagate_at, Design, InputDistribution, Mode, OutputDistribution, UncertaintySpec,
};
pub use stats::{
    empirical_reliability, histogram, histogram_csv, samples_csv, summarize, HistogramBin, Summary,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::TrainedGP;
use crate::io::write_atomic;

/// Source of one node input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    External(String),
    Node(String),
}

impl Binding {
    pub fn external(name: &str) -> Self {
        Binding::External(name.to_string())
    }

    pub fn node(id: &str) -> Self {
        Binding::Node(id.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalVariable {
    pub name: String,
    pub unit: String,
}

impl ExternalVariable {
    pub fn new(name: &str, unit: &str) -> Self {
        ExternalVariable {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SubsystemNode {
    pub id: String,
    pub model: NodeModel,
    pub bindings: Vec<Binding>,
}

impl SubsystemNode {
    pub fn new(id: &str, model: impl Into<NodeModel>, bindings: Vec<Binding>) -> Self {
        SubsystemNode {
            id: id.to_string(),
            model: model.into(),
            bindings,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    External(usize),
    Node(usize),
}

/// A validated, topologically ordered network.
#[derive(Clone, Debug)]
pub struct SubsystemNetwork {
    externals: Vec<ExternalVariable>,
    nodes: Vec<SubsystemNode>,
    slots: Vec<Vec<Slot>>,
    output: usize,
}

impl SubsystemNetwork {
    /// Validates and orders `nodes`. Nodes may be given in any order; ties in
    /// the topological order keep the given order.
    pub fn new(
        externals: Vec<ExternalVariable>,
        nodes: Vec<SubsystemNode>,
        output: &str,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &externals {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Network(format!(
                    "duplicate external variable `{}`",
                    v.name
                )));
            }
        }
        let mut ids = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if seen.contains(n.id.as_str()) || ids.insert(n.id.clone(), i).is_some() {
                return Err(Error::Network(format!("duplicate name `{}`", n.id)));
            }
        }
        for n in &nodes {
            if n.bindings.len() != n.model.input_dim() {
                return Err(Error::Network(format!(
                    "node `{}` binds {} inputs but its model takes {}",
                    n.id,
                    n.bindings.len(),
                    n.model.input_dim()
                )));
            }
            for b in &n.bindings {
                match b {
                    Binding::External(v) if !externals.iter().any(|e| &e.name == v) => {
                        return Err(Error::Unbound(v.clone()));
                    }
                    Binding::Node(u) if !ids.contains_key(u) => {
                        return Err(Error::Network(format!(
                            "node `{}` reads unknown node `{u}`",
                            n.id
                        )));
                    }
                    _ => {}
                }
            }
        }
        for v in &externals {
            let used = nodes.iter().any(|n| {
                n.bindings
                    .iter()
                    .any(|b| *b == Binding::External(v.name.clone()))
            });
            if !used {
                return Err(Error::Network(format!(
                    "external variable `{}` is not consumed by any node",
                    v.name
                )));
            }
        }
        if !ids.contains_key(output) {
            return Err(Error::Network(format!(
                "output node `{output}` does not exist"
            )));
        }

        // Kahn's algorithm, always taking the earliest ready node
        let mut placed = vec![false; nodes.len()];
        let mut order = Vec::with_capacity(nodes.len());
        while order.len() < nodes.len() {
            let next = (0..nodes.len()).find(|&i| {
                !placed[i]
                    && nodes[i].bindings.iter().all(|b| match b {
                        Binding::Node(u) => placed[ids[u]],
                        Binding::External(_) => true,
                    })
            });
            match next {
                Some(i) => {
                    placed[i] = true;
                    order.push(i);
                }
                None => return Err(Error::Network("cycle among nodes".into())),
            }
        }
        let mut slots_by_old = vec![None; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            slots_by_old[old] = Some(new);
        }
        let mut taken: Vec<Option<SubsystemNode>> = nodes.into_iter().map(Some).collect();
        let nodes: Vec<SubsystemNode> = order.iter().map(|&i| taken[i].take().unwrap()).collect();
        let slots = nodes
            .iter()
            .map(|n| {
                n.bindings
                    .iter()
                    .map(|b| match b {
                        Binding::External(v) => {
                            Slot::External(externals.iter().position(|e| &e.name == v).unwrap())
                        }
                        Binding::Node(u) => Slot::Node(slots_by_old[ids[u]].unwrap()),
                    })
                    .collect()
            })
            .collect();
        let output = nodes.iter().position(|n| n.id == output).unwrap();
        Ok(SubsystemNetwork {
            externals,
            nodes,
            slots,
            output,
        })
    }

    pub fn externals(&self) -> &[ExternalVariable] {
        &self.externals
    }

    /// Nodes in topological order.
    pub fn nodes(&self) -> &[SubsystemNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&SubsystemNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn output_id(&self) -> &str {
        &self.nodes[self.output].id
    }

    /// One pass through the network with the given external values.
    pub fn evaluate<R: rand::Rng + ?Sized>(
        &self,
        externals: &[f64],
        draw: Draw,
        rng: &mut R,
    ) -> Result<f64> {
        let mut outputs = vec![0.0; self.nodes.len()];
        let mut x = Vec::new();
        for (k, node) in self.nodes.iter().enumerate() {
            x.clear();
            x.extend(self.slots[k].iter().map(|s| match *s {
                Slot::External(i) => externals[i],
                Slot::Node(j) => outputs[j],
            }));
            outputs[k] = node
                .model
                .evaluate(&x, draw, rng)
                .map_err(|e| e.in_node(&node.id))?;
            if k == self.output {
                break;
            }
        }
        Ok(outputs[self.output])
    }

    pub fn to_json(&self) -> Result<String> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let model = match &n.model {
                    NodeModel::Gp(gp) => StoredModel::Gp(gp.clone()),
                    NodeModel::Mixture(m) => StoredModel::Mixture(m.clone()),
                    NodeModel::Analytic(a) => {
                        return Err(Error::Network(format!(
                            "node `{}` holds analytic stage `{}`, which cannot be persisted",
                            n.id,
                            a.name()
                        )))
                    }
                };
                Ok(StoredNode {
                    id: n.id.clone(),
                    bindings: n.bindings.clone(),
                    model,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rec = NetworkRecord {
            format: NETWORK_FORMAT.to_string(),
            externals: self.externals.clone(),
            output: self.output_id().to_string(),
            nodes,
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: NetworkRecord = serde_json::from_str(text)?;
        if rec.format != NETWORK_FORMAT {
            return Err(Error::input(format!(
                "unsupported network format `{}` (expected `{NETWORK_FORMAT}`)",
                rec.format
            )));
        }
        let nodes = rec
            .nodes
            .into_iter()
            .map(|n| SubsystemNode {
                id: n.id,
                bindings: n.bindings,
                model: match n.model {
                    StoredModel::Gp(gp) => NodeModel::Gp(gp),
                    StoredModel::Mixture(m) => NodeModel::Mixture(m),
                },
            })
            .collect();
        SubsystemNetwork::new(rec.externals, nodes, &rec.output)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Format tag of persisted networks.
pub const NETWORK_FORMAT: &str = "rcdsp-network/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkRecord {
    format: String,
    externals: Vec<ExternalVariable>,
    output: String,
    nodes: Vec<StoredNode>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredNode {
    id: String,
    bindings: Vec<Binding>,
    model: StoredModel,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StoredModel {
    Gp(TrainedGP),
    Mixture(GpMixture),
}

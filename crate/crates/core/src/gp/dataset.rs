use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name and unit of one input or output column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

/// Training data for a single-response surrogate.
///
/// Inputs are stored row-major, `n` rows of `dim` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    columns: Vec<Column>,
    response: Column,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let columns = (0..dim).map(|i| Column::new(format!("x{i}"), "")).collect();
        Self::from_rows(rows, outputs, columns, Column::new("y", ""))
    }

    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        outputs: Vec<f64>,
        columns: Vec<Column>,
        response: Column,
    ) -> Result<Self> {
        let dim = columns.len();
        let mut inputs = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::input(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            inputs.extend_from_slice(row);
        }
        Self::from_flat(dim, inputs, outputs, columns, response)
    }

    pub(crate) fn from_flat(
        dim: usize,
        inputs: Vec<f64>,
        outputs: Vec<f64>,
        columns: Vec<Column>,
        response: Column,
    ) -> Result<Self> {
        let ds = Dataset {
            dim,
            inputs,
            outputs,
            columns,
            response,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::input("dataset needs at least one input column"));
        }
        if self.columns.len() != self.dim {
            return Err(Error::input(
                "column metadata does not match input dimension",
            ));
        }
        if self.outputs.is_empty() {
            return Err(Error::input("dataset is empty"));
        }
        if self.inputs.len() != self.outputs.len() * self.dim {
            return Err(Error::input(format!(
                "{} input values for {} outputs of dimension {}",
                self.inputs.len(),
                self.outputs.len(),
                self.dim
            )));
        }
        if let Some(i) = self.inputs.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite input at row {}, column {}",
                i / self.dim,
                i % self.dim
            )));
        }
        if let Some(i) = self.outputs.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite output at row {i}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.inputs.chunks_exact(self.dim)
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn response(&self) -> &Column {
        &self.response
    }

    pub(crate) fn flat_inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// Keeps only the rows selected by `keep`.
    pub fn subset(&self, keep: &[usize]) -> Result<Dataset> {
        let mut inputs = Vec::with_capacity(keep.len() * self.dim);
        let mut outputs = Vec::with_capacity(keep.len());
        for &i in keep {
            if i >= self.len() {
                return Err(Error::input(format!("row {i} out of range")));
            }
            inputs.extend_from_slice(self.row(i));
            outputs.push(self.outputs[i]);
        }
        Dataset::from_flat(
            self.dim,
            inputs,
            outputs,
            self.columns.clone(),
            self.response.clone(),
        )
    }
}

/// Per-column affine map `x -> (x - lo) / span`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    lo: Vec<f64>,
    span: Vec<f64>,
}

impl Standardization {
    pub fn identity(dim: usize) -> Self {
        Standardization {
            lo: vec![0.0; dim],
            span: vec![1.0; dim],
        }
    }

    /// Maps the observed range of every column onto [0, 1]. Constant columns
    /// are shifted to zero and left unscaled.
    pub fn unit_range(ds: &Dataset) -> Self {
        let dim = ds.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for row in ds.rows() {
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let span = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if h > l { h - l } else { 1.0 })
            .collect();
        Standardization { lo, span }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, v), (l, s)) in out.iter_mut().zip(x).zip(self.lo.iter().zip(&self.span)) {
            *o = (v - l) / s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.lo.len() != self.span.len() {
            return Err(Error::input("standardization vectors differ in length"));
        }
        if self.lo.iter().chain(&self.span).any(|v| !v.is_finite())
            || self.span.iter().any(|s| *s <= 0.0)
        {
            return Err(Error::input(
                "standardization must be finite with positive spans",
            ));
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::{sweep, CdspProblem, DesignEvaluation};
use crate::error::{Error, Result};

/// Which constraint defines the admissible design space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdspMode {
    /// `EMI >= EMI_target`.
    Robust,
    /// `alpha_hat >= alpha_target`.
    Reliability,
}

impl CdspMode {
    pub fn name(self) -> &'static str {
        match self {
            CdspMode::Robust => "robust",
            CdspMode::Reliability => "reliability",
        }
    }

    fn flag(self, e: &DesignEvaluation) -> bool {
        match self {
            CdspMode::Robust => e.admissible_robust,
            CdspMode::Reliability => e.admissible_reliable,
        }
    }
}

impl std::str::FromStr for CdspMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robust" => Ok(CdspMode::Robust),
            "reliability" => Ok(CdspMode::Reliability),
            other => Err(Error::input(format!("unknown mode `{other}`"))),
        }
    }
}

/// Maximal runs `(first, last)` of grid indices whose `mode` flag is set.
pub fn admissible_set(sweep: &[DesignEvaluation], mode: CdspMode) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (k, e) in sweep.iter().enumerate() {
        match (mode.flag(e), start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, sweep.len() - 1));
    }
    runs
}

/// The chosen design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Optimum {
    pub index: usize,
    pub design_value: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    /// Empirical reliability at the optimum.
    pub alpha_achieved: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdspSolution {
    pub mode: CdspMode,
    /// `None` when the admissible set is empty.
    pub optimum: Option<Optimum>,
    pub admissible: Vec<(usize, usize)>,
    pub sweep: Vec<DesignEvaluation>,
}

impl CdspSolution {
    pub fn feasible(&self) -> bool {
        self.optimum.is_some()
    }
}

/// Sweeps `problem` and picks the optimum for `mode`.
pub fn solve(problem: &CdspProblem, mode: CdspMode) -> Result<CdspSolution> {
    Ok(solve_sweep(sweep(problem)?, mode))
}

/// Picks, among admissible points, the least underachievement, then the
/// least overachievement, then the lowest design value.
pub fn solve_sweep(sweep: Vec<DesignEvaluation>, mode: CdspMode) -> CdspSolution {
    let admissible = admissible_set(&sweep, mode);
    let optimum = admissible
        .iter()
        .flat_map(|&(a, b)| a..=b)
        .min_by(|&i, &j| {
            let (x, y) = (&sweep[i], &sweep[j]);
            x.d_minus
                .total_cmp(&y.d_minus)
                .then(x.d_plus.total_cmp(&y.d_plus))
                .then(x.design_value.total_cmp(&y.design_value))
        })
        .map(|i| {
            let e = &sweep[i];
            Optimum {
                index: i,
                design_value: e.design_value,
                d_minus: e.d_minus,
                d_plus: e.d_plus,
                alpha_achieved: e.alpha_hat,
            }
        });
    CdspSolution {
        mode,
        optimum,
        admissible,
        sweep,
    }
}

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::io::{csv_text, fmt_f64, fmt_opt};
use crate::network::{
    propagate_at, Design, Mode, OutputDistribution, SubsystemNetwork, UncertaintySpec,
};

/// Total spread below which EMI is not computed.
pub const DEGENERATE_SPREAD: f64 = 1e-12;

/// How the two spread components combine in the EMI denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spread {
    /// `sigma_pr + sigma_pa`
    #[default]
    Additive,
    /// `sqrt(sigma_pr^2 + sigma_pa^2)`
    RootSumSquare,
}

impl Spread {
    pub fn combine(self, sigma_pr: f64, sigma_pa: f64) -> f64 {
        match self {
            Spread::Additive => sigma_pr + sigma_pa,
            Spread::RootSumSquare => sigma_pr.hypot(sigma_pa),
        }
    }
}

/// Error margin index `(f_hat - y_target) / (sigma_pr + sigma_pa)`.
pub fn emi(f_hat: f64, y_target: f64, sigma_pr: f64, sigma_pa: f64) -> Result<f64> {
    emi_with(Spread::Additive, f_hat, y_target, sigma_pr, sigma_pa)
}

fn emi_with(
    spread: Spread,
    f_hat: f64,
    y_target: f64,
    sigma_pr: f64,
    sigma_pa: f64,
) -> Result<f64> {
    let s = spread.combine(sigma_pr, sigma_pa);
    if s.is_nan() || s < DEGENERATE_SPREAD {
        return Err(Error::DegenerateSpread { spread: s });
    }
    Ok((f_hat - y_target) / s)
}

/// Under- and overachievement `(d_minus, d_plus)` of `EMI / EMI_target = 1`.
pub fn deviation(emi: f64, emi_target: f64) -> (f64, f64) {
    let r = emi / emi_target;
    ((1.0 - r).max(0.0), (r - 1.0).max(0.0))
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Standard normal quantile.
pub fn phi_inv(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

pub fn alpha_from_emi_target(emi_target: f64) -> Result<f64> {
    if !emi_target.is_finite() {
        return Err(Error::input(format!(
            "emi_target must be finite, got {emi_target}"
        )));
    }
    Ok(phi(emi_target))
}

pub fn emi_target_from_alpha(alpha_target: f64) -> Result<f64> {
    if !(alpha_target > 0.0 && alpha_target < 1.0) {
        return Err(Error::input(format!(
            "alpha_target must lie in (0, 1), got {alpha_target}"
        )));
    }
    Ok(phi_inv(alpha_target))
}

/// The swept design variable and its grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignVariable {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub grid_points: usize,
}

impl DesignVariable {
    pub fn new(name: &str, lo: f64, hi: f64, grid_points: usize) -> Self {
        DesignVariable {
            name: name.to_string(),
            lo,
            hi,
            grid_points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::input(format!(
                "design bounds must be finite with lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::input("design grid needs at least 2 points"));
        }
        Ok(())
    }

    /// Uniform grid including both endpoints exactly.
    pub fn grid(&self) -> Vec<f64> {
        let g = self.grid_points;
        (0..g)
            .map(|k| {
                if k == g - 1 {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / (g - 1) as f64
                }
            })
            .collect()
    }
}

/// Requirement and target levels of one decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    /// Lower requirement limit on the output.
    pub y_target: f64,
    pub emi_target: f64,
    pub alpha_target: f64,
}

/// Largest accepted gap between `alpha_target` and `phi(emi_target)`.
const TARGET_CONSISTENCY: f64 = 1e-6;

impl Targets {
    /// Targets with `emi_target = phi_inv(alpha_target)`.
    pub fn from_alpha(y_target: f64, alpha_target: f64) -> Result<Self> {
        let t = Targets {
            y_target,
            emi_target: emi_target_from_alpha(alpha_target)?,
            alpha_target,
        };
        t.validate()?;
        Ok(t)
    }

    /// Targets with `alpha_target = phi(emi_target)`.
    pub fn from_emi(y_target: f64, emi_target: f64) -> Result<Self> {
        let t = Targets {
            y_target,
            emi_target,
            alpha_target: alpha_from_emi_target(emi_target)?,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.y_target.is_finite() {
            return Err(Error::input("y_target must be finite"));
        }
        if !(self.emi_target.is_finite() && self.emi_target > 0.0) {
            return Err(Error::input(format!(
                "emi_target must be positive, got {}",
                self.emi_target
            )));
        }
        emi_target_from_alpha(self.alpha_target)?;
        let gap = (phi(self.emi_target) - self.alpha_target).abs();
        if gap > TARGET_CONSISTENCY {
            return Err(Error::input(format!(
                "alpha_target {} and emi_target {} disagree: phi(emi_target) = {}",
                self.alpha_target,
                self.emi_target,
                phi(self.emi_target)
            )));
        }
        Ok(())
    }
}

/// A single-variable compromise problem over a network.
#[derive(Clone, Debug)]
pub struct CdspProblem {
    pub network: Arc<SubsystemNetwork>,
    pub uncertainty: UncertaintySpec,
    pub design_variable: DesignVariable,
    /// Nominal values of every other external variable.
    pub fixed: Design,
    pub targets: Targets,
    pub mc_samples: usize,
    pub seed: u64,
    pub spread: Spread,
}

impl CdspProblem {
    pub fn validate(&self) -> Result<()> {
        self.design_variable.validate()?;
        self.targets.validate()?;
        self.uncertainty.validate()?;
        if self.fixed.contains_key(&self.design_variable.name) {
            return Err(Error::input(format!(
                "`{}` is both swept and fixed",
                self.design_variable.name
            )));
        }
        Ok(())
    }

    fn design_at(&self, value: f64) -> Design {
        let mut d = self.fixed.clone();
        d.insert(self.design_variable.name.clone(), value);
        d
    }

    /// Full-mode propagation at `value`. Random streams are keyed by the bit
    /// pattern of `value`, so a point gives the same distribution whether it
    /// is evaluated alone or inside a sweep.
    pub fn propagate(&self, value: f64) -> Result<OutputDistribution> {
        propagate_at(
            &self.network,
            &self.design_at(value),
            &self.uncertainty,
            Mode::Full,
            self.mc_samples,
            self.seed,
            value.to_bits(),
        )
    }
}

/// Everything the two solvers need at one design point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignEvaluation {
    pub design_value: f64,
    pub f_hat: f64,
    pub sigma_pr: f64,
    pub sigma_pa: f64,
    pub std_total: f64,
    /// `±inf` when the spread is degenerate.
    pub emi: f64,
    pub phi_emi: f64,
    pub alpha_hat: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    /// Spread below [`DEGENERATE_SPREAD`]; never robust-admissible.
    pub degenerate: bool,
    /// `EMI > 1`.
    pub emi_floor: bool,
    pub admissible_robust: bool,
    pub admissible_reliable: bool,
    pub skewness: Option<f64>,
    pub ex_kurtosis: Option<f64>,
}

impl DesignEvaluation {
    /// Robust flag as implied by the stored EMI values.
    pub fn robust_flag(emi: f64, emi_target: f64, degenerate: bool) -> bool {
        !degenerate && emi >= emi_target && (emi_target < 1.0 || emi > 1.0)
    }
}

/// Applies `targets` to a propagated distribution.
pub fn assess(
    design_value: f64,
    dist: &OutputDistribution,
    targets: &Targets,
    spread: Spread,
) -> DesignEvaluation {
    let (emi, degenerate) = match emi_with(
        spread,
        dist.mean,
        targets.y_target,
        dist.std_pr,
        dist.std_pa,
    ) {
        Ok(e) => (e, false),
        Err(_) if dist.mean > targets.y_target => (f64::INFINITY, true),
        Err(_) => (f64::NEG_INFINITY, true),
    };
    let (d_minus, d_plus) = deviation(emi, targets.emi_target);
    let alpha_hat = dist.reliability(targets.y_target);
    DesignEvaluation {
        design_value,
        f_hat: dist.mean,
        sigma_pr: dist.std_pr,
        sigma_pa: dist.std_pa,
        std_total: dist.std_total,
        emi,
        phi_emi: phi(emi),
        alpha_hat,
        d_minus,
        d_plus,
        degenerate,
        emi_floor: emi > 1.0,
        admissible_robust: DesignEvaluation::robust_flag(emi, targets.emi_target, degenerate),
        admissible_reliable: alpha_hat >= targets.alpha_target,
        skewness: dist.skewness,
        ex_kurtosis: dist.ex_kurtosis,
    }
}

/// Propagates at `design_value` and applies the problem's targets.
pub fn evaluate_design(problem: &CdspProblem, design_value: f64) -> Result<DesignEvaluation> {
    problem.validate()?;
    let dv = &problem.design_variable;
    if !(design_value >= dv.lo && design_value <= dv.hi) {
        return Err(Error::input(format!(
            "design value {design_value} outside [{}, {}]",
            dv.lo, dv.hi
        )));
    }
    let dist = problem.propagate(design_value)?;
    Ok(assess(
        design_value,
        &dist,
        &problem.targets,
        problem.spread,
    ))
}

/// Evaluates every grid point, ordered by design value.
pub fn sweep(problem: &CdspProblem) -> Result<Vec<DesignEvaluation>> {
    let dists = propagate_grid(problem)?;
    Ok(assess_grid(problem, &dists))
}

/// Output distributions at every grid point. They do not depend on the
/// targets, so one grid can serve several decisions via [`assess_grid`].
pub fn propagate_grid(problem: &CdspProblem) -> Result<Vec<OutputDistribution>> {
    problem.validate()?;
    let grid = problem.design_variable.grid();
    let results: Vec<Result<OutputDistribution>> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            problem.propagate(v).map_err(|e| Error::GridPoint {
                index: k,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Applies the problem's targets to distributions from [`propagate_grid`].
pub fn assess_grid(problem: &CdspProblem, dists: &[OutputDistribution]) -> Vec<DesignEvaluation> {
    problem
        .design_variable
        .grid()
        .into_iter()
        .zip(dists)
        .map(|(v, d)| assess(v, d, &problem.targets, problem.spread))
        .collect()
}

/// Column order of the sweep CSV.
pub const SWEEP_COLUMNS: [&str; 13] = [
    "design_value",
    "f_hat",
    "sigma_pr",
    "sigma_pa",
    "emi",
    "phi_emi",
    "alpha_hat",
    "d_minus",
    "d_plus",
    "admissible_robust",
    "admissible_reliable",
    "skewness",
    "ex_kurtosis",
];

pub fn sweep_csv(sweep: &[DesignEvaluation]) -> Result<String> {
    csv_text(
        &SWEEP_COLUMNS,
        sweep.iter().map(|e| {
            vec![
                fmt_f64(e.design_value),
                fmt_f64(e.f_hat),
                fmt_f64(e.sigma_pr),
                fmt_f64(e.sigma_pa),
                fmt_f64(e.emi),
                fmt_f64(e.phi_emi),
                fmt_f64(e.alpha_hat),
                fmt_f64(e.d_minus),
                fmt_f64(e.d_plus),
                e.admissible_robust.to_string(),
                e.admissible_reliable.to_string(),
                fmt_opt(e.skewness),
                fmt_opt(e.ex_kurtosis),
            ]
        }),
    )
}

//! Compromise decision support on a swept design variable.
//!
//! Both solvers share one Monte Carlo sweep. At each grid point the output
//! distribution yields the error margin index
//! `EMI = (f_hat - y_target) / (sigma_pr + sigma_pa)` and the empirical
//! reliability `P(y >= y_target)`. The robust solver admits points with
//! `EMI >= EMI_target`; the reliability solver admits points with
//! `alpha_hat >= alpha_target`. Either one then minimizes the
//! underachievement of the goal `EMI / EMI_target = 1`.

mod problem;
mod solve;

pub use problem::{
    alpha_from_emi_target, assess, assess_grid, deviation, emi, emi_target_from_alpha,
    evaluate_design, phi, phi_inv, propagate_grid, sweep, sweep_csv, CdspProblem, DesignEvaluation,
    DesignVariable, Spread, Targets, DEGENERATE_SPREAD, SWEEP_COLUMNS,
};
pub use solve::{admissible_set, solve, solve_sweep, CdspMode, CdspSolution, Optimum};

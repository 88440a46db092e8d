//! The four training-data cases, the experiment matrix and the histogram
//! study, reproducible from one master seed.
//!
//! Seeds fan out as `mix(master, "case", letter)` for network training and
//! `mix(master, "sweep", letter)` for propagation (see [`crate::rng::mix`]).
//! All rows of a case share one propagated grid; rows differ only in the
//! targets applied to it.

mod case;
mod experiment;

pub use case::{
    build_case, case_seed, BuildSettings, CaseConfig, CaseId, CaseNetwork, TEMPERATURE, YIELD_NODE,
};
pub use experiment::{
    default_matrix, matrix_csv, normality_screen, render_table, run_on_network, sweep_seed,
    ExperimentRecord, ExperimentSpec, Harness, HistogramReport, ReliableOutcome, RobustOutcome,
    RunSettings, MATRIX_COLUMNS,
};

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::case::{build_case, BuildSettings, CaseConfig, CaseId, CaseNetwork, TEMPERATURE};
use crate::cdsp::{
    assess_grid, emi_target_from_alpha, propagate_grid, solve_sweep, CdspMode, CdspProblem,
    CdspSolution, DesignVariable, Spread, Targets,
};
use crate::error::{Error, Result};
use crate::io::{csv_text, fmt_f64, fmt_opt};
use crate::network::{
    histogram, propagate, Design, HistogramBin, Mode, OutputDistribution, SubsystemNetwork,
    UncertaintySpec,
};
use crate::rng::{label, mix};

/// Settings shared by every row of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub build: BuildSettings,
    pub mc_samples: usize,
    pub grid_points: usize,
    /// Standard deviation of temperature, °F.
    pub sigma_pa: f64,
    pub spread: Spread,
    /// Train case D on exactly 5 rows per node instead of 5 per dimension.
    pub sparse_literal: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            build: BuildSettings::default(),
            mc_samples: 10_000,
            grid_points: 101,
            sigma_pa: 5.0,
            spread: Spread::Additive,
            sparse_literal: false,
        }
    }
}

impl RunSettings {
    pub fn case_config(&self, case_id: CaseId, master_seed: u64) -> CaseConfig {
        let mut c = CaseConfig::standard(case_id, master_seed);
        if self.sparse_literal && case_id == CaseId::D {
            c.fixed_rows = Some(5);
        }
        c
    }

    /// Normal temperature scatter of `sigma_pa`.
    pub fn uncertainty(&self) -> UncertaintySpec {
        UncertaintySpec::new().normal(TEMPERATURE, self.sigma_pa)
    }

    /// A temperature-sweep problem over the build window.
    pub fn problem(
        &self,
        network: Arc<SubsystemNetwork>,
        targets: Targets,
        seed: u64,
    ) -> CdspProblem {
        let (lo, hi) = self.build.window;
        CdspProblem {
            network,
            uncertainty: self.uncertainty(),
            design_variable: DesignVariable::new(TEMPERATURE, lo, hi, self.grid_points),
            fixed: Design::new(),
            targets,
            mc_samples: self.mc_samples,
            seed,
            spread: self.spread,
        }
    }
}

/// `hash(master, "sweep", case)`.
pub fn sweep_seed(master_seed: u64, case_id: CaseId) -> u64 {
    mix(&[master_seed, label("sweep"), case_id.letter() as u64])
}

/// One row of the experiment matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub exp_id: usize,
    pub case: CaseConfig,
    /// Lower requirement limit, MPa.
    pub lrl: f64,
    pub alpha_target: f64,
    pub emi_target: f64,
    /// Propagation seed.
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(
        exp_id: usize,
        case: CaseConfig,
        lrl: f64,
        alpha_target: f64,
        seed: u64,
    ) -> Result<Self> {
        Ok(ExperimentSpec {
            exp_id,
            case,
            lrl,
            alpha_target,
            emi_target: emi_target_from_alpha(alpha_target)?,
            seed,
        })
    }

    pub fn targets(&self) -> Result<Targets> {
        let t = Targets {
            y_target: self.lrl,
            emi_target: self.emi_target,
            alpha_target: self.alpha_target,
        };
        t.validate()?;
        Ok(t)
    }
}

/// The 36 rows: per case, target reliability outer and LRL inner.
pub fn default_matrix(master_seed: u64, settings: &RunSettings) -> Vec<ExperimentSpec> {
    let mut specs = Vec::with_capacity(36);
    for case_id in CaseId::ALL {
        let (lrls, alphas): (&[f64], &[f64]) = match case_id {
            CaseId::A | CaseId::B => (&[200.0, 270.0, 280.0], &[0.99, 0.95, 0.90]),
            CaseId::C | CaseId::D => (&[150.0, 180.0, 200.0], &[0.99, 0.90, 0.85]),
        };
        let case = settings.case_config(case_id, master_seed);
        for &alpha in alphas {
            for &lrl in lrls {
                let id = specs.len() + 1;
                specs.push(
                    ExperimentSpec::new(id, case, lrl, alpha, sweep_seed(master_seed, case_id))
                        .expect("matrix targets are in (0, 1)"),
                );
            }
        }
    }
    specs
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustOutcome {
    pub d_minus: f64,
    pub d_plus: f64,
    pub alpha_achieved: f64,
    /// °F
    pub t_opt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliableOutcome {
    pub d_minus: f64,
    pub d_plus: f64,
    /// °F
    pub t_opt: f64,
}

/// Result of one row; outcomes are `None` when the admissible set is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub spec: ExperimentSpec,
    pub robust: Option<RobustOutcome>,
    pub reliable: Option<ReliableOutcome>,
    /// Set when the row could not be evaluated.
    pub error: Option<String>,
}

impl ExperimentRecord {
    fn from_solutions(
        spec: ExperimentSpec,
        robust: &CdspSolution,
        reliable: &CdspSolution,
    ) -> Self {
        ExperimentRecord {
            spec,
            robust: robust.optimum.map(|o| RobustOutcome {
                d_minus: o.d_minus,
                d_plus: o.d_plus,
                alpha_achieved: o.alpha_achieved,
                t_opt: o.design_value,
            }),
            reliable: reliable.optimum.map(|o| ReliableOutcome {
                d_minus: o.d_minus,
                d_plus: o.d_plus,
                t_opt: o.design_value,
            }),
            error: None,
        }
    }

    fn failed(spec: ExperimentSpec, e: &Error) -> Self {
        ExperimentRecord {
            spec,
            robust: None,
            reliable: None,
            error: Some(e.to_string()),
        }
    }
}

/// Runs one spec on an arbitrary network with temperature as the only
/// external variable, solving both modes on a shared sweep.
pub fn run_on_network(
    network: Arc<SubsystemNetwork>,
    spec: &ExperimentSpec,
    settings: &RunSettings,
) -> Result<(ExperimentRecord, CdspSolution, CdspSolution)> {
    let problem = settings.problem(network, spec.targets()?, spec.seed);
    let dists = propagate_grid(&problem)?;
    Ok(decide(spec, &problem, &dists))
}

fn decide(
    spec: &ExperimentSpec,
    problem: &CdspProblem,
    dists: &[OutputDistribution],
) -> (ExperimentRecord, CdspSolution, CdspSolution) {
    let evals = assess_grid(problem, dists);
    let robust = solve_sweep(evals.clone(), CdspMode::Robust);
    let reliable = solve_sweep(evals, CdspMode::Reliability);
    let record = ExperimentRecord::from_solutions(*spec, &robust, &reliable);
    (record, robust, reliable)
}

type SweepKey = (CaseConfig, u64);

/// Case networks and propagated grids, built on first use and cached.
pub struct Harness {
    settings: RunSettings,
    master_seed: u64,
    networks: Mutex<HashMap<CaseConfig, Arc<CaseNetwork>>>,
    grids: Mutex<HashMap<SweepKey, Arc<Vec<OutputDistribution>>>>,
    builds: AtomicUsize,
    propagations: AtomicUsize,
}

impl Harness {
    pub fn new(settings: RunSettings, master_seed: u64) -> Self {
        Harness {
            settings,
            master_seed,
            networks: Mutex::new(HashMap::new()),
            grids: Mutex::new(HashMap::new()),
            builds: AtomicUsize::new(0),
            propagations: AtomicUsize::new(0),
        }
    }

    pub fn settings(&self) -> &RunSettings {
        &self.settings
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn case_config(&self, case_id: CaseId) -> CaseConfig {
        self.settings.case_config(case_id, self.master_seed)
    }

    /// Number of networks trained so far.
    pub fn build_count(&self) -> usize {
        self.builds.load(Ordering::SeqCst)
    }

    /// Number of grid propagations run so far.
    pub fn propagation_count(&self) -> usize {
        self.propagations.load(Ordering::SeqCst)
    }

    /// Uses `network` for `config` instead of training one.
    pub fn insert_network(&self, network: CaseNetwork) {
        self.networks
            .lock()
            .unwrap()
            .insert(network.config, Arc::new(network));
    }

    pub fn network(&self, config: &CaseConfig) -> Result<Arc<CaseNetwork>> {
        let mut cache = self.networks.lock().unwrap();
        if let Some(n) = cache.get(config) {
            return Ok(n.clone());
        }
        let built = Arc::new(build_case(config, &self.settings.build)?);
        self.builds.fetch_add(1, Ordering::SeqCst);
        cache.insert(*config, built.clone());
        Ok(built)
    }

    fn grid(&self, spec: &ExperimentSpec) -> Result<(CdspProblem, Arc<Vec<OutputDistribution>>)> {
        let net = self.network(&spec.case)?;
        let problem = self
            .settings
            .problem(net.network.clone(), spec.targets()?, spec.seed);
        let key = (spec.case, spec.seed);
        if let Some(g) = self.grids.lock().unwrap().get(&key) {
            return Ok((problem, g.clone()));
        }
        let dists = Arc::new(propagate_grid(&problem)?);
        self.propagations.fetch_add(1, Ordering::SeqCst);
        self.grids.lock().unwrap().insert(key, dists.clone());
        Ok((problem, dists))
    }

    /// Solves both modes for one row.
    pub fn run_experiment(&self, spec: &ExperimentSpec) -> Result<ExperimentRecord> {
        self.solve_experiment(spec).map(|(r, _, _)| r)
    }

    /// Like [`Harness::run_experiment`], also returning both solutions with
    /// their sweeps.
    pub fn solve_experiment(
        &self,
        spec: &ExperimentSpec,
    ) -> Result<(ExperimentRecord, CdspSolution, CdspSolution)> {
        let (problem, dists) = self.grid(spec)?;
        Ok(decide(spec, &problem, &dists))
    }

    /// Runs every spec in order. Networks and grids are prepared case by
    /// case first; the rows themselves then run concurrently. A failing row
    /// is recorded with its error and the rest continue.
    pub fn run_matrix(&self, specs: &[ExperimentSpec]) -> Result<Vec<ExperimentRecord>> {
        if specs.is_empty() {
            return Err(Error::input("experiment list is empty"));
        }
        let mut prepared: BTreeMap<usize, Error> = BTreeMap::new();
        let mut seen: Vec<SweepKey> = Vec::new();
        for (i, s) in specs.iter().enumerate() {
            let key = (s.case, s.seed);
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            if let Err(e) = self.grid(s) {
                prepared.insert(i, e);
            }
        }
        Ok(specs
            .par_iter()
            .enumerate()
            .map(|(i, s)| match prepared.get(&i) {
                Some(e) => ExperimentRecord::failed(*s, e),
                None => self
                    .run_experiment(s)
                    .unwrap_or_else(|e| ExperimentRecord::failed(*s, &e)),
            })
            .collect())
    }

    /// Full-mode propagation of `case` at one temperature, with its
    /// normalized histogram.
    pub fn histogram(
        &self,
        case_id: CaseId,
        temperature: f64,
        samples: usize,
        bins: usize,
    ) -> Result<HistogramReport> {
        let config = self.case_config(case_id);
        let net = self.network(&config)?;
        let design = Design::from([(TEMPERATURE.to_string(), temperature)]);
        let dist = propagate(
            &net.network,
            &design,
            &self.settings.uncertainty(),
            Mode::Full,
            samples,
            mix(&[
                self.master_seed,
                label("histogram"),
                case_id.letter() as u64,
            ]),
        )?;
        let bins = histogram(&dist.samples, bins)?;
        Ok(HistogramReport {
            case_id,
            temperature,
            distribution: dist,
            bins,
        })
    }
}

/// Output distribution of one case at one temperature.
#[derive(Clone, Debug)]
pub struct HistogramReport {
    pub case_id: CaseId,
    pub temperature: f64,
    pub distribution: OutputDistribution,
    pub bins: Vec<HistogramBin>,
}

impl HistogramReport {
    pub fn passes_normality_screen(&self) -> bool {
        normality_screen(self.distribution.skewness, self.distribution.ex_kurtosis)
    }
}

/// Near-normal when `|skewness| < 0.5` and `|excess kurtosis| < 1`.
/// Undefined moments fail the screen.
pub fn normality_screen(skewness: Option<f64>, ex_kurtosis: Option<f64>) -> bool {
    match (skewness, ex_kurtosis) {
        (Some(g), Some(k)) => g.abs() < 0.5 && k.abs() < 1.0,
        _ => false,
    }
}

/// Column order of the matrix CSV.
pub const MATRIX_COLUMNS: [&str; 14] = [
    "exp_id",
    "case",
    "lrl_mpa",
    "alpha_target",
    "emi_target",
    "rc_d_minus",
    "rc_d_plus",
    "rc_alpha_achieved",
    "rc_t_opt_f",
    "rel_d_minus",
    "rel_d_plus",
    "rel_t_opt_f",
    "rc_feasible",
    "rel_feasible",
];

pub fn matrix_csv(records: &[ExperimentRecord]) -> Result<String> {
    csv_text(
        &MATRIX_COLUMNS,
        records.iter().map(|r| {
            let rc = r.robust;
            let rel = r.reliable;
            vec![
                r.spec.exp_id.to_string(),
                r.spec.case.case_id.to_string(),
                fmt_f64(r.spec.lrl),
                fmt_f64(r.spec.alpha_target),
                fmt_f64(r.spec.emi_target),
                fmt_opt(rc.map(|o| o.d_minus)),
                fmt_opt(rc.map(|o| o.d_plus)),
                fmt_opt(rc.map(|o| o.alpha_achieved)),
                fmt_opt(rc.map(|o| o.t_opt)),
                fmt_opt(rel.map(|o| o.d_minus)),
                fmt_opt(rel.map(|o| o.d_plus)),
                fmt_opt(rel.map(|o| o.t_opt)),
                rc.is_some().to_string(),
                rel.is_some().to_string(),
            ]
        }),
    )
}

/// Plain-text table of the matrix: one line per row, `NA` for empty
/// admissible sets.
pub fn render_table(records: &[ExperimentRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>3} {:>4} {:>5} {:>5} {:>6} | {:>9} {:>9} {:>6} {:>6} | {:>9} {:>9} {:>6}\n",
        "#", "case", "LRL", "a_T", "EMI_T", "rc d-", "rc d+", "a_A", "T_O", "Rc d-", "Rc d+", "T_O"
    ));
    out.push_str(&"-".repeat(98));
    out.push('\n');
    let num = |v: Option<f64>, prec: usize| v.map_or("NA".to_string(), |x| format!("{x:.prec$}"));
    for r in records {
        let s = &r.spec;
        out.push_str(&format!(
            "{:>3} {:>4} {:>5} {:>5.2} {:>6.3} | {:>9} {:>9} {:>6} {:>6} | {:>9} {:>9} {:>6}",
            s.exp_id,
            s.case.case_id.to_string(),
            s.lrl,
            s.alpha_target,
            s.emi_target,
            num(r.robust.map(|o| o.d_minus), 4),
            num(r.robust.map(|o| o.d_plus), 4),
            num(r.robust.map(|o| o.alpha_achieved), 3),
            num(r.robust.map(|o| o.t_opt), 0),
            num(r.reliable.map(|o| o.d_minus), 4),
            num(r.reliable.map(|o| o.d_plus), 4),
            num(r.reliable.map(|o| o.t_opt), 0),
        ));
        if let Some(e) = &r.error {
            out.push_str(&format!("  error: {e}"));
        }
        out.push('\n');
    }
    out
}

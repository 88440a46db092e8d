//! `rcdsp`: train case networks, propagate uncertainty, solve the robust and
//! reliability-based design problems, and run the experiment matrix.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use rcdsp::cdsp::{sweep_csv, CdspSolution, Targets};
use rcdsp::harness::{
    default_matrix, matrix_csv, render_table, sweep_seed, CaseId, ExperimentRecord, Harness,
};
use rcdsp::io::{fmt_f64, fmt_opt, parse_config, Manifest, RunConfig, SolveMode};
use rcdsp::network::{
    histogram, histogram_csv, propagate, samples_csv, Design, Mode, OutputDistribution,
    SubsystemNetwork,
};
use rcdsp::rng::{label, mix};

#[derive(Parser, Debug)]
#[command(
    name = "rcdsp",
    version,
    about = "Robust and reliability-based compromise design"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train case networks and save them as JSON model files.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Case letter; all four when omitted.
        #[arg(long)]
        case: Option<CaseId>,
    },
    /// Propagate temperature scatter through one network at one temperature.
    Propagate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        case: Option<CaseId>,
        /// Temperature in °F; defaults to `cdsp.design_point`.
        #[arg(long)]
        at: Option<f64>,
    },
    /// Sweep the design window and solve the configured problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        case: Option<CaseId>,
        /// robust, reliability or both; defaults to `cdsp.mode`.
        #[arg(long)]
        mode: Option<SolveMode>,
    },
    /// Run the 36-row experiment matrix.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Inclusive 1-based row range, e.g. `1-9`, or a single row.
        #[arg(long)]
        rows: Option<RowRange>,
    },
    /// Run the matrix and write the comparison table, per-row sweeps and
    /// per-case histograms.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print a configuration with every key at its default.
    EmitConfig {
        /// Master seed written into the configuration.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct RowRange {
    first: usize,
    last: usize,
}

impl std::str::FromStr for RowRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{t}` is not a row number"))
        };
        let (first, last) = match s.split_once('-') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let r = parse(s)?;
                (r, r)
            }
        };
        if first == 0 || last < first {
            return Err(format!("`{s}` is not a range of rows counted from 1"));
        }
        Ok(RowRange { first, last })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let invocation = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match run(cli.command, &invocation) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, invocation: &str) -> anyhow::Result<()> {
    match command {
        Command::EmitConfig { seed, out } => {
            let text = RunConfig::with_seed(seed).emit();
            match out {
                Some(p) => rcdsp::io::write_atomic(&p, text.as_bytes())
                    .with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Fit { config, case } => {
            let cfg = load(&config)?;
            let harness = harness(&cfg);
            let mut m = manifest(&cfg, invocation)?;
            let cases = case.map_or(CaseId::ALL.to_vec(), |c| vec![c]);
            for c in cases {
                let net = harness.network(&harness.case_config(c))?;
                m.write(
                    &format!("networks/case_{c}.json"),
                    net.network.to_json()?.as_bytes(),
                )?;
                eprintln!("case {c}: trained {} nodes", net.training_rows.len());
            }
            m.write(
                "networks/provenance.csv",
                rcdsp::process::provenance_csv()?.as_bytes(),
            )?;
            m.flush()?;
            Ok(())
        }
        Command::Propagate { config, case, at } => {
            let cfg = load(&config)?;
            let case = case.unwrap_or(cfg.cdsp.case);
            let at = at.unwrap_or(cfg.cdsp.design_point);
            if !at.is_finite() {
                bail!("--at must be finite");
            }
            let harness = harness(&cfg);
            let network = network(&cfg, &harness, case)?;
            let design = Design::from([(rcdsp::harness::TEMPERATURE.to_string(), at)]);
            let seed = mix(&[
                cfg.experiment.master_seed,
                label("propagate"),
                case.letter() as u64,
            ]);
            let dist = propagate(
                &network,
                &design,
                &harness.settings().uncertainty(),
                Mode::Full,
                cfg.uncertainty.mc_samples,
                seed,
            )?;
            let bins = histogram(&dist.samples, cfg.experiment.histogram_bins)?;
            let stem = format!("propagate/case_{case}_{}", fmt_f64(at));
            let mut m = manifest(&cfg, invocation)?;
            m.write(
                &format!("{stem}_samples.csv"),
                samples_csv(&dist.samples)?.as_bytes(),
            )?;
            m.write(
                &format!("{stem}_histogram.csv"),
                histogram_csv(&bins)?.as_bytes(),
            )?;
            let summary = distribution_summary(case, at, &dist, cfg.cdsp.y_target);
            m.write(&format!("{stem}_summary.txt"), summary.as_bytes())?;
            m.flush()?;
            print!("{summary}");
            Ok(())
        }
        Command::Solve { config, case, mode } => {
            let cfg = load(&config)?;
            let case = case.unwrap_or(cfg.cdsp.case);
            let mode = mode.unwrap_or(cfg.cdsp.mode);
            let harness = harness(&cfg);
            let network = network(&cfg, &harness, case)?;
            let problem = harness.settings().problem(
                network,
                cfg.targets(),
                sweep_seed(cfg.experiment.master_seed, case),
            );
            let sweep = rcdsp::cdsp::sweep(&problem)?;
            let mut m = manifest(&cfg, invocation)?;
            m.write(
                &format!("solve/case_{case}_sweep.csv"),
                sweep_csv(&sweep)?.as_bytes(),
            )?;
            for md in mode.modes() {
                let sol = rcdsp::cdsp::solve_sweep(sweep.clone(), md);
                let text = solution_summary(case, &cfg.targets(), &sol);
                m.write(
                    &format!("solve/case_{case}_{}.txt", md.name()),
                    text.as_bytes(),
                )?;
                print!("{text}");
            }
            m.flush()?;
            Ok(())
        }
        Command::Experiment { config, rows } => {
            let cfg = load(&config)?;
            let harness = harness(&cfg);
            let mut specs = default_matrix(cfg.experiment.master_seed, harness.settings());
            if let Some(r) = rows {
                if r.last > specs.len() {
                    bail!(
                        "--rows ends at {} but the matrix has {} rows",
                        r.last,
                        specs.len()
                    );
                }
                specs = specs[r.first - 1..r.last].to_vec();
            }
            let records = harness.run_matrix(&specs)?;
            let mut m = manifest(&cfg, invocation)?;
            let name = match rows {
                Some(r) => format!("experiment/matrix_rows_{}-{}.csv", r.first, r.last),
                None => "experiment/matrix.csv".to_string(),
            };
            m.write(&name, matrix_csv(&records)?.as_bytes())?;
            m.flush()?;
            print!("{}", render_table(&records));
            report_row_errors(&records)
        }
        Command::Report { config } => {
            let cfg = load(&config)?;
            let harness = harness(&cfg);
            let specs = default_matrix(cfg.experiment.master_seed, harness.settings());
            let records = harness.run_matrix(&specs)?;
            let mut m = manifest(&cfg, invocation)?;
            m.write("report/matrix.csv", matrix_csv(&records)?.as_bytes())?;
            let mut table = render_table(&records);
            for spec in &specs {
                let (_, robust, _) = harness.solve_experiment(spec)?;
                m.write(
                    &format!("report/sweep_row_{:02}.csv", spec.exp_id),
                    sweep_csv(&robust.sweep)?.as_bytes(),
                )?;
            }
            table.push_str("\nOutput distribution at ");
            table.push_str(&format!(
                "{} °F\n",
                fmt_f64(cfg.experiment.histogram_temperature)
            ));
            for c in CaseId::ALL {
                let h = harness.histogram(
                    c,
                    cfg.experiment.histogram_temperature,
                    cfg.experiment.histogram_samples,
                    cfg.experiment.histogram_bins,
                )?;
                m.write(
                    &format!("report/histogram_case_{c}.csv"),
                    histogram_csv(&h.bins)?.as_bytes(),
                )?;
                let d = &h.distribution;
                writeln!(
                    table,
                    "case {c}: mean {:.2} MPa, std {:.3}, skewness {}, excess kurtosis {}, near-normal {}",
                    d.mean,
                    d.std_total,
                    fmt_opt(d.skewness),
                    fmt_opt(d.ex_kurtosis),
                    h.passes_normality_screen()
                )?;
            }
            m.write("report/table.txt", table.as_bytes())?;
            m.flush()?;
            print!("{table}");
            report_row_errors(&records)
        }
    }
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    Ok(parse_config(path)?)
}

fn harness(cfg: &RunConfig) -> Harness {
    Harness::new(cfg.run_settings(), cfg.experiment.master_seed)
}

fn manifest(cfg: &RunConfig, invocation: &str) -> anyhow::Result<Manifest> {
    Ok(Manifest::open(
        &cfg.output.directory,
        format!("rcdsp {invocation}"),
        cfg.experiment.master_seed,
    )?)
}

/// The configured model file, or the trained network of `case`.
fn network(
    cfg: &RunConfig,
    harness: &Harness,
    case: CaseId,
) -> anyhow::Result<Arc<SubsystemNetwork>> {
    match &cfg.cdsp.network_file {
        Some(p) => Ok(Arc::new(
            SubsystemNetwork::load(p).with_context(|| format!("loading {}", p.display()))?,
        )),
        None => Ok(harness.network(&harness.case_config(case))?.network.clone()),
    }
}

fn report_row_errors(records: &[ExperimentRecord]) -> anyhow::Result<()> {
    let failed: Vec<String> = records
        .iter()
        .filter_map(|r| {
            r.error
                .as_ref()
                .map(|e| format!("row {}: {e}", r.spec.exp_id))
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        bail!("{} row(s) failed:\n{}", failed.len(), failed.join("\n"))
    }
}

fn distribution_summary(case: CaseId, at: f64, d: &OutputDistribution, y_target: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "case = {case}");
    let _ = writeln!(s, "temperature_f = {}", fmt_f64(at));
    let _ = writeln!(s, "samples = {}", d.n());
    let _ = writeln!(s, "mean = {}", fmt_f64(d.mean));
    let _ = writeln!(s, "std_total = {}", fmt_f64(d.std_total));
    let _ = writeln!(s, "std_pr = {}", fmt_f64(d.std_pr));
    let _ = writeln!(s, "std_pa = {}", fmt_f64(d.std_pa));
    let _ = writeln!(s, "skewness = {}", fmt_opt(d.skewness));
    let _ = writeln!(s, "ex_kurtosis = {}", fmt_opt(d.ex_kurtosis));
    let _ = writeln!(s, "y_target = {}", fmt_f64(y_target));
    let _ = writeln!(s, "reliability = {}", fmt_f64(d.reliability(y_target)));
    s
}

fn solution_summary(case: CaseId, targets: &Targets, sol: &CdspSolution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mode = {}", sol.mode.name());
    let _ = writeln!(s, "case = {case}");
    let _ = writeln!(s, "y_target = {}", fmt_f64(targets.y_target));
    let _ = writeln!(s, "alpha_target = {}", fmt_f64(targets.alpha_target));
    let _ = writeln!(s, "emi_target = {}", fmt_f64(targets.emi_target));
    let _ = writeln!(s, "feasible = {}", sol.feasible());
    let ranges: Vec<String> = sol
        .admissible
        .iter()
        .map(|&(a, b)| {
            format!(
                "[{}, {}]",
                fmt_f64(sol.sweep[a].design_value),
                fmt_f64(sol.sweep[b].design_value)
            )
        })
        .collect();
    let _ = writeln!(
        s,
        "admissible = {}",
        if ranges.is_empty() {
            "none".into()
        } else {
            ranges.join(" ")
        }
    );
    let o = sol.optimum;
    let _ = writeln!(s, "t_opt_f = {}", fmt_opt(o.map(|o| o.design_value)));
    let _ = writeln!(s, "d_minus = {}", fmt_opt(o.map(|o| o.d_minus)));
    let _ = writeln!(s, "d_plus = {}", fmt_opt(o.map(|o| o.d_plus)));
    let _ = writeln!(
        s,
        "alpha_achieved = {}",
        fmt_opt(o.map(|o| o.alpha_achieved))
    );
    s
}

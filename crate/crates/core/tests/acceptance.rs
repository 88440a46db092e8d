//! End-to-end acceptance checks. Each criterion runs in turn and prints one
//! pass/fail line; the test fails if any criterion does.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{
    at, dense_inverse_posterior, equivalence_violations, gaussian_oracle, goal_identity_error,
    linear_chain, mc_band, problem, skew_oracle, T,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcdsp::cdsp::{phi, solve_sweep, sweep, CdspMode, DesignEvaluation, Targets};
use rcdsp::gp::{fit, Dataset, FitConfig, Hyperparameters, Standardization, TrainedGP};
use rcdsp::harness::{default_matrix, matrix_csv, CaseId, Harness, RunSettings, MATRIX_COLUMNS};
use rcdsp::network::{propagate, Mode, UncertaintySpec};
use rcdsp::process::{yield_strength, Composition, Microstructure, ModelSelector, YIELD_WINDOW};

const MASTER_SEED: u64 = 1;

/// Evaluations gathered by the cDSP criteria, with their EMI target.
type Collected = Vec<(Vec<DesignEvaluation>, f64)>;

struct Outcome {
    passed: bool,
    line: String,
}

fn check(id: u32, name: &str, budget: Duration, body: impl FnOnce() -> String) -> Outcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let (passed, detail) = match result {
        Ok(_) if elapsed > budget => (false, format!("over budget of {budget:?}")),
        Ok(detail) => (true, detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, msg)
        }
    };
    let line = format!(
        "criterion {id:>2} {} {name} ({:.1}s): {detail}",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = writeln!(std::io::stderr(), "{line}");
    Outcome { passed, line }
}

fn gp_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dim = rng.random_range(1..=3);
        let n = rng.random_range(1..=8);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let h = Hyperparameters::new(
            (0..dim).map(|_| rng.random_range(-1.0..1.5)).collect(),
            rng.random_range(0.1..10.0),
            rng.random_range(1e-3..1e-1),
        );
        let ds = Dataset::new(rows, y).unwrap();
        let gp = TrainedGP::new(ds.clone(), h.clone(), Standardization::identity(dim)).unwrap();
        assert_eq!(gp.jitter(), 0.0);
        let scale = ds.outputs().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for _ in 0..5 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.2..1.2)).collect();
            let p = gp.predict(&x).unwrap();
            let (m, v) = dense_inverse_posterior(&ds, &h, &x);
            let err = ((p.mean - m).abs() / scale).max((p.variance - v.max(0.0)).abs() / h.sigma2);
            worst = worst.max(err);
        }
    }
    assert!(worst <= 1e-8, "worst relative error {worst:e}");
    format!("worst relative error {worst:.1e} over 50 datasets")
}

fn sine_recovery() -> String {
    let n = 50;
    let xs: Vec<f64> = (0..n)
        .map(|i| i as f64 * std::f64::consts::TAU / (n - 1) as f64)
        .collect();
    let ds = Dataset::new(
        xs.iter().map(|x| vec![*x]).collect(),
        xs.iter().map(|x| x.sin()).collect(),
    )
    .unwrap();
    let gp = fit(
        &ds,
        &FitConfig {
            seed: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let m = 997;
    let sse: f64 = (0..m)
        .map(|i| {
            let x = (i as f64 + 0.5) * std::f64::consts::TAU / m as f64;
            (gp.predict_mean(&[x]).unwrap() - x.sin()).powi(2)
        })
        .sum();
    let rmse = (sse / m as f64).sqrt();
    let delta2 = gp.hyperparameters().delta2;
    assert!(rmse < 1e-2 * 2.0, "held-out rmse {rmse:e}");
    assert!(delta2 < 1e-4, "delta2 {delta2:e}");
    format!("rmse {rmse:.1e}, delta2 {delta2:.1e}")
}

fn linear_gaussian() -> String {
    let (c, a, b) = (2.0, -0.5, 10.0);
    let (mu, sd) = (3.0, 1.5);
    let n = 100_000;
    let unc = UncertaintySpec::new().normal(T, sd);
    let d = propagate(&linear_chain(c, a, b), &at(mu), &unc, Mode::Full, n, 12).unwrap();
    let mean = a * c * mu + b;
    let std = (a * c).abs() * sd;
    let se_mean = std / (n as f64).sqrt();
    let se_std = std / (2.0 * n as f64).sqrt();
    assert!(
        (d.mean - mean).abs() < 3.0 * se_mean,
        "mean {} vs {mean}",
        d.mean
    );
    assert!(
        (d.std_total - std).abs() < 3.0 * se_std,
        "std {} vs {std}",
        d.std_total
    );
    let mut worst: f64 = 0.0;
    for k in [-2.0, -0.7, 0.0, 1.3] {
        let y = mean + k * std;
        let alpha = phi((mean - y) / std);
        let gap = (d.reliability(y) - alpha).abs();
        assert!(gap < mc_band(alpha, n), "alpha gap {gap} at y {y}");
        worst = worst.max(gap / mc_band(alpha, n));
    }
    format!(
        "mean off by {:.2} se, std by {:.2} se, alpha within {:.2} bands",
        (d.mean - mean).abs() / se_mean,
        (d.std_total - std).abs() / se_std,
        worst
    )
}

fn phi_pairing() -> String {
    let cases = [
        (2.32, 0.989, 0.990),
        (1.644, 0.9495, 0.9505),
        (1.28, 0.8995, 0.9000),
        (1.036, 0.8495, 0.8505),
    ];
    let mut out = Vec::new();
    for (e, lo, hi) in cases {
        let p = phi(e);
        assert!((lo..=hi).contains(&p), "phi({e}) = {p}");
        out.push(format!("phi({e})={p:.5}"));
    }
    out.join(", ")
}

fn normal_equivalence(collected: &mut Collected) -> String {
    let n = 10_000;
    let mut picks = Vec::new();
    for alpha in [0.85, 0.9, 0.95, 0.99] {
        let t = Targets::from_alpha(704.15, alpha).unwrap();
        let s = sweep(&problem(gaussian_oracle(), 15.0, t, n, 101, 55)).unwrap();
        let bad = equivalence_violations(&s, alpha, n);
        assert!(bad.is_empty(), "alpha {alpha}: flags disagree at {bad:?}");
        let r = solve_sweep(s.clone(), CdspMode::Robust)
            .optimum
            .expect("robust optimum");
        let q = solve_sweep(s.clone(), CdspMode::Reliability)
            .optimum
            .expect("reliable optimum");
        assert_eq!(r.design_value, q.design_value, "alpha {alpha}");
        picks.push(format!("{alpha}->{}", r.design_value));
        collected.push((s, t.emi_target));
    }
    format!("same T_O in both modes: {}", picks.join(" "))
}

const SKEW_ALPHA: f64 = 0.99;

fn skew_sweep(y: f64) -> (Vec<DesignEvaluation>, Targets) {
    let t = Targets::from_alpha(y, SKEW_ALPHA).unwrap();
    (
        sweep(&problem(skew_oracle(), 5.0, t, 10_000, 101, 66)).unwrap(),
        t,
    )
}

fn skew_witness() -> Option<f64> {
    (0..=20).map(|k| 145.0 + k as f64).find(|&y| {
        let (s, _) = skew_sweep(y);
        solve_sweep(s.clone(), CdspMode::Robust).feasible()
            && !solve_sweep(s, CdspMode::Reliability).feasible()
    })
}

fn skew_divergence(collected: &mut Collected) -> String {
    let y = skew_witness().expect("no target with a robust design and no reliable one");
    let (s, t) = skew_sweep(y);
    let robust = solve_sweep(s.clone(), CdspMode::Robust);
    let reliable = solve_sweep(s.clone(), CdspMode::Reliability);
    assert!(!robust.admissible.is_empty() && reliable.admissible.is_empty());
    collected.push((s, t.emi_target));
    format!(
        "y_target {y}: {} robust points, 0 reliable",
        robust
            .admissible
            .iter()
            .map(|(a, b)| b - a + 1)
            .sum::<usize>()
    )
}

fn reliability_gap(collected: &mut Collected) -> String {
    let y = skew_witness().expect("no divergent target");
    let (s, t) = skew_sweep(y);
    let o = solve_sweep(s.clone(), CdspMode::Robust).optimum.unwrap();
    assert!(
        o.alpha_achieved < t.alpha_target,
        "alpha_A {}",
        o.alpha_achieved
    );
    assert_eq!(o.alpha_achieved, s[o.index].alpha_hat);
    collected.push((s, t.emi_target));
    format!(
        "rc optimum T_O {} has alpha_A {:.4} < {}",
        o.design_value, o.alpha_achieved, t.alpha_target
    )
}

fn yield_ordering() -> String {
    let comp = Composition::default();
    let [d, x, s] = YIELD_WINDOW;
    let lin = |w: rcdsp::process::Window, i: usize| w.lo + (w.hi - w.lo) * i as f64 / 9.0;
    let mut tightest = f64::INFINITY;
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                let m = Microstructure {
                    ferrite_grain_size: lin(d, i),
                    ferrite_fraction: lin(x, j),
                    pearlite_spacing: lin(s, k),
                };
                let f = |sel| yield_strength(sel, &m, &comp).unwrap();
                let (f0, f1, f2) = (
                    f(ModelSelector::Middle),
                    f(ModelSelector::Upper),
                    f(ModelSelector::Lower),
                );
                assert!(f1 >= f0 && f0 >= f2, "{m:?}: {f1} {f0} {f2}");
                tightest = tightest.min((f1 - f0).min(f0 - f2));
            }
        }
    }
    format!("1000 points ordered, smallest gap {tightest:.2} MPa")
}

/// The 36 (case, LRL, alpha_T) rows of the study, written out by hand.
fn study_rows() -> Vec<(char, f64, f64)> {
    let mut rows = Vec::new();
    for (case, lrls, alphas) in [
        ('A', [200.0, 270.0, 280.0], [0.99, 0.95, 0.90]),
        ('B', [200.0, 270.0, 280.0], [0.99, 0.95, 0.90]),
        ('C', [150.0, 180.0, 200.0], [0.99, 0.90, 0.85]),
        ('D', [150.0, 180.0, 200.0], [0.99, 0.90, 0.85]),
    ] {
        for a in alphas {
            for l in lrls {
                rows.push((case, l, a));
            }
        }
    }
    rows
}

fn matrix_structure(collected: &mut Collected) -> String {
    let settings = RunSettings::default();
    let specs = default_matrix(MASTER_SEED, &settings);
    let first = Harness::new(settings.clone(), MASTER_SEED);
    let records = first.run_matrix(&specs).unwrap();
    let a = matrix_csv(&records).unwrap();
    let b = matrix_csv(
        &Harness::new(settings, MASTER_SEED)
            .run_matrix(&specs)
            .unwrap(),
    )
    .unwrap();
    assert!(a == b, "two runs differ");

    let mut reader = csv::Reader::from_reader(a.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, MATRIX_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 36);
    let mut na = (0, 0);
    for (i, (row, (case, lrl, alpha))) in rows.iter().zip(study_rows()).enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i + 1);
        assert_eq!(row[1], case.to_string());
        assert_eq!(row[2].parse::<f64>().unwrap(), lrl);
        assert_eq!(row[3].parse::<f64>().unwrap(), alpha);
        let rc_feasible: bool = row[12].parse().unwrap();
        let rel_feasible: bool = row[13].parse().unwrap();
        assert!(
            (5..=8).all(|c| (row[c] == *"NA") != rc_feasible),
            "row {}",
            i + 1
        );
        assert!(
            (9..=11).all(|c| (row[c] == *"NA") != rel_feasible),
            "row {}",
            i + 1
        );
        na.0 += usize::from(!rc_feasible);
        na.1 += usize::from(!rel_feasible);
    }
    for (spec, rec) in specs.iter().zip(&records) {
        assert!(rec.error.is_none(), "row {}: {:?}", spec.exp_id, rec.error);
        let (_, robust, _) = first.solve_experiment(spec).unwrap();
        collected.push((robust.sweep, spec.emi_target));
    }
    format!(
        "36 rows byte-identical across runs; NA rows: {} rc, {} Rc",
        na.0, na.1
    )
}

fn histogram_screen() -> String {
    let h = Harness::new(RunSettings::default(), MASTER_SEED);
    let mut out = Vec::new();
    for (case, expect_pass) in [(CaseId::A, true), (CaseId::C, false), (CaseId::D, false)] {
        let r = h.histogram(case, 1450.0, 100_000, 40).unwrap();
        let d = &r.distribution;
        let (g, k) = (d.skewness.unwrap(), d.ex_kurtosis.unwrap());
        assert_eq!(
            r.passes_normality_screen(),
            expect_pass,
            "case {case}: skew {g:.3} kurt {k:.3}"
        );
        out.push(format!("{case} skew {g:.2} kurt {k:.2}"));
    }
    out.join("; ")
}

fn goal_identity(collected: &Collected) -> String {
    assert!(!collected.is_empty(), "no evaluations collected");
    let points: usize = collected.iter().map(|(s, _)| s.len()).sum();
    let worst = collected
        .iter()
        .map(|(s, t)| goal_identity_error(s, *t))
        .fold(0.0, f64::max);
    assert!(worst <= 1e-12, "worst residual {worst:e}");
    format!("{points} evaluations, worst residual {worst:.1e}")
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs;
    let mut collected: Collected = Vec::new();
    let outcomes = vec![
        check(1, "GP matches dense-inverse oracle", secs(10), gp_oracle),
        check(2, "GP recovers sin(x)", secs(30), sine_recovery),
        check(3, "linear-Gaussian propagation", secs(30), linear_gaussian),
        check(4, "Phi pairing", secs(1), phi_pairing),
        check(5, "normal-case equivalence", secs(120), || {
            normal_equivalence(&mut collected)
        }),
        check(6, "skew divergence", secs(120), || {
            skew_divergence(&mut collected)
        }),
        check(7, "achieved-reliability gap", secs(120), || {
            reliability_gap(&mut collected)
        }),
        check(8, "yield-model ordering", secs(5), yield_ordering),
        check(9, "experiment matrix structure", secs(1800), || {
            matrix_structure(&mut collected)
        }),
        check(
            10,
            "histogram normality screen",
            secs(300),
            histogram_screen,
        ),
        check(11, "goal identity", secs(10), || goal_identity(&collected)),
    ];
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.line.as_str())
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::cdsp::{alpha_from_emi_target, emi_target_from_alpha, CdspMode, Spread, Targets};
use crate::error::{Error, Result};
use crate::gp::FitConfig;
use crate::harness::{CaseId, RunSettings};
use crate::process::DESIGN_TEMPERATURE;

/// Which solver modes a `solve` run reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Robust,
    Reliability,
    #[default]
    Both,
}

impl SolveMode {
    pub fn modes(self) -> Vec<CdspMode> {
        match self {
            SolveMode::Robust => vec![CdspMode::Robust],
            SolveMode::Reliability => vec![CdspMode::Reliability],
            SolveMode::Both => vec![CdspMode::Robust, CdspMode::Reliability],
        }
    }
}

impl std::str::FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robust" => Ok(SolveMode::Robust),
            "reliability" => Ok(SolveMode::Reliability),
            "both" => Ok(SolveMode::Both),
            other => Err(Error::input(format!(
                "unknown mode `{other}` (expected robust, reliability or both)"
            ))),
        }
    }
}

/// `[gp]`: surrogate fitting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GpSection {
    pub restarts: usize,
    pub max_evals: usize,
    pub omega_bounds: [f64; 2],
    pub log10_sigma2_bounds: [f64; 2],
    pub log10_delta2_bounds: [f64; 2],
    pub standardize: bool,
}

/// `[uncertainty]`: propagation settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UncertaintySection {
    /// Standard deviation of temperature, °F.
    pub temperature_sd: f64,
    pub mc_samples: usize,
    pub spread: Spread,
}

/// `[cdsp]`: the design problem solved by `solve` and `propagate`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdspSection {
    pub case: CaseId,
    /// Persisted network used instead of training `case`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network_file: Option<PathBuf>,
    pub design_lo: f64,
    pub design_hi: f64,
    pub grid_points: usize,
    /// Lower requirement limit, MPa.
    pub y_target: f64,
    pub alpha_target: f64,
    pub emi_target: f64,
    pub mode: SolveMode,
    /// Temperature used by `propagate`, °F.
    pub design_point: f64,
}

/// `[experiment]`: seeds, the case matrix and the histogram study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSection {
    pub master_seed: u64,
    /// Train case D on exactly 5 rows per node.
    pub sparse_literal: bool,
    pub histogram_temperature: f64,
    pub histogram_samples: usize,
    pub histogram_bins: usize,
}

/// `[output]`
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSection {
    pub directory: PathBuf,
}

/// A fully validated run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub gp: GpSection,
    pub uncertainty: UncertaintySection,
    pub cdsp: CdspSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Defaults for everything except the master seed.
    pub fn with_seed(master_seed: u64) -> Self {
        let fit = FitConfig::default();
        let alpha_target = 0.95;
        RunConfig {
            gp: GpSection {
                restarts: fit.restarts,
                max_evals: fit.max_evals,
                omega_bounds: fit.omega_bounds.into(),
                log10_sigma2_bounds: fit.log10_sigma2_bounds.into(),
                log10_delta2_bounds: fit.log10_delta2_bounds.into(),
                standardize: fit.standardize,
            },
            uncertainty: UncertaintySection {
                temperature_sd: 5.0,
                mc_samples: 10_000,
                spread: Spread::Additive,
            },
            cdsp: CdspSection {
                case: CaseId::A,
                network_file: None,
                design_lo: DESIGN_TEMPERATURE.0,
                design_hi: DESIGN_TEMPERATURE.1,
                grid_points: 101,
                y_target: 270.0,
                alpha_target,
                emi_target: emi_target_from_alpha(alpha_target).expect("0.95 is in (0, 1)"),
                mode: SolveMode::Both,
                design_point: 1450.0,
            },
            experiment: ExperimentSection {
                master_seed,
                sparse_literal: false,
                histogram_temperature: 1450.0,
                histogram_samples: 100_000,
                histogram_bins: 40,
            },
            output: OutputSection {
                directory: PathBuf::from("out"),
            },
        }
    }

    /// Configuration text that parses back to `self`.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("config sections serialize")
    }

    pub fn targets(&self) -> Targets {
        Targets {
            y_target: self.cdsp.y_target,
            emi_target: self.cdsp.emi_target,
            alpha_target: self.cdsp.alpha_target,
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        let g = &self.gp;
        FitConfig {
            omega_bounds: (g.omega_bounds[0], g.omega_bounds[1]),
            log10_sigma2_bounds: (g.log10_sigma2_bounds[0], g.log10_sigma2_bounds[1]),
            log10_delta2_bounds: (g.log10_delta2_bounds[0], g.log10_delta2_bounds[1]),
            restarts: g.restarts,
            seed: 0,
            max_evals: g.max_evals,
            standardize: g.standardize,
        }
    }

    pub fn run_settings(&self) -> RunSettings {
        let mut s = RunSettings::default();
        s.build.window = (self.cdsp.design_lo, self.cdsp.design_hi);
        s.build.fit = self.fit_config();
        s.mc_samples = self.uncertainty.mc_samples;
        s.grid_points = self.cdsp.grid_points;
        s.sigma_pa = self.uncertainty.temperature_sd;
        s.spread = self.uncertainty.spread;
        s.sparse_literal = self.experiment.sparse_literal;
        s
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFile {
    gp: Option<Spanned<RawGp>>,
    uncertainty: Option<Spanned<RawUncertainty>>,
    cdsp: Option<Spanned<RawCdsp>>,
    experiment: Option<Spanned<RawExperiment>>,
    output: Option<Spanned<RawOutput>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGp {
    restarts: Option<Spanned<i64>>,
    max_evals: Option<Spanned<i64>>,
    omega_bounds: Option<Spanned<[f64; 2]>>,
    log10_sigma2_bounds: Option<Spanned<[f64; 2]>>,
    log10_delta2_bounds: Option<Spanned<[f64; 2]>>,
    standardize: Option<Spanned<bool>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawUncertainty {
    temperature_sd: Option<Spanned<f64>>,
    mc_samples: Option<Spanned<i64>>,
    spread: Option<Spanned<Spread>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCdsp {
    case: Option<Spanned<CaseId>>,
    network_file: Option<Spanned<PathBuf>>,
    design_lo: Option<Spanned<f64>>,
    design_hi: Option<Spanned<f64>>,
    grid_points: Option<Spanned<i64>>,
    y_target: Option<Spanned<f64>>,
    alpha_target: Option<Spanned<f64>>,
    emi_target: Option<Spanned<f64>>,
    mode: Option<Spanned<SolveMode>>,
    design_point: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    master_seed: Option<Spanned<i64>>,
    sparse_literal: Option<Spanned<bool>>,
    histogram_temperature: Option<Spanned<f64>>,
    histogram_samples: Option<Spanned<i64>>,
    histogram_bins: Option<Spanned<i64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<Spanned<PathBuf>>,
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        line: 0,
        key: String::new(),
        message: e.to_string(),
    })?;
    let mut cfg = parse_config_str(&text, &path.display().to_string())?;
    if let Some(f) = &cfg.cdsp.network_file {
        // relative model paths resolve against the config file
        let resolved = match path.parent() {
            Some(dir) if f.is_relative() => dir.join(f),
            _ => f.clone(),
        };
        cfg.cdsp.network_file = Some(resolved);
    }
    cfg.check_files(&text, &path.display().to_string())?;
    Ok(cfg)
}

impl RunConfig {
    fn check_files(&self, text: &str, origin: &str) -> Result<()> {
        if let Some(f) = &self.cdsp.network_file {
            if !f.is_file() {
                let line = find_key_line(text, "network_file");
                return Err(Error::Config {
                    path: origin.to_string(),
                    line,
                    key: "cdsp.network_file".into(),
                    message: format!("file {} does not exist", f.display()),
                });
            }
        }
        Ok(())
    }
}

/// Parses configuration text; `origin` names the source in error messages.
/// Referenced files are not checked.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    let ctx = Ctx { text, origin };
    let raw: RawFile = toml::from_str(text).map_err(|e| ctx.toml_error(&e))?;
    let mut cfg = RunConfig::with_seed(0);

    if let Some(gp) = raw.gp.map(Spanned::into_inner) {
        let c = &mut cfg.gp;
        set_count(&ctx, "gp.restarts", gp.restarts, 1, &mut c.restarts)?;
        set_count(&ctx, "gp.max_evals", gp.max_evals, 10, &mut c.max_evals)?;
        set_bounds(
            &ctx,
            "gp.omega_bounds",
            gp.omega_bounds,
            &mut c.omega_bounds,
        )?;
        set_bounds(
            &ctx,
            "gp.log10_sigma2_bounds",
            gp.log10_sigma2_bounds,
            &mut c.log10_sigma2_bounds,
        )?;
        set_bounds(
            &ctx,
            "gp.log10_delta2_bounds",
            gp.log10_delta2_bounds,
            &mut c.log10_delta2_bounds,
        )?;
        if let Some(v) = gp.standardize {
            c.standardize = v.into_inner();
        }
    }

    if let Some(u) = raw.uncertainty.map(Spanned::into_inner) {
        let c = &mut cfg.uncertainty;
        set_real(
            &ctx,
            "uncertainty.temperature_sd",
            u.temperature_sd,
            |v| v >= 0.0,
            "must be >= 0",
            &mut c.temperature_sd,
        )?;
        set_count(
            &ctx,
            "uncertainty.mc_samples",
            u.mc_samples,
            100,
            &mut c.mc_samples,
        )?;
        if let Some(v) = u.spread {
            c.spread = v.into_inner();
        }
    }

    let mut alpha_given = None;
    let mut emi_given = None;
    if let Some(d) = raw.cdsp.map(Spanned::into_inner) {
        let c = &mut cfg.cdsp;
        if let Some(v) = d.case {
            c.case = v.into_inner();
        }
        if let Some(v) = d.network_file {
            c.network_file = Some(v.into_inner());
        }
        set_real(
            &ctx,
            "cdsp.design_lo",
            d.design_lo.clone(),
            |_| true,
            "",
            &mut c.design_lo,
        )?;
        let lo = c.design_lo;
        set_real(
            &ctx,
            "cdsp.design_hi",
            d.design_hi.clone(),
            |v| v > lo,
            "must exceed design_lo",
            &mut c.design_hi,
        )?;
        if d.design_hi.is_none() && c.design_hi <= lo {
            return Err(ctx.at(
                "cdsp.design_lo",
                d.design_lo.as_ref().map(|s| s.span()),
                "must be below design_hi",
            ));
        }
        set_count(
            &ctx,
            "cdsp.grid_points",
            d.grid_points,
            2,
            &mut c.grid_points,
        )?;
        set_real(
            &ctx,
            "cdsp.y_target",
            d.y_target,
            |_| true,
            "",
            &mut c.y_target,
        )?;
        set_real(
            &ctx,
            "cdsp.design_point",
            d.design_point,
            |_| true,
            "",
            &mut c.design_point,
        )?;
        if let Some(v) = d.mode {
            c.mode = v.into_inner();
        }
        if let Some(a) = &d.alpha_target {
            let v = *a.get_ref();
            if !(v > 0.0 && v < 1.0) {
                return Err(ctx.at(
                    "cdsp.alpha_target",
                    Some(a.span()),
                    &format!("must lie in (0, 1), got {v}"),
                ));
            }
            alpha_given = Some((v, a.span()));
        }
        if let Some(e) = &d.emi_target {
            let v = *e.get_ref();
            if !(v.is_finite() && v > 0.0) {
                return Err(ctx.at(
                    "cdsp.emi_target",
                    Some(e.span()),
                    &format!("must be positive, got {v}"),
                ));
            }
            emi_given = Some((v, e.span()));
        }
    }
    match (alpha_given, emi_given) {
        (Some((a, _)), None) => {
            cfg.cdsp.alpha_target = a;
            cfg.cdsp.emi_target = emi_target_from_alpha(a)?;
        }
        (None, Some((e, span))) => {
            cfg.cdsp.emi_target = e;
            cfg.cdsp.alpha_target = alpha_from_emi_target(e)
                .map_err(|err| ctx.at("cdsp.emi_target", Some(span), &err.to_string()))?;
        }
        (Some((a, _)), Some((e, span))) => {
            cfg.cdsp.alpha_target = a;
            cfg.cdsp.emi_target = e;
            cfg.targets()
                .validate()
                .map_err(|err| ctx.at("cdsp.emi_target", Some(span), &err.to_string()))?;
        }
        (None, None) => {}
    }

    let exp = raw.experiment.map(Spanned::into_inner).unwrap_or_default();
    match exp.master_seed {
        None => {
            return Err(Error::Config {
                path: origin.to_string(),
                line: find_section_line(text, "experiment"),
                key: "experiment.master_seed".into(),
                message: "missing required key".into(),
            })
        }
        Some(s) => {
            let v = *s.get_ref();
            if v < 0 {
                return Err(ctx.at("experiment.master_seed", Some(s.span()), "must be >= 0"));
            }
            cfg.experiment.master_seed = v as u64;
        }
    }
    if let Some(v) = exp.sparse_literal {
        cfg.experiment.sparse_literal = v.into_inner();
    }
    let e = &mut cfg.experiment;
    set_real(
        &ctx,
        "experiment.histogram_temperature",
        exp.histogram_temperature,
        |_| true,
        "",
        &mut e.histogram_temperature,
    )?;
    set_count(
        &ctx,
        "experiment.histogram_samples",
        exp.histogram_samples,
        100,
        &mut e.histogram_samples,
    )?;
    set_count(
        &ctx,
        "experiment.histogram_bins",
        exp.histogram_bins,
        1,
        &mut e.histogram_bins,
    )?;

    if let Some(o) = raw.output.map(Spanned::into_inner) {
        if let Some(d) = o.directory {
            let span = d.span();
            let dir = d.into_inner();
            if dir.as_os_str().is_empty() {
                return Err(ctx.at("output.directory", Some(span), "must not be empty"));
            }
            cfg.output.directory = dir;
        }
    }
    Ok(cfg)
}

struct Ctx<'a> {
    text: &'a str,
    origin: &'a str,
}

impl Ctx<'_> {
    fn line_of(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())]
            .matches('\n')
            .count()
            + 1
    }

    fn at(&self, key: &str, span: Option<Range<usize>>, message: &str) -> Error {
        Error::Config {
            path: self.origin.to_string(),
            line: span.map_or(0, |s| self.line_of(s.start)),
            key: key.to_string(),
            message: message.to_string(),
        }
    }

    fn toml_error(&self, e: &toml::de::Error) -> Error {
        let line = e.span().map_or(0, |s| self.line_of(s.start));
        let message = e.message().to_string();
        // prefer the key named in the message, else the key on the failing line
        let key = between_backticks(&message)
            .filter(|_| message.starts_with("unknown field"))
            .or_else(|| {
                let l = self.text.lines().nth(line.checked_sub(1)?)?;
                let (k, _) = l.split_once('=')?;
                Some(k.trim().to_string())
            })
            .unwrap_or_default();
        Error::Config {
            path: self.origin.to_string(),
            line,
            key,
            message,
        }
    }
}

fn between_backticks(s: &str) -> Option<String> {
    let start = s.find('`')? + 1;
    let len = s[start..].find('`')?;
    Some(s[start..start + len].to_string())
}

fn find_section_line(text: &str, section: &str) -> usize {
    let header = format!("[{section}]");
    text.lines()
        .position(|l| l.trim() == header)
        .map_or(0, |i| i + 1)
}

fn find_key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| l.split_once('=').is_some_and(|(k, _)| k.trim() == key))
        .map_or(0, |i| i + 1)
}

fn set_count(
    ctx: &Ctx,
    key: &str,
    v: Option<Spanned<i64>>,
    min: i64,
    slot: &mut usize,
) -> Result<()> {
    if let Some(s) = v {
        let x = *s.get_ref();
        if x < min {
            return Err(ctx.at(
                key,
                Some(s.span()),
                &format!("must be at least {min}, got {x}"),
            ));
        }
        *slot = x as usize;
    }
    Ok(())
}

fn set_real(
    ctx: &Ctx,
    key: &str,
    v: Option<Spanned<f64>>,
    ok: impl Fn(f64) -> bool,
    rule: &str,
    slot: &mut f64,
) -> Result<()> {
    if let Some(s) = v {
        let x = *s.get_ref();
        if !x.is_finite() {
            return Err(ctx.at(key, Some(s.span()), &format!("must be finite, got {x}")));
        }
        if !ok(x) {
            return Err(ctx.at(key, Some(s.span()), &format!("{rule}, got {x}")));
        }
        *slot = x;
    }
    Ok(())
}

fn set_bounds(
    ctx: &Ctx,
    key: &str,
    v: Option<Spanned<[f64; 2]>>,
    slot: &mut [f64; 2],
) -> Result<()> {
    if let Some(s) = v {
        let [lo, hi] = *s.get_ref();
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ctx.at(
                key,
                Some(s.span()),
                &format!("needs finite [lo, hi] with lo <= hi, got [{lo}, {hi}]"),
            ));
        }
        *slot = [lo, hi];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> (usize, String, String) {
        match parse_config_str(text, "t.toml") {
            Err(Error::Config {
                line, key, message, ..
            }) => (line, key, message),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str("[experiment]\nmaster_seed = 7\n", "t").unwrap();
        assert_eq!(cfg.uncertainty.mc_samples, 10_000);
        assert_eq!(cfg.cdsp.grid_points, 101);
        assert_eq!(cfg.uncertainty.temperature_sd, 5.0);
        assert_eq!(cfg.experiment.master_seed, 7);
        assert_eq!(cfg, RunConfig::with_seed(7));
    }

    #[test]
    fn missing_seed_is_an_error() {
        let (_, key, _) = err("[cdsp]\ny_target = 200\n");
        assert_eq!(key, "experiment.master_seed");
    }

    #[test]
    fn range_error_names_key_and_line() {
        let (line, key, msg) = err("[experiment]\nmaster_seed = 1\n\n[cdsp]\nalpha_target = 1.2\n");
        assert_eq!((line, key.as_str()), (5, "cdsp.alpha_target"));
        assert!(msg.contains("1.2"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let (line, key, _) = err("[experiment]\nmaster_seed = 1\nmaster_sed = 2\n");
        assert_eq!((line, key.as_str()), (3, "master_sed"));
        let (_, key, _) = err("[experiment]\nmaster_seed = 1\n[extra]\na = 1\n");
        assert_eq!(key, "extra");
    }

    #[test]
    fn type_mismatch_names_key() {
        let (line, key, _) =
            err("[experiment]\nmaster_seed = 1\n[uncertainty]\nmc_samples = \"many\"\n");
        assert_eq!((line, key.as_str()), (4, "mc_samples"));
    }

    #[test]
    fn inconsistent_targets_rejected() {
        let (_, key, _) =
            err("[experiment]\nmaster_seed = 1\n[cdsp]\nalpha_target = 0.9\nemi_target = 2.0\n");
        assert_eq!(key, "cdsp.emi_target");
        let cfg = parse_config_str(
            "[experiment]\nmaster_seed = 1\n[cdsp]\nemi_target = 1.2815515655446004\n",
            "t",
        )
        .unwrap();
        assert!(
            (cfg.cdsp.alpha_target - 0.9).abs() < 1e-9,
            "{}",
            cfg.cdsp.alpha_target
        );
    }

    #[test]
    fn emit_round_trips() {
        let mut cfg = RunConfig::with_seed(u32::MAX as u64 + 5);
        cfg.cdsp.alpha_target = 0.99;
        cfg.cdsp.emi_target = emi_target_from_alpha(0.99).unwrap();
        cfg.cdsp.case = CaseId::C;
        cfg.uncertainty.spread = Spread::RootSumSquare;
        cfg.cdsp.mode = SolveMode::Reliability;
        cfg.experiment.sparse_literal = true;
        let back = parse_config_str(&cfg.emit(), "t").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn missing_network_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "[experiment]\nmaster_seed = 1\n[cdsp]\nnetwork_file = \"nope.json\"\n",
        )
        .unwrap();
        match parse_config(&p) {
            Err(Error::Config { line, key, .. }) => {
                assert_eq!((line, key.as_str()), (4, "cdsp.network_file"))
            }
            other => panic!("{other:?}"),
        }
    }
}

//! Config-driven experiment runs: parse a flat `key = value` config, sample
//! terminal summaries in parallel, build the tail curves and the Tauberian
//! comparison, run the enabled checks, and write CSV curves plus a JSON
//! report.
//!
//! # Config grammar
//!
//! One `key = value` pair per line. Blank lines and lines starting with `#`
//! are ignored; a later assignment overrides an earlier one. Lists are
//! comma separated.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `model.kind` | letter `A`-`E` or catalog name | `A` |
//! | `model.sigma`, `model.jump_rate` (`rho`), `model.jump_bound` (`k`) | model parameters | per model |
//! | `model.barrier_up` (`a`), `model.barrier_down` (`b`) | barriers | per model |
//! | `model.horizon_cap` (`t_max`), `model.epsilon` | censoring cap, lambda domain | `1e6`, `1` |
//! | `run.paths` | number of paths, at least 1000 | `100000` |
//! | `run.seed` | master seed | [`DEFAULT_MASTER_SEED`] |
//! | `run.step` | grid step for the grid-based models | `1e-3` |
//! | `run.threads` | worker count, `0` for all cores | `0` |
//! | `run.output_dir` | where files are written | `out` |
//! | `grid.small` | lambdas for the transform side | `0.5, 0.2, 0.1, 0.05, 0.02` |
//! | `grid.big` | lambdas for the tail curves, or `auto` | `auto` |
//! | `checks` | subset of `mean_one, sandwich, bdg, zeta`, or `none` | `none` |
//! | `checks.paths` | paths per check | `10000` |
//! | `checks.lambdas` | lambdas for the checks | `0.1, 0.5` |
//! | `checks.horizons` | horizons for `bdg` | `10, 100, 1000` |
//! | `censoring.threshold` | censored share that triggers a warning | `0.01` |
//!
//! Model keys apply on top of the defaults of the selected `model.kind`,
//! regardless of line order.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::{
    bdg_ratio_check, mean_one_density_check, sandwich_check, zeta_condition_check, BdgReport,
    CheckError, MeanOneResult, SandwichReport, ZetaEnvelope,
};
use crate::models::{
    analytic_oracle, sample_terminal, ModelError, ModelKind, ModelSpec, OracleQuery,
    TerminalSample, DEFAULT_STEP,
};
use crate::rng::DEFAULT_MASTER_SEED;
use crate::runner::{map_paths, sub_master, with_threads};
use crate::stats::Estimate;
use crate::tails::{
    class_d_diagnostic, default_big_grid, empirical_tail_curve, laplace_censoring_bias,
    sup_neg_tail_curve, tauberian_compare, ClassDDiagnostic, TailCurve, TailError, TailMode,
    TauberianReport, DEFAULT_SMALL_LAMBDAS,
};

/// Version written into every CSV header line and the JSON report.
pub const FORMAT_VERSION: u32 = 1;
/// Smallest path count accepted for tail estimation.
pub const MIN_PATHS: u64 = 1_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl ExperimentError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Io(_) => 2,
            ExperimentError::Invariant(_) => 3,
        }
    }
}

impl From<ModelError> for ExperimentError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::KindMismatch { .. } => ExperimentError::Invariant(e.to_string()),
            _ => ExperimentError::Config(e.to_string()),
        }
    }
}

impl From<TailError> for ExperimentError {
    fn from(e: TailError) -> Self {
        match e {
            TailError::DegenerateGrid { .. }
            | TailError::IllConditioned(_)
            | TailError::InvalidGrid => ExperimentError::Config(e.to_string()),
            _ => ExperimentError::Invariant(e.to_string()),
        }
    }
}

impl From<CheckError> for ExperimentError {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Model(m) => m.into(),
            other => ExperimentError::Config(other.to_string()),
        }
    }
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        ExperimentError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for ExperimentError {
    fn from(e: serde_json::Error) -> Self {
        ExperimentError::Io(io::Error::other(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    MeanOne,
    Sandwich,
    Bdg,
    Zeta,
}

impl CheckName {
    pub const ALL: [CheckName; 4] = [
        CheckName::MeanOne,
        CheckName::Sandwich,
        CheckName::Bdg,
        CheckName::Zeta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::MeanOne => "mean_one",
            CheckName::Sandwich => "sandwich",
            CheckName::Bdg => "bdg",
            CheckName::Zeta => "zeta",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| ExperimentError::Config(format!("unknown check `{}`", s.trim())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub n_paths: u64,
    pub master_seed: u64,
    pub step: f64,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub small_lambdas: Vec<f64>,
    /// `None` selects the default geometric grids.
    pub big_lambdas: Option<Vec<f64>>,
    pub checks: BTreeSet<CheckName>,
    pub check_paths: u64,
    pub check_lambdas: Vec<f64>,
    pub check_horizons: Vec<f64>,
    pub censoring_threshold: f64,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec) -> ExperimentConfig {
        ExperimentConfig {
            model,
            n_paths: 100_000,
            master_seed: DEFAULT_MASTER_SEED,
            step: DEFAULT_STEP,
            threads: 0,
            output_dir: PathBuf::from("out"),
            small_lambdas: DEFAULT_SMALL_LAMBDAS.to_vec(),
            big_lambdas: None,
            checks: BTreeSet::new(),
            check_paths: 10_000,
            check_lambdas: vec![0.1, 0.5],
            check_horizons: vec![10.0, 100.0, 1000.0],
            censoring_threshold: 0.01,
        }
    }

    /// Parses config text, then applies `overrides` in order as if they
    /// were appended to it.
    pub fn parse_with_overrides(
        text: &str,
        overrides: &[(String, String)],
    ) -> Result<ExperimentConfig, ExperimentError> {
        let mut pairs = parse_pairs(text)?;
        pairs.extend(overrides.iter().cloned());
        ExperimentConfig::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<ExperimentConfig, ExperimentError> {
        let pairs: Vec<(String, &str)> = pairs
            .iter()
            .map(|(k, v)| (canonical_key(k), v.trim()))
            .collect();
        let kind = match pairs.iter().rev().find(|(k, _)| k == "model.kind") {
            Some((_, v)) => ModelKind::from_str(v)?,
            None => ModelKind::StoppedBrownianUpper,
        };
        let mut config = ExperimentConfig::new(ModelSpec::default_for(kind));
        for (key, value) in &pairs {
            config.apply(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let m = &mut self.model;
        match key {
            "model.kind" => {}
            "model.sigma" => m.sigma = real(key, value)?,
            "model.jump_rate" => m.jump_rate = real(key, value)?,
            "model.jump_bound" => m.jump_bound = real(key, value)?,
            "model.barrier_up" => m.barrier_up = real(key, value)?,
            "model.barrier_down" => {
                m.barrier_down = match value {
                    "none" => None,
                    v => Some(real(key, v)?),
                }
            }
            "model.horizon_cap" => m.horizon_cap = real(key, value)?,
            "model.epsilon" => m.epsilon = real(key, value)?,
            "run.paths" => self.n_paths = count(key, value)?,
            "run.seed" => self.master_seed = count(key, value)?,
            "run.step" => self.step = real(key, value)?,
            "run.threads" => self.threads = count(key, value)? as usize,
            "run.output_dir" => self.output_dir = PathBuf::from(value),
            "grid.small" => self.small_lambdas = reals(key, value)?,
            "grid.big" => {
                self.big_lambdas = match value {
                    "auto" => None,
                    v => Some(reals(key, v)?),
                }
            }
            "checks" => {
                self.checks = match value {
                    "none" | "" => BTreeSet::new(),
                    "all" => CheckName::ALL.into_iter().collect(),
                    v => v
                        .split(',')
                        .map(CheckName::from_str)
                        .collect::<Result<_, _>>()?,
                }
            }
            "checks.paths" => self.check_paths = count(key, value)?,
            "checks.lambdas" => self.check_lambdas = reals(key, value)?,
            "checks.horizons" => self.check_horizons = reals(key, value)?,
            "censoring.threshold" => self.censoring_threshold = real(key, value)?,
            _ => return Err(ExperimentError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.model.validate()?;
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.n_paths < MIN_PATHS {
            return bad(format!(
                "run.paths = {} is too small for tail estimation (need at least {MIN_PATHS})",
                self.n_paths
            ));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("run.step must be positive, got {}", self.step));
        }
        if self.small_lambdas.len() < 3 {
            return bad("grid.small needs at least 3 points".into());
        }
        if self
            .small_lambdas
            .iter()
            .any(|&l| !(l.is_finite() && l > 0.0))
        {
            return bad("grid.small must be positive".into());
        }
        if let Some(big) = &self.big_lambdas {
            let cap = self.model.sqrt_tail_cap();
            if big.is_empty() || big.windows(2).any(|w| w[0] >= w[1]) || big[0] <= 0.0 {
                return bad("grid.big must be positive and strictly increasing".into());
            }
            if big[big.len() - 1] >= cap {
                return bad(format!("grid.big must stay below sqrt(<M>_T_max) = {cap}"));
            }
        }
        if self.check_lambdas.is_empty()
            || self
                .check_lambdas
                .iter()
                .any(|&l| !(l.is_finite() && l > 0.0))
        {
            return bad("checks.lambdas must be nonempty and positive".into());
        }
        if self.check_horizons.is_empty()
            || self
                .check_horizons
                .iter()
                .any(|&t| !(t.is_finite() && t > 0.0))
        {
            return bad("checks.horizons must be nonempty and positive".into());
        }
        if self.check_paths == 0 {
            return bad("checks.paths must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.censoring_threshold) {
            return bad("censoring.threshold must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Splits config text into `(key, value)` pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ExperimentError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            ExperimentError::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                n + 1
            ))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Parses a `key=value` override, prefixing bare keys with `model.`.
pub fn parse_override(arg: &str) -> Result<(String, String), ExperimentError> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| ExperimentError::Config(format!("expected key=value, got `{arg}`")))?;
    let k = k.trim();
    let key = if k.contains('.') || k == "checks" {
        k.to_string()
    } else {
        format!("model.{k}")
    };
    Ok((key, v.trim().to_string()))
}

fn canonical_key(key: &str) -> String {
    let key = key.trim().to_ascii_lowercase();
    let alias = match key.as_str() {
        "model.a" => "model.barrier_up",
        "model.b" => "model.barrier_down",
        "model.rho" => "model.jump_rate",
        "model.k" => "model.jump_bound",
        "model.t_max" => "model.horizon_cap",
        "model.eps" => "model.epsilon",
        "model.h" => "run.step",
        other => other,
    };
    alias.to_string()
}

fn real(key: &str, v: &str) -> Result<f64, ExperimentError> {
    v.parse::<f64>()
        .map_err(|_| ExperimentError::Config(format!("`{key}`: `{v}` is not a number")))
}

fn count(key: &str, v: &str) -> Result<u64, ExperimentError> {
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    // Accept scientific notation such as `1e6` when it denotes an integer.
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 => Ok(x as u64),
        _ => Err(ExperimentError::Config(format!(
            "`{key}`: `{v}` is not a nonnegative integer"
        ))),
    }
}

fn reals(key: &str, v: &str) -> Result<Vec<f64>, ExperimentError> {
    v.split(',').map(|x| real(key, x.trim())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceRow {
    pub lambda: f64,
    pub estimate: Estimate,
    /// Upper bound on the bias from censored paths.
    pub bias_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CheckResults {
    pub mean_one: Vec<MeanOneResult>,
    pub sandwich: Option<SandwichReport>,
    pub bdg: Option<BdgReport>,
    pub zeta: Option<ZetaEnvelope>,
}

/// The deterministic part of a run: identical for a fixed config on any
/// number of workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub format_version: u32,
    pub status: RunStatus,
    pub warnings: Vec<String>,
    pub model: ModelSpec,
    pub master_seed: u64,
    pub step: f64,
    pub n_paths: u64,
    pub n_censored: u64,
    pub censored_fraction: f64,
    /// Mean of `M_inf` over uncensored paths.
    pub mean_terminal: Estimate,
    pub oracle_mean_terminal: Option<f64>,
    pub tails_qv_pred: TailCurve,
    pub tails_qv_opt: TailCurve,
    pub tails_sup_neg: TailCurve,
    pub qv_pred_plateau: Estimate,
    pub qv_opt_plateau: Estimate,
    /// Intercept of the sup-neg curve extrapolated in `1/lambda`.
    pub sup_neg_limit: Option<Estimate>,
    pub tauberian: TauberianReport,
    pub laplace: Vec<LaplaceRow>,
    pub class_d: ClassDDiagnostic,
    pub checks: CheckResults,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub sampling_seconds: f64,
    pub paths_per_second: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub results: ExperimentResults,
    pub timing: Timing,
}

/// Samples `n` terminal summaries in index order.
pub fn sample_terminals(
    model: &ModelSpec,
    master: u64,
    n: u64,
    step: f64,
) -> Result<Vec<TerminalSample>, ModelError> {
    map_paths(master, n, |_, seed| sample_terminal(model, seed, step))
        .into_iter()
        .collect()
}

/// Runs the experiment on `config.threads` workers without writing files.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let threads = if config.threads == 0 {
        rayon::current_num_threads()
    } else {
        config.threads
    };
    with_threads(config.threads, || run_on_pool(config, threads))
}

/// Runs the experiment and writes its CSV curves and `report.json` into
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    fs::create_dir_all(&config.output_dir)?;
    let report = run_in_memory(config)?;
    write_outputs(&report, &config.output_dir)?;
    Ok(report)
}

fn run_on_pool(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let model = &config.model;
    let samples = sample_terminals(model, config.master_seed, config.n_paths, config.step)?;
    let sampling_seconds = start.elapsed().as_secs_f64();

    let n = samples.len() as u64;
    let qv_pred: Vec<f64> = samples.iter().map(|s| s.qv_pred).collect();
    let qv_opt: Vec<f64> = samples.iter().map(|s| s.qv_opt).collect();
    let sup_neg: Vec<f64> = samples.iter().map(|s| s.sup_neg).collect();
    let uncensored: Vec<f64> = samples
        .iter()
        .filter(|s| !s.censored)
        .map(|s| s.m_inf)
        .collect();
    let n_censored = n - uncensored.len() as u64;
    let censored_fraction = n_censored as f64 / n as f64;
    drop(samples);

    let mut warnings = Vec::new();
    if censored_fraction > config.censoring_threshold {
        warnings.push(format!(
            "censored fraction {censored_fraction:.4} exceeds threshold {}",
            config.censoring_threshold
        ));
    }

    let cap = model.sqrt_tail_cap();
    let (qv_grid, sup_grid) = match &config.big_lambdas {
        Some(g) => (g.clone(), g.clone()),
        None => (
            default_big_grid(&qv_pred, cap, TailMode::SqrtTail)?,
            default_big_grid(&sup_neg, cap, TailMode::PlainTail)?,
        ),
    };
    let tails_qv_pred = empirical_tail_curve(&qv_pred, &qv_grid, TailMode::SqrtTail)?;
    let tails_qv_opt = empirical_tail_curve(&qv_opt, &qv_grid, TailMode::SqrtTail)?;
    let tails_sup_neg = sup_neg_tail_curve(&sup_neg, &sup_grid)?;
    let sup_neg_limit = tails_sup_neg.extrapolated_limit().ok();
    let tauberian = tauberian_compare(&qv_pred, &uncensored, &config.small_lambdas, &qv_grid)?;
    let qv_cap = model.predictable_qv_at(model.horizon_cap);
    let laplace = tauberian
        .laplace_points
        .iter()
        .map(|p| LaplaceRow {
            lambda: p.lambda,
            estimate: p.estimate,
            bias_bound: laplace_censoring_bias(n_censored, n, qv_cap, p.lambda),
        })
        .collect();
    let class_d = class_d_diagnostic(&[&tails_qv_pred, &tails_qv_opt, &tails_sup_neg]);
    let mean_terminal = tauberian.mean_terminal;
    let oracle_mean_terminal = analytic_oracle(model, OracleQuery::MeanTerminal)?.value();

    let checks = run_checks(config, &mut warnings)?;

    let results = ExperimentResults {
        format_version: FORMAT_VERSION,
        status: if warnings.is_empty() {
            RunStatus::Ok
        } else {
            RunStatus::Warning
        },
        warnings,
        model: model.clone(),
        master_seed: config.master_seed,
        step: config.step,
        n_paths: n,
        n_censored,
        censored_fraction,
        mean_terminal,
        oracle_mean_terminal,
        qv_pred_plateau: tails_qv_pred.plateau(),
        qv_opt_plateau: tails_qv_opt.plateau(),
        tails_qv_pred,
        tails_qv_opt,
        tails_sup_neg,
        sup_neg_limit,
        tauberian,
        laplace,
        class_d,
        checks,
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    Ok(ExperimentReport {
        results,
        timing: Timing {
            wall_seconds,
            sampling_seconds,
            paths_per_second: n as f64 / sampling_seconds.max(f64::MIN_POSITIVE),
            threads,
        },
    })
}

fn run_checks(
    config: &ExperimentConfig,
    warnings: &mut Vec<String>,
) -> Result<CheckResults, ExperimentError> {
    let model = &config.model;
    let lambdas: Vec<f64> = config
        .check_lambdas
        .iter()
        .copied()
        .filter(|&l| l <= model.epsilon)
        .collect();
    if lambdas.len() < config.check_lambdas.len() && !config.checks.is_empty() {
        warnings.push(format!(
            "check lambdas above epsilon = {} skipped",
            model.epsilon
        ));
    }
    let mut out = CheckResults::default();
    for &check in &config.checks {
        let master = sub_master(config.master_seed, 1 + check as u64);
        let paths = config.check_paths;
        match check {
            CheckName::MeanOne => {
                for &l in &lambdas {
                    out.mean_one.push(mean_one_density_check(
                        model,
                        l,
                        paths,
                        master,
                        config.step,
                    )?);
                }
            }
            CheckName::Sandwich if !lambdas.is_empty() => {
                out.sandwich = Some(sandwich_check(model, &lambdas, paths, master, config.step)?);
            }
            CheckName::Zeta if !lambdas.is_empty() => {
                out.zeta = Some(zeta_condition_check(
                    model,
                    &lambdas,
                    paths,
                    master,
                    config.step,
                )?);
            }
            CheckName::Bdg if model.jump_bound > 0.0 => {
                out.bdg = Some(bdg_ratio_check(
                    model,
                    &config.check_horizons,
                    paths,
                    master,
                    config.step,
                )?);
            }
            CheckName::Bdg => warnings.push("bdg check skipped: model has no jumps".into()),
            CheckName::Sandwich | CheckName::Zeta => {
                warnings.push(format!("{check} check skipped: no lambda within epsilon"))
            }
        }
    }
    Ok(out)
}

/// Writes the four CSV curves and `report.json` into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<(), ExperimentError> {
    let r = &report.results;
    write_tail_csv(&dir.join("tails_qvpred.csv"), "qv_pred", &r.tails_qv_pred)?;
    write_tail_csv(&dir.join("tails_qvopt.csv"), "qv_opt", &r.tails_qv_opt)?;
    write_tail_csv(&dir.join("tails_supneg.csv"), "sup_neg", &r.tails_sup_neg)?;
    write_laplace_csv(&dir.join("laplace.csv"), r.n_paths, &r.laplace)?;
    let mut file = io::BufWriter::new(fs::File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(&mut file, report)?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

fn csv_writer(
    path: &Path,
    what: &str,
) -> Result<csv::Writer<io::BufWriter<fs::File>>, ExperimentError> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "# mgtail {what} v{FORMAT_VERSION}")?;
    Ok(csv::Writer::from_writer(file))
}

fn write_tail_csv(path: &Path, quantity: &str, curve: &TailCurve) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path, &format!("tail curve ({quantity})"))?;
    w.write_record(["lambda", "value", "std_error", "n", "mode"])?;
    let mode = curve.mode.to_string();
    for i in 0..curve.len() {
        w.write_record([
            curve.lambdas[i].to_string(),
            curve.values[i].to_string(),
            curve.std_errors[i].to_string(),
            curve.n_samples.to_string(),
            mode.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_laplace_csv(path: &Path, n: u64, rows: &[LaplaceRow]) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path, "laplace side")?;
    w.write_record(["lambda", "value", "std_error", "n", "bias_bound"])?;
    for row in rows {
        w.write_record([
            row.lambda.to_string(),
            row.estimate.value.to_string(),
            row.estimate.std_error.to_string(),
            n.to_string(),
            row.bias_bound.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

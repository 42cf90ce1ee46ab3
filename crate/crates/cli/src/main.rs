//! `mgtail`: command-line front end for the tail-asymptotics laboratory.
//!
//! `mgtail run` executes one experiment from a config file plus flag
//! overrides and writes CSV curves and `report.json`; `mgtail models` lists
//! the model catalog. Exit codes: 0 success, 1 config error, 2 I/O error,
//! 3 internal invariant violation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mgtail_core::experiment::{
    parse_override, run_experiment, ExperimentConfig, ExperimentError, ExperimentReport, RunStatus,
};
use mgtail_core::models::list_models;

#[derive(Debug, Parser)]
#[command(
    name = "mgtail",
    version,
    about = "Monte Carlo checks of tail asymptotics for stopped martingales"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its curves and report.
    Run(RunArgs),
    /// List the model catalog with parameter schemas and oracles.
    Models {
        /// Print the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides `run.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of paths (overrides `run.paths`).
    #[arg(long)]
    paths: Option<u64>,
    /// Output directory (overrides `run.output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores (overrides `run.threads`).
    #[arg(long)]
    threads: Option<usize>,
    /// Model letter or name (overrides `model.kind`).
    #[arg(long)]
    model: Option<String>,
    /// Extra `key=value` setting; bare keys refer to `model.*`. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, ExperimentError> {
        let mut out = Vec::new();
        if let Some(m) = &self.model {
            out.push(("model.kind".to_string(), m.clone()));
        }
        for p in &self.params {
            out.push(parse_override(p)?);
        }
        if let Some(s) = self.seed {
            out.push(("run.seed".into(), s.to_string()));
        }
        if let Some(n) = self.paths {
            out.push(("run.paths".into(), n.to_string()));
        }
        if let Some(t) = self.threads {
            out.push(("run.threads".into(), t.to_string()));
        }
        if let Some(o) = &self.out {
            out.push(("run.output_dir".into(), o.display().to_string()));
        }
        Ok(out)
    }

    fn config(&self) -> Result<ExperimentConfig, ExperimentError> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path)?,
            None => String::new(),
        };
        ExperimentConfig::parse_with_overrides(&text, &self.overrides()?)
    }
}

fn print_summary(config: &ExperimentConfig, report: &ExperimentReport) {
    let r = &report.results;
    let pm = |e: mgtail_core::Estimate| format!("{:.5} ± {:.5}", e.value, e.std_error);
    println!(
        "model            {} ({})",
        r.model.kind,
        r.model.kind.letter()
    );
    println!("paths            {} ({} censored)", r.n_paths, r.n_censored);
    println!("E M_inf          {}", pm(r.mean_terminal));
    println!("<M> plateau      {}", pm(r.qv_pred_plateau));
    println!("[M,M] plateau    {}", pm(r.qv_opt_plateau));
    if let Some(l) = r.sup_neg_limit {
        println!("sup M^- limit    {}", pm(l));
    }
    println!("laplace limit    {}", pm(r.tauberian.laplace_limit));
    match r.tauberian.ratio {
        Some(ratio) => println!("tauberian ratio  {}", pm(ratio)),
        None => println!("tauberian ratio  undefined (transform limit indistinguishable from 0)"),
    }
    println!("class D          {:?}", r.class_d.verdict);
    for m in &r.checks.mean_one {
        println!(
            "mean-one l={:<5} {} (z {:+.2})",
            m.lambda,
            pm(m.mean),
            m.z_score
        );
    }
    if let Some(s) = &r.checks.sandwich {
        println!(
            "sandwich         {}/{} pairs inside, implied C {:.4}",
            s.pairs_checked - s.pairs_violated,
            s.pairs_checked,
            s.implied_c
        );
    }
    if let Some(b) = &r.checks.bdg {
        let ratios: Vec<String> = b.points.iter().map(|p| format!("{:.3}", p.ratio)).collect();
        println!(
            "bdg ratios       [{}], variation {:.1}%",
            ratios.join(", "),
            100.0 * b.variation
        );
    }
    if let Some(z) = &r.checks.zeta {
        println!(
            "zeta max         zeta1 {:.4}, zeta2 {:.4} over {} paths",
            z.zeta1_max, z.zeta2_max, z.n_used
        );
    }
    println!(
        "throughput       {:.3e} paths/s on {} workers ({:.2}s)",
        report.timing.paths_per_second, report.timing.threads, report.timing.wall_seconds
    );
    for w in &r.warnings {
        println!("warning          {w}");
    }
    println!("output           {}", config.output_dir.display());
}

fn run(args: &RunArgs) -> Result<(), ExperimentError> {
    let config = args.config()?;
    let report = run_experiment(&config)?;
    print_summary(&config, &report);
    if report.results.status == RunStatus::Warning {
        eprintln!("mgtail: run finished with warnings, see report.json");
    }
    Ok(())
}

fn models(json: bool) -> Result<(), ExperimentError> {
    let catalog = list_models();
    if json {
        let text = serde_json::to_string_pretty(&catalog)
            .map_err(|e| ExperimentError::Invariant(e.to_string()))?;
        println!("{text}");
        return Ok(());
    }
    for m in &catalog {
        println!("{}  {}  {}", m.letter, m.name, m.description);
        for p in &m.parameters {
            println!("     {:<14} {}", p.key, p.constraint);
        }
        println!("     oracles: {}", m.oracles);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Models { json } => models(*json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mgtail: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Command-line front end for adaptive conformal anomaly scoring.
//!
//! ```text
//! acas score    --input series.csv --output scores.csv [--horizons 15 --forecaster naive ...]
//! acas evaluate --scores scores.csv --series series.csv --metrics metrics.json --curve curve.csv
//! acas simulate --shift jump --report report.json --table table.csv
//! ```

pub mod config;
pub mod evaluate;
pub mod methods;
pub mod score;
pub mod scorefile;
pub mod simulate;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{CommonArgs, Mode, RunConfig, SimulationArgs};

#[derive(Debug, Parser)]
#[command(name = "acas", version, about = "Calibrated anomaly p-values from forecast errors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a series and write per-timestamp p-values.
    Score(ScoreArgs),
    /// Compute detection metrics for score files against labelled series.
    Evaluate(EvaluateArgs),
    /// Run the synthetic calibration study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Series CSV: one column per feature, optional `label` column.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Score CSV destination (stdout if omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Score file; repeat together with --series for several series.
    #[arg(long, required = true)]
    pub scores: Vec<PathBuf>,
    /// Labelled series matching each --scores file.
    #[arg(long, required = true)]
    pub series: Vec<PathBuf>,
    /// Metrics JSON destination (stdout if omitted).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Per-threshold FPR/metric curve CSV destination.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Report JSON destination (stdout if omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Calibration table CSV destination.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub simulation: SimulationArgs,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("starting worker threads")?;
    pool.install(job)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(args) => {
            let cfg = RunConfig::resolve(Mode::Score, &args.common, None)?;
            log::info!("scoring {} with {}", args.input.display(), cfg.method);
            let mut out = sink(args.output.as_deref())?;
            let summary = with_threads(cfg.threads, || score::cmd_score(&cfg, &args.input, &mut out))?;
            out.flush()?;
            log::info!(
                "{} rows, {} feature(s) x {} horizon(s), {} detections",
                summary.rows,
                summary.features,
                summary.horizons,
                summary.detections
            );
        }
        Command::Evaluate(args) => {
            if args.scores.len() != args.series.len() {
                bail!(
                    "got {} --scores files but {} --series files; pass them in pairs",
                    args.scores.len(),
                    args.series.len()
                );
            }
            let cfg = RunConfig::resolve(Mode::Evaluate, &args.common, None)?;
            let pairs: Vec<(&Path, &Path)> = args
                .scores
                .iter()
                .zip(&args.series)
                .map(|(a, b)| (a.as_path(), b.as_path()))
                .collect();
            let report = evaluate::evaluate_files(&cfg, &pairs)?;
            let mut out = sink(args.metrics.as_deref())?;
            evaluate::write_metrics(&report, &mut out)?;
            out.flush()?;
            if let Some(path) = &args.curve {
                let mut out = sink(Some(path))?;
                evaluate::write_curve(&report, &mut out)?;
                out.flush()?;
            }
        }
        Command::Simulate(args) => {
            let cfg = RunConfig::resolve(Mode::Simulate, &args.common, Some(&args.simulation))?;
            let report = with_threads(cfg.threads, || simulate::run_study(&cfg))?;
            let mut out = sink(args.report.as_deref())?;
            simulate::write_report(&report, &mut out)?;
            out.flush()?;
            if let Some(path) = &args.table {
                let mut out = sink(Some(path))?;
                simulate::write_table(&report, &mut out)?;
                out.flush()?;
            }
        }
    }
    Ok(())
}

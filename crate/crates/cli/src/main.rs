//! `motiondepth` — reproducible depth-from-motion experiments.
//!
//! Subcommands: `generate` (render datasets), `run` (drive the pipeline and
//! emit metrics/traces/depth maps), `sweep` (estimator × plane-count grid).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use motiondepth::error::Error;
use motiondepth_cli::commands;
use motiondepth_cli::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "motiondepth", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Scene count override.
    #[arg(long)]
    scenes: Option<usize>,
    /// Orientation noise magnitude N0 override (radians).
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render scenes to disk (PGM images, PFM depths, JSON sidecars).
    Generate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the pipeline; writes metrics.csv, trace.jsonl and depth PFMs.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Estimator: oracle | oracle-clamped | plane-sweep.
        #[arg(long)]
        estimator: Option<String>,
        /// Number of planes n (1..=4).
        #[arg(long)]
        planes: Option<usize>,
        /// Run from a generated dataset directory instead of rendering.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Also write inverse-depth PGM visualizations.
        #[arg(long)]
        viz: bool,
    },
    /// Sweep estimators and plane counts over shared scenes.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated plane counts, e.g. 1,2,3.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        planes: Vec<usize>,
        /// Comma-separated estimator names.
        #[arg(long, value_delimiter = ',', default_value = "oracle-clamped")]
        estimators: Vec<String>,
    },
}

fn load_config(common: &CommonOpts) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(scenes) = common.scenes {
        cfg.scene_count = scenes;
    }
    if let Some(noise) = common.noise {
        cfg.noise_n0 = noise;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { common } => {
            let cfg = load_config(&common)?;
            commands::cmd_generate(&cfg, &common.out)
        }
        Command::Run { common, estimator, planes, dataset, viz } => {
            let mut cfg = load_config(&common)?;
            if let Some(name) = estimator {
                cfg.estimator.name = name;
            }
            if let Some(n) = planes {
                cfg.pipeline.planes = n;
            }
            if let Some(dir) = dataset {
                cfg.dataset = Some(dir);
            }
            if viz {
                cfg.write_viz = true;
            }
            commands::cmd_run(&cfg, &common.out)
        }
        Command::Sweep { common, planes, estimators } => {
            let cfg = load_config(&common)?;
            commands::cmd_sweep(&cfg, &planes, &estimators, &common.out)
        }
    }
}

/// Exit codes by error category: 2 config, 3 io/format, 4 runtime.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io { .. } | Error::Format { .. } => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! `waveunet`: synthesize data, train, fine-tune, enhance, evaluate and
//! self-check a Wave-U-Net speech enhancer.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 runtime
//! failure, 3 partial results.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use log::info;

use commands::Status;
use config::{Overrides, RunConfig};

/// An error caused by bad input rather than a failed computation.
#[derive(Debug)]
pub struct UserError(pub String);

impl fmt::Display for UserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

#[derive(Debug, Parser)]
#[command(name = "waveunet", version, about = "Wave-U-Net speech enhancement")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `seed` (and `train.seed`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides `model.num_layers`.
    #[arg(long, global = true, value_name = "N")]
    layers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic noisy-speech corpus and its manifest.
    SynthData {
        /// Output directory (default `paths.data_dir`).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Train from scratch with early stopping.
    Train {
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        /// Run directory for checkpoints and the log (default `paths.run_dir`).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Continue the interrupted run in the run directory.
        #[arg(long)]
        resume: bool,
    },
    /// Fine-tune a checkpoint at the reduced learning rate and doubled batch.
    Finetune {
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        /// Starting weights (default `<run_dir>/best.ckpt`).
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Enhance WAV files, or the test split of the manifest when no inputs
    /// are given.
    Enhance {
        /// WAV files or directories of WAV files.
        inputs: Vec<PathBuf>,
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Score enhanced test clips against their clean references.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        /// Directory of `<id>.wav` files (default `paths.enhanced_dir`).
        #[arg(long, value_name = "DIR")]
        enhanced: Option<PathBuf>,
        /// Tab-separated `id  score` table from an external PESQ tool.
        #[arg(long, value_name = "PATH")]
        pesq_scores: Option<PathBuf>,
        /// Report path (default `paths.report`).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of every differentiable op and the network.
    Gradcheck {
        /// Scale the backward pass of one op, `OP[:FACTOR]`.
        #[arg(long, hide = true, value_name = "OP")]
        inject_fault: Option<String>,
    },
}

fn run(cli: Cli) -> Result<Status> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        layers: cli.layers,
    });
    cfg.validate()?;
    info!("resolved configuration:\n{}", cfg.to_toml());

    match cli.command {
        Command::SynthData { out } => commands::synth_data(&cfg, out),
        Command::Train { manifest, out, resume } => commands::train(&cfg, manifest, out, resume),
        Command::Finetune {
            manifest,
            checkpoint,
            out,
        } => commands::finetune_cmd(&cfg, manifest, checkpoint, out),
        Command::Enhance {
            inputs,
            manifest,
            checkpoint,
            out,
        } => commands::enhance_cmd(&cfg, &inputs, manifest, checkpoint, out),
        Command::Evaluate {
            manifest,
            enhanced,
            pesq_scores,
            out,
        } => commands::evaluate_cmd(&cfg, manifest, enhanced, pesq_scores, out),
        Command::Gradcheck { inject_fault } => commands::gradcheck(&cfg, inject_fault.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WAVEUNET_LOG", "info")).init();

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
    match run(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UserError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

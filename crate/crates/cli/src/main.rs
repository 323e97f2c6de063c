//! `uika`: sampling, pseudo-labelling, the three training stages,
//! evaluation and ablation grids from one binary.
//!
//! Logging goes to stderr at the level named by `UIKA_LOG` (error, warn,
//! info or debug; default warn).

mod commands;
mod output;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uika_core::synthetic::SyntheticConfig;

use crate::setup::Common;

#[derive(Debug, Parser)]
#[command(name = "uika", version, about = "Aspect-level sentiment pretraining from sampled sentence-level data")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Retrieve source sentences related to the target training set.
    Sample,
    /// Turn sampled sentences into pseudo aspect-level instances.
    Pseudo {
        /// Sentence JSON-lines file, usually a `sample` output.
        #[arg(long)]
        input: PathBuf,
    },
    /// Stage 1: pretrain on pseudo-labelled source data.
    Pretrain {
        /// Train on these pseudo instances instead of sampling afresh.
        #[arg(long)]
        pseudo: Option<PathBuf>,
    },
    /// Stage 2: knowledge guidance on the target training set.
    Guide {
        /// Stage-1 checkpoint.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Stage 3: fine-tune on the target training set.
    Finetune {
        /// Stage-2 checkpoint.
        #[arg(long)]
        from: PathBuf,
    },
    /// Accuracy and macro-F1 of a checkpoint on the target test set.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// All stages for one seed, evaluated when a test set is configured.
    Pipeline,
    /// Run a grid of configurations over the seed list.
    Ablate {
        /// sampling, alpha, beta, components, benchmark or single.
        #[arg(long)]
        grid: String,
    },
    /// Write the synthetic two-domain benchmark and a config for it.
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        data_seed: u64,
        #[arg(long)]
        source_per_domain: Option<usize>,
        #[arg(long)]
        target_train: Option<usize>,
        #[arg(long)]
        target_test: Option<usize>,
    },
    #[command(hide = true)]
    AblateCell {
        #[arg(long)]
        grid: String,
        #[arg(long)]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Cmd::Synth { dir, data_seed, source_per_domain, target_train, target_test } = &cli.command {
        let defaults = SyntheticConfig::default();
        let config = SyntheticConfig {
            seed: *data_seed,
            source_per_domain: source_per_domain.unwrap_or(defaults.source_per_domain),
            target_train: target_train.unwrap_or(defaults.target_train),
            target_test: target_test.unwrap_or(defaults.target_test),
            ..defaults
        };
        return commands::synth(&commands::SynthOptions { dir: dir.clone(), config });
    }
    let cfg = cli.common.load()?;
    match &cli.command {
        Cmd::Sample => commands::sample(&cfg),
        Cmd::Pseudo { input } => commands::pseudo(&cfg, input),
        Cmd::Pretrain { pseudo } => commands::pretrain(&cfg, pseudo.as_deref()),
        Cmd::Guide { from } => commands::guide(&cfg, from.as_deref()),
        Cmd::Finetune { from } => commands::finetune(&cfg, from),
        Cmd::Eval { checkpoint } => commands::eval(&cfg, checkpoint),
        Cmd::Pipeline => commands::pipeline(&cfg),
        Cmd::Ablate { grid } => commands::ablate(&cfg, grid),
        Cmd::AblateCell { grid, output } => commands::ablate_cell(&cfg, grid, output),
        Cmd::Synth { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UIKA_LOG", "warn"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

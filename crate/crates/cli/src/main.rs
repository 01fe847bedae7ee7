mod commands;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wheelgen_core::config::RunConfig;

/// Batch driver for the wheel generative-design pipeline: dataset
/// generation, surrogate and agent training, strategy evaluation, and
/// report emission.
#[derive(Parser)]
#[command(name = "wheelgen", version, about)]
struct Cli {
    /// Run configuration file (flat key = value); defaults apply when
    /// omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate procedural reference designs with a train/test manifest.
    GenRefs {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the 121-cell optimizer grid per reference into a dataset store
    /// (resumable; complete references are skipped).
    GenDataset {
        /// Directory produced by gen-refs.
        #[arg(long)]
        refs: PathBuf,
        /// Output store file.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        parallel: Option<usize>,
        /// Dump the stiffness matrix of the first reference in triplet form
        /// and exit (diagnostic).
        #[arg(long, hide = true)]
        dump_k: Option<PathBuf>,
    },
    /// Train the optimizer surrogate on a dataset store.
    TrainSurrogate {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Train without rotation/noise augmentation (ablation support).
        #[arg(long)]
        no_augmentation: bool,
    },
    /// Evaluate a surrogate checkpoint on the held-out references.
    EvalSurrogate {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the PPO diversity agent.
    TrainAgent {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Surrogate checkpoint; required for env.backend = surrogate.
        #[arg(long)]
        surrogate: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the trained agent with equ-distance, greedy and exhaustive
    /// strategies on the held-out references.
    EvalStrategies {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Trained agent checkpoint (omit to evaluate baselines only).
        #[arg(long)]
        agent: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train agents against surrogate checkpoints of increasing quality and
    /// compare the reachable diversity (surrogate-error ablation).
    AblateSurrogateError {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Surrogate checkpoints ordered by training steps; defaults to the
        /// three checkpoint_steps files under --surrogate-dir.
        #[arg(long)]
        surrogate_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit CSV tables and design sheets from evaluation outputs.
    Report {
        /// Directory holding eval-strategies / ablation outputs.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.cmd {
        Cmd::GenRefs { count, seed, out } => commands::gen_refs(&config, count, seed, &out),
        Cmd::GenDataset {
            refs,
            out,
            parallel,
            dump_k,
        } => commands::gen_dataset(&config, &refs, &out, parallel, dump_k.as_deref()),
        Cmd::TrainSurrogate {
            refs,
            dataset,
            out,
            no_augmentation,
        } => commands::train_surrogate(&config, &refs, &dataset, &out, !no_augmentation),
        Cmd::EvalSurrogate {
            refs,
            dataset,
            checkpoint,
            out,
        } => commands::eval_surrogate(&config, &refs, &dataset, &checkpoint, &out),
        Cmd::TrainAgent {
            refs,
            dataset,
            surrogate,
            out,
        } => commands::train_agent(&config, &refs, &dataset, surrogate.as_deref(), &out),
        Cmd::EvalStrategies {
            refs,
            dataset,
            agent,
            out,
        } => commands::eval_strategies(&config, &refs, &dataset, agent.as_deref(), &out),
        Cmd::AblateSurrogateError {
            refs,
            dataset,
            surrogate_dir,
            out,
        } => commands::ablate_surrogate_error(&config, &refs, &dataset, &surrogate_dir, &out),
        Cmd::Report { run, out } => report::emit(&config, &run, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let user_error = e.downcast_ref::<wheelgen_core::Error>().is_some_and(|c| {
                matches!(
                    c,
                    wheelgen_core::Error::Config(_)
                        | wheelgen_core::Error::InvalidSpec(_)
                        | wheelgen_core::Error::MissingCache(_)
                        | wheelgen_core::Error::Format(_)
                        | wheelgen_core::Error::Io(_)
                )
            });
            ExitCode::from(if user_error { 1 } else { 2 })
        }
    }
}

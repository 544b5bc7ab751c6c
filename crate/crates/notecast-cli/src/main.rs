//! Pipeline driver: one declarative JSON config, one subcommand per stage.
//!
//! Stages exit nonzero on failure and print a single-line machine-parseable
//! error JSON to stderr; human-readable progress goes to stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use notecast::pipeline::{
    run_eval, run_forge, run_judge, run_predict, run_synth, run_train, PipelineError, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "notecast",
    about = "Temporally grounded clinical forecasting pipeline",
    version
)]
struct Cli {
    /// Path to the run configuration (JSON).
    #[arg(long, global = true, default_value = "notecast.json")]
    config: PathBuf,

    /// Override every stage seed with one value.
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    /// Worker threads for intra-stage parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the artifact directory from the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate the synthetic corpus (notes + ground truth).
    Synth,
    /// Build labeled prediction examples and the train/test partition.
    Forge,
    /// Train the stochastic logistic policy.
    Train,
    /// Produce probability forecasts for a dataset.
    Predict,
    /// Score predictions and emit metrics + reliability bins.
    Eval,
    /// Blind pairwise trace comparison between two prediction files.
    Judge,
    /// synth → forge → train → predict → eval.
    All,
}

impl Command {
    fn stage_name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Forge => "forge",
            Command::Train => "train",
            Command::Predict => "predict",
            Command::Eval => "eval",
            Command::Judge => "judge",
            Command::All => "all",
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut config = RunConfig::from_file(&cli.config)?;
    if let Some(seed) = cli.seed_override {
        config.override_seeds(seed);
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(out_dir) = &cli.out_dir {
        config.out_dir = out_dir.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run_stage(command: Command, config: &RunConfig) -> Result<(), PipelineError> {
    match command {
        Command::Synth => {
            let report = run_synth(config)?;
            println!(
                "synth: {} trajectories ({} notes, {} patients) -> {}",
                report.n_trajectories,
                report.n_notes,
                report.n_patients,
                config.out_dir.display()
            );
        }
        Command::Forge => {
            let report = run_forge(config)?;
            println!(
                "forge: {} examples from {} trajectories (positive rate {:.3}, {} unresolvable dropped, {} splits skipped); train {} / test {}",
                report.stats.n_examples,
                report.stats.n_trajectories,
                report.stats.positive_rate,
                report.unresolvable_dropped,
                report.skipped_splits.len(),
                report.train_stats.n_examples,
                report.test_stats.n_examples,
            );
        }
        Command::Train => {
            let report = run_train(config)?;
            match report.best_heldout_reward {
                Some(reward) => println!(
                    "train: {} steps, best checkpoint at step {} (held-out reward {:.4})",
                    report.steps_run, report.best_step, reward
                ),
                None => println!("train: {} steps (no held-out slice)", report.steps_run),
            }
            if let Some(step) = report.diverged_at {
                println!("train: diverged at step {step}; kept last good checkpoint");
            }
        }
        Command::Predict => {
            let report = run_predict(config)?;
            println!(
                "predict: {}/{} examples forecast by {} ({} failures)",
                report.n_predictions, report.n_examples, report.model_name, report.n_failures
            );
        }
        Command::Eval => {
            let output = run_eval(config)?;
            let auroc = output
                .report
                .auroc
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into());
            let lift = output
                .report
                .top_decile_lift
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into());
            println!(
                "eval[{}]: n={} reward={:.4} brier={:.4} ece={:.4} auroc={} top10lift={}",
                output.model_name,
                output.report.n,
                output.report.mean_reward,
                output.report.brier,
                output.report.ece,
                auroc,
                lift
            );
        }
        Command::Judge => {
            let output = run_judge(config)?;
            println!(
                "judge: {} pairs ({} skipped), overall win rate for {} vs {}: {:.1}%",
                output.n_pairs_judged,
                output.skipped_pairs,
                output.system_a,
                output.system_b,
                output.table.overall * 100.0
            );
            for (dimension, rate) in &output.table.per_dimension {
                println!("  {}: {:.1}%", dimension.as_str(), rate * 100.0);
            }
        }
        Command::All => {
            for stage in [
                Command::Synth,
                Command::Forge,
                Command::Train,
                Command::Predict,
                Command::Eval,
            ] {
                run_stage(stage, config)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = cli.command.stage_name();

    let config = match load_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{}", e.to_error_json(stage));
            return ExitCode::FAILURE;
        }
    };

    match run_stage(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_error_json(stage));
            ExitCode::FAILURE
        }
    }
}

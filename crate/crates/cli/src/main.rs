use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use tenk_core::pipeline::{exit_code, Overrides, Pipeline, PipelineConfig, Stage, StageStatus};
use tenk_core::synth;

#[derive(Parser)]
#[command(
    name = "tenk",
    version,
    about = "10-K text to stock-direction datasets, baselines, and reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StageArgs {
    /// Pipeline config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Only train, predict, and evaluate this test fold.
    #[arg(long)]
    fold: Option<usize>,
    /// Only this horizon, in months.
    #[arg(long)]
    horizon: Option<u32>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// External prediction file or directory to evaluate.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Download 10-K filings for the universe into the cache.
    Ingest(StageArgs),
    /// Extract Items 1A, 3, 7 and 7A.
    Parse(StageArgs),
    /// Summarize extracted items.
    Summarize(StageArgs),
    /// Attach price-direction labels.
    Label(StageArgs),
    /// Join summaries and labels; plan folds.
    Dataset(StageArgs),
    /// Fit the baseline classifier for every fold, trial, and horizon.
    Train(StageArgs),
    /// Write prediction files from trained models.
    Predict(StageArgs),
    /// Score predictions and run the random baseline.
    Evaluate(StageArgs),
    /// Render the report tables.
    Report(StageArgs),
    /// Run every stage in order.
    All(StageArgs),
    /// Write the synthetic fixture corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = synth::DEFAULT_SEED)]
        seed: u64,
    },
}

fn run_stages(args: &StageArgs, stages: &[Stage]) -> tenk_core::Result<()> {
    let mut config = PipelineConfig::load(&args.config)?;
    config.apply(&Overrides {
        fold: args.fold,
        horizon: args.horizon,
        seed: args.seed,
        predictions: args.predictions.clone(),
    })?;
    let pipeline = Pipeline::new(config)?;
    for &stage in stages {
        let outcome = pipeline.run_stage(stage)?;
        match outcome.status {
            StageStatus::UpToDate => println!("{stage}: up to date"),
            StageStatus::Ran => println!("{stage}: wrote {} file(s)", outcome.outputs.len()),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(a) => run_stages(a, &[Stage::Ingest]),
        Command::Parse(a) => run_stages(a, &[Stage::Parse]),
        Command::Summarize(a) => run_stages(a, &[Stage::Summarize]),
        Command::Label(a) => run_stages(a, &[Stage::Label]),
        Command::Dataset(a) => run_stages(a, &[Stage::Dataset]),
        Command::Train(a) => run_stages(a, &[Stage::Train]),
        Command::Predict(a) => run_stages(a, &[Stage::Predict]),
        Command::Evaluate(a) => run_stages(a, &[Stage::Evaluate]),
        Command::Report(a) => run_stages(a, &[Stage::Report]),
        Command::All(a) => run_stages(a, &Stage::ALL),
        Command::Synth { out, seed } => synth::generate_corpus(out, *seed).map(|s| {
            info!("generated {} filings", s.filings.len());
            println!(
                "wrote {} companies, {} filings to {}",
                s.companies,
                s.filings.len(),
                out.display()
            );
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

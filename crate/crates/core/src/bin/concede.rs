//! Batch entry point: ingest -> extract -> bootstrap -> train/selftrain ->
//! predict -> evaluate -> distribution, driven by a TOML config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use concede_core::config::load_config;
use concede_core::corpus::Split;
use concede_core::pipeline::{Outcome, Pipeline, PipelineError};

#[derive(Parser)]
#[command(
    name = "concede",
    version,
    about = "Detect argumentative concessions in discussion threads and relate them to persuasion outcomes"
)]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true, default_value = "concede.toml")]
    config: PathBuf,

    /// Rerun even when outputs are up to date for this config.
    #[arg(long, global = true)]
    force: bool,

    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured worker-thread count (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize the configured corpora.
    Ingest,
    /// Extract marker instances with context windows from ingested corpora.
    Extract,
    /// Count all 19 candidate markers split by persuasion outcome.
    Census,
    /// Grow the pattern lexicon from the seed phrases over unlabeled spans.
    Bootstrap,
    /// Build the feature space and train the no-self-training baseline.
    Train,
    /// Run the pool-based self-training sweep and keep the best model.
    Selftrain,
    /// Label a split with the pattern+classifier system combination.
    Predict {
        /// Which split to label.
        #[arg(long, default_value = "test")]
        split: String,
        /// Which model artifact to use: auto, best, or nost.
        #[arg(long, default_value = "auto")]
        model: String,
    },
    /// Score predictions against gold labels.
    Evaluate {
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Tabulate arg_c counts across persuasion outcomes with significance.
    Distribution {
        /// Label source: gold or predicted.
        #[arg(long, default_value = "gold")]
        source: String,
    },
    /// Inter-annotator agreement over the crowd labels.
    Agreement,
}

fn parse_split(s: &str) -> Result<Split, PipelineError> {
    match s {
        "train" => Ok(Split::Train),
        "dev" => Ok(Split::Dev),
        "test" => Ok(Split::Test),
        "unlabeled" => Ok(Split::Unlabeled),
        other => Err(PipelineError::Data(format!(
            "unknown split `{other}` (expected train, dev, test, or unlabeled)"
        ))),
    }
}

fn print_outcome(outcome: &Outcome) {
    for msg in &outcome.messages {
        println!("{msg}");
    }
    if !outcome.skipped {
        for artifact in &outcome.artifacts {
            println!("wrote {}", artifact.display());
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let loaded = load_config(&cli.config, cli.seed, cli.out.as_deref(), cli.jobs)?;

    let jobs = loaded.config.jobs;
    if jobs > 0 {
        // ignore failure when a pool already exists (tests, repeated calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let pipeline = Pipeline::new(loaded);
    let force = cli.force;
    let outcome = match &cli.command {
        Command::Ingest => pipeline.ingest(force)?,
        Command::Extract => pipeline.extract(force)?,
        Command::Census => pipeline.census(force)?,
        Command::Bootstrap => pipeline.bootstrap(force)?,
        Command::Train => pipeline.train(force)?,
        Command::Selftrain => pipeline.selftrain(force)?,
        Command::Predict { split, model } => {
            pipeline.predict(parse_split(split)?, model, force)?
        }
        Command::Evaluate { split } => pipeline.evaluate(parse_split(split)?, force)?,
        Command::Distribution { source } => pipeline.distribution(source, force)?,
        Command::Agreement => pipeline.agreement(force)?,
    };
    print_outcome(&outcome);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

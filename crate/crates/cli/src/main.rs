//! `tdur`: ingest registry XML, build features, train and compare duration
//! models, and explain predictions.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "tdur", version, about = "Clinical trial duration prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Run configuration shared by the commands that train or embed.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Embedding width; also resets the model widths to their defaults for it.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Override one config field by dotted path, e.g. `train.lr=0.0005`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a directory of registry XML files into a JSONL dataset.
    Ingest {
        /// Directory searched recursively for *.xml files.
        #[arg(long)]
        input: PathBuf,
        /// Output JSONL dataset.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print duration statistics overall and per phase as JSON.
    Stats {
        /// JSONL dataset.
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Split a dataset by start date into train.jsonl and test.jsonl.
    Split {
        /// JSONL dataset.
        #[arg(long)]
        dataset: PathBuf,
        /// Trials starting on or after this date (YYYY-MM-DD) go to test.
        #[arg(long)]
        cutoff: Option<chrono::NaiveDate>,
        /// Directory for train.jsonl and test.jsonl.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Embed every sentence, drug and condition of the datasets into a cache file.
    Embed {
        /// JSONL datasets. Repeatable.
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        /// Output embedding cache.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train the attention model, one run per seed.
    Train {
        /// Training JSONL.
        #[arg(long)]
        train: PathBuf,
        /// Run directory; each seed writes seed-<s>/.
        #[arg(long, default_value = "runs/hier")]
        out: PathBuf,
        /// Train only on trials of this phase (1-4).
        #[arg(long)]
        phase: Option<u8>,
        /// Sentence pooling. Only `mean` applies to sentence-vector providers.
        #[arg(long, value_enum, default_value_t = Pool::Mean)]
        pool: Pool,
        /// Number of epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Adam learning rate.
        #[arg(long)]
        lr: Option<f64>,
        /// Minibatch size.
        #[arg(long)]
        batch_size: Option<usize>,
        /// Comma-separated seeds; each gives one run.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Fit baseline regressors on flattened features, one run per seed.
    Baseline {
        /// Training JSONL.
        #[arg(long)]
        train: PathBuf,
        /// Baselines to fit.
        #[arg(long, value_delimiter = ',', default_value = "mean,ridge,gbdt,mlp")]
        models: Vec<BaselineKind>,
        /// Directory; each model writes <model>/seed-<s>.json.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate models on a test set and compare them against a reference.
    Evaluate {
        /// Test JSONL.
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated models: a name resolved under --runs, or name=path.
        #[arg(long, value_delimiter = ',', required = true)]
        models: Vec<String>,
        /// Directory holding one subdirectory per model.
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        /// Model the others are tested against.
        #[arg(long = "ref")]
        reference: Option<String>,
        /// Output stem; writes <stem>.json and <stem>.csv.
        #[arg(long, default_value = "report")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict durations with a trained checkpoint, one JSON line per trial.
    Predict {
        /// Checkpoint directory (holds manifest.json).
        #[arg(long)]
        checkpoint: PathBuf,
        /// JSONL dataset.
        #[arg(long)]
        dataset: PathBuf,
        /// Only this trial.
        #[arg(long)]
        nct: Option<String>,
    },
    /// Shapley attribution of one prediction to its criteria.
    Explain {
        /// Checkpoint directory (holds manifest.json).
        #[arg(long)]
        checkpoint: PathBuf,
        /// JSONL dataset containing the trial.
        #[arg(long)]
        dataset: PathBuf,
        /// Trial to explain.
        #[arg(long)]
        nct: String,
        /// Attribution unit; `word` also explains the words of one sentence.
        #[arg(long, value_enum, default_value_t = UnitArg::Sentence)]
        unit: UnitArg,
        /// Criteria sentence (0-based, inclusion first) for word attribution;
        /// defaults to the sentence with the largest |value|.
        #[arg(long)]
        sentence: Option<usize>,
        /// Exact enumeration, permutation sampling, or exact when at most 12 items.
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Permutations in sampled mode.
        #[arg(long, default_value_t = 1000)]
        perms: usize,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output stem; writes <stem>.txt, <stem>.html and <stem>.json.
        #[arg(long, default_value = "attribution")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Pool {
    Mean,
    Max,
    Cls,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    Mean,
    Ridge,
    Gbdt,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Sentence,
    Word,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Exact,
    Sampled,
}

fn run(cli: Cli) -> Result<(), CliError> {
    use commands as c;
    match cli.command {
        Command::Ingest { input, out } => c::ingest(&input, &out),
        Command::Stats { dataset } => c::stats(&dataset),
        Command::Split {
            dataset,
            cutoff,
            out_dir,
            config,
        } => c::split(&dataset, cutoff, &out_dir, &config),
        Command::Embed { dataset, out, config } => c::embed(&dataset, &out, &config),
        Command::Train {
            train,
            out,
            phase,
            pool,
            epochs,
            lr,
            batch_size,
            seeds,
            config,
        } => c::train(
            &train,
            &out,
            c::TrainFlags {
                phase,
                pool,
                epochs,
                lr,
                batch_size,
                seeds,
            },
            &config,
        ),
        Command::Baseline {
            train,
            models,
            out,
            seeds,
            config,
        } => c::baseline(&train, &models, &out, seeds, &config),
        Command::Evaluate {
            test,
            models,
            runs,
            reference,
            out,
            config,
        } => c::evaluate(&test, &models, &runs, reference.as_deref(), &out, &config),
        Command::Predict {
            checkpoint,
            dataset,
            nct,
        } => c::predict(&checkpoint, &dataset, nct.as_deref()),
        Command::Explain {
            checkpoint,
            dataset,
            nct,
            unit,
            sentence,
            mode,
            perms,
            seed,
            out,
        } => c::explain(
            &checkpoint,
            &dataset,
            &nct,
            c::ExplainFlags {
                unit,
                sentence,
                mode,
                perms,
                seed,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&rendered).trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code)
        }
    }
}

//! `edaqc` — EDA motion-artifact pipeline: synthesize paired-channel
//! corpora, label windows by reference correlation, extract the canonical
//! 52-feature vectors, evaluate classifiers leave-one-subject-out against a
//! rule-based screen, and run single-channel detection with a trained model.

mod commands;
mod config;
mod corpus;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::RunConfig;
use edaqc::ml::ClassifierKind;

#[derive(Parser)]
#[command(name = "edaqc", version, about)]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON run configuration; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed governing every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic paired-channel corpus with ground-truth masks.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Override the configured subject count.
        #[arg(long)]
        subjects: Option<usize>,
        /// Override the configured per-subject duration, seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Label target windows by correlation against the reference channel.
    Label {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label target windows with the rule-based screen.
    Baseline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the canonical 52-feature vector per non-discarded window.
    Featurize {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also dump per-subject band components to this directory.
        #[arg(long)]
        dump_bands: Option<PathBuf>,
    },
    /// Leave-one-subject-out evaluation, with an optional rules comparison.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rules labels (from `baseline`) to include as the comparison row.
        #[arg(long)]
        baseline_labels: Option<PathBuf>,
        #[arg(long)]
        classifier: Option<ClassifierKind>,
        /// Disable feature selection.
        #[arg(long)]
        no_selection: bool,
    },
    /// Fit the full pipeline on every row and save a deployable model.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        classifier: Option<ClassifierKind>,
        #[arg(long)]
        no_selection: bool,
    },
    /// Single-channel detection with a trained model (no reference needed).
    Detect {
        #[arg(long)]
        model: PathBuf,
        /// Signal CSV; its sidecar JSON must sit next to it.
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretty-print an evaluation report.
    Report {
        #[arg(long)]
        report: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        // ignore the error when a pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some() {
        eprintln!("warning: built without the parallel feature; --threads has no effect");
    }

    let mut cfg =
        RunConfig::load(cli.config.as_deref()).map_err(CliError::Usage)?;
    cfg.apply_seed(cli.seed);

    match cli.command {
        Command::Synth {
            out,
            subjects,
            duration,
        } => {
            if let Some(n) = subjects {
                cfg.synth.n_subjects = n;
            }
            if let Some(d) = duration {
                cfg.synth.duration_s = d;
            }
            commands::cmd_synth(&cfg, &out)
        }
        Command::Label { corpus, out } => commands::cmd_label(&cfg, &corpus, &out),
        Command::Baseline { corpus, out } => commands::cmd_baseline(&cfg, &corpus, &out),
        Command::Featurize {
            corpus,
            labels,
            out,
            dump_bands,
        } => commands::cmd_featurize(&cfg, &corpus, &labels, &out, dump_bands.as_deref()),
        Command::Evaluate {
            features,
            out,
            baseline_labels,
            classifier,
            no_selection,
        } => {
            if let Some(kind) = classifier {
                cfg.ml.classifier = kind;
            }
            if no_selection {
                cfg.ml.selection = false;
            }
            commands::cmd_evaluate(&cfg, &features, baseline_labels.as_deref(), &out)
        }
        Command::Train {
            features,
            out,
            classifier,
            no_selection,
        } => {
            if let Some(kind) = classifier {
                cfg.ml.classifier = kind;
            }
            if no_selection {
                cfg.ml.selection = false;
            }
            commands::cmd_train(&cfg, &features, &out)
        }
        Command::Detect { model, signal, out } => commands::cmd_detect(&cfg, &model, &signal, &out),
        Command::Report { report } => commands::cmd_report(&report),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use dvngram::config::{ExperimentConfig, Mode};
use dvngram::ingest::{verify_archive, ACLIMDB_ARCHIVE_SHA256};
use dvngram::pipeline;
use dvngram::{Error, Result};

/// Document vectors trained on n-grams for sentiment classification.
#[derive(Debug, Parser)]
#[command(name = "dvngram", version)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Start from a named preset (dv-uni, dv-bi, dv-tri, dv-tri-unlabd,
    /// bo-uni, bo-bi, bo-tri, dv-tri+nbbo-tri).
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Training threads; more than one is faster but not bit-reproducible.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// aclImdb root directory.
    #[arg(long, global = true, value_name = "DIR")]
    dataset: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Also train vectors for the unlabeled reviews.
    #[arg(long, global = true)]
    use_unlabeled: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan the dataset and write the manifest.
    Ingest {
        /// Check a downloaded archive before use.
        #[arg(long, value_name = "TAR_GZ")]
        verify_archive: Option<PathBuf>,
        #[arg(long, default_value = ACLIMDB_ARCHIVE_SHA256, requires = "verify_archive")]
        expected_sha256: String,
    },
    /// Build and write the n-gram vocabulary.
    Vocab,
    /// Train document vectors for every run.
    Train,
    /// Train and score the classifier on existing vectors or bag features.
    Evaluate {
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Evaluate document vectors combined with NB-weighted bag-of-ngrams.
    Combine,
    /// Train (when needed) and evaluate in one go.
    Run,
    /// Print the resolved configuration as TOML.
    Config,
}

impl Cli {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => {
                return Err(Error::Usage(
                    "--config and --preset are mutually exclusive".into(),
                ))
            }
            (Some(path), None) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
        if let Some(v) = &self.dataset {
            c.dataset_path = v.clone();
        }
        if let Some(v) = &self.output {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.runs {
            c.runs = v;
        }
        if self.use_unlabeled {
            c.use_unlabeled = true;
        }
        match &self.command {
            Command::Evaluate { mode: Some(m) } => c.mode = *m,
            Command::Combine => c.mode = Mode::DvNbbo,
            _ => {}
        }
        c.validate()?;
        Ok(c)
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let config = cli.resolve()?;
    match &cli.command {
        Command::Ingest {
            verify_archive: archive,
            expected_sha256,
        } => {
            if let Some(path) = archive {
                verify_archive(path, expected_sha256)?;
                log::info!("{} matches {expected_sha256}", path.display());
            }
            let m = pipeline::cmd_ingest(&config)?;
            println!(
                "{}",
                serde_json::to_string(&m.counts()).expect("counts serialize")
            );
        }
        Command::Vocab => {
            let v = pipeline::cmd_vocab(&config)?;
            println!("{} tokens", v.len());
        }
        Command::Train => {
            let out = pipeline::cmd_train(&config)?;
            println!(
                "{} documents, {} tokens, {} runs",
                out.num_docs,
                out.vocab_size,
                out.reports.len()
            );
        }
        Command::Evaluate { .. } | Command::Combine => {
            print_report(&pipeline::cmd_evaluate(&config)?)
        }
        Command::Run => print_report(&pipeline::run_experiment(&config)?),
        Command::Config => print!("{}", config.to_toml()),
    }
    Ok(())
}

fn print_report(r: &pipeline::MetricsReport) {
    let accs: Vec<String> = r
        .accuracies
        .iter()
        .map(|a| format!("{:.2}", 100.0 * a))
        .collect();
    println!(
        "{} [{}]: mean {:.2}% over runs {}",
        r.name,
        r.mode,
        100.0 * r.mean_accuracy,
        accs.join(" ")
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

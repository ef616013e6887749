//! `trafficproof`: run simulation experiments and manage conformance vectors.
//!
//! Exit codes: 0 success, 1 verification or conformance failure, 2 config
//! error, 3 I/O error.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trafficproof::sim::{Mode, TraceError, WorldError};
use trafficproof::vectors::{self, VectorError};
use trafficproof::KdfConfig;

use config::{ConfigError, Overrides, RunConfig};
use run::RunError;

#[derive(Parser)]
#[command(name = "trafficproof", version, about = "Proof-of-traffic experiments and conformance vectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured mode and repeat, writing CSVs and summary.csv.
    Run(RunArgs),
    /// Generate or check crypto conformance vectors.
    #[command(subcommand)]
    Vectors(VectorsCommand),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Mode to run; repeat the flag for several (overrides `modes`).
    #[arg(long = "mode", value_name = "NAME")]
    modes: Vec<Mode>,
    /// Base seed (overrides `scenario.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Repeat count (overrides `repeats`).
    #[arg(long)]
    repeats: Option<u64>,
}

#[derive(Subcommand)]
enum VectorsCommand {
    /// Write freshly derived vectors.
    Gen {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Destination file; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        kdf: KdfArgs,
    },
    /// Re-derive every record of a vector file.
    Check {
        file: PathBuf,
        #[command(flatten)]
        kdf: KdfArgs,
    },
}

#[derive(Args)]
struct KdfArgs {
    /// Use the iterated-hash KDF with this many SHA-256 rounds.
    #[arg(long, value_name = "N")]
    kdf_iterations: Option<u32>,
}

impl KdfArgs {
    fn config(&self) -> Result<KdfConfig, CliError> {
        match self.kdf_iterations {
            None => Ok(KdfConfig::PLAIN),
            Some(n) => KdfConfig::iterated(n).map_err(|e| {
                CliError::Config(ConfigError::Invalid { key: "--kdf-iterations".into(), reason: e.to_string() })
            }),
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("I/O error: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("verification failed: {0}")]
    Vectors(#[from] VectorError),
    #[error("simulation error: {0}")]
    Sim(WorldError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Vectors(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Sim(WorldError::Trace(TraceError::Io(_))) => 3,
            CliError::Sim(WorldError::Wire(_)) => 1,
            CliError::Sim(_) => 2,
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Sim(e) => CliError::Sim(e),
            RunError::Io { path, source } => CliError::Io { path, source },
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let mut config = RunConfig::load(&read(&args.config)?, &args.config)?;
    config.apply(Overrides { output_dir: args.output, modes: args.modes, seed: args.seed, repeats: args.repeats });
    config.validate()?;
    let rows = run::execute(&config)?;
    print!("{}", run::render_table(&rows));
    println!("wrote {}", config.output_dir.join(run::SUMMARY_CSV).display());
    Ok(())
}

fn vectors(cmd: VectorsCommand) -> Result<(), CliError> {
    match cmd {
        VectorsCommand::Gen { count, seed, output, kdf } => {
            let text = vectors::render(&vectors::generate(count, seed, kdf.config()?));
            match output {
                Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io { path, source }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        VectorsCommand::Check { file, kdf } => {
            let n = vectors::check_text(&read(&file)?, kdf.config()?)?;
            println!("{n} records ok");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Vectors(cmd) => vectors(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trafficproof: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

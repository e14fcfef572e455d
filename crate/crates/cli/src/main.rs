//! `certsum`: generate constructions, verify them and export artifacts.
//!
//! Exit codes: 0 all checks pass, 1 internal error, 2 parameter error,
//! 3 format error, 4 computation too large, 5 a verification check failed.

mod export;
mod gen;
mod output;
mod verify;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use certsum_core::Error;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "certsum", version, about = "Certified thin sets, frames and power sums")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "CERTSUM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a construction and write it with its certificate and manifest.
    Gen {
        #[command(subcommand)]
        target: gen::GenTarget,
    },
    /// Run a verifier on a stored artifact and print a JSON report.
    Verify {
        #[command(subcommand)]
        check: verify::VerifyCheck,
    },
    /// Convert an artifact to another format.
    Export(export::ExportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScanArg {
    Full,
    Sampled,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Nonzero,
    AllIntegers,
}

impl From<VariantArg> for certsum_core::StageVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Nonzero => certsum_core::StageVariant::Nonzero,
            VariantArg::AllIntegers => certsum_core::StageVariant::AllIntegers,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Format(_) | Error::Io(_)) => 3,
            CliError::Core(Error::TooLarge { .. }) => 4,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Everything the invocation needs besides its subcommand.
pub struct Context {
    pub argv: Vec<String>,
    pub threads: usize,
}

fn run() -> CliResult<bool> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let ctx = Context {
        argv: std::env::args().skip(1).collect(),
        threads: rayon::current_num_threads(),
    };
    match cli.command {
        Command::Gen { target } => gen::run(target, &ctx),
        Command::Verify { check } => verify::run(check),
        Command::Export(args) => export::run(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(5),
        Err(e) => {
            eprintln!("certsum: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Sibling path `stem.<suffix>` next to `path`.
pub fn sibling(path: &std::path::Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

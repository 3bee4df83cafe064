//! Library side of the `pmodulus` binary: argument and config handling,
//! command execution and result documents.

pub mod config;
pub mod report;
pub mod run;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub use config::{Cli, CommandKind, Format, RunConfig};
pub use report::ResultDocument;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(pmodulus::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<pmodulus::Error> for CliError {
    fn from(err: pmodulus::Error) -> Self {
        use pmodulus::Error as E;
        match err {
            E::DimensionMismatch(_)
            | E::InvalidDomain(_)
            | E::InvalidExponent(_)
            | E::InvalidParameter(_)
            | E::Parse { .. } => CliError::Config(err.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Diagnostics go to standard error as a single line.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(std::io::stderr(), "pmodulus: {err}");
            err.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    let config = RunConfig::from_cli(cli)?;
    if let Some(threads) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    }
    let document = run::run(&config)?;
    let rendered = match config.format {
        Format::Json => document.to_json(),
        Format::Csv => document.to_csv(),
    };
    match &config.output {
        Some(path) => std::fs::write(path, rendered)?,
        None => std::io::stdout().write_all(rendered.as_bytes())?,
    }
    if document.all_checks_passed() {
        Ok(EXIT_OK)
    } else {
        let failed: Vec<&str> = document.failed_checks().collect();
        let _ = writeln!(
            std::io::stderr(),
            "pmodulus: failed checks: {}",
            failed.join(", ")
        );
        Ok(EXIT_CHECK_FAILED)
    }
}

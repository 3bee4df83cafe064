use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pmodulus::catalog::{self, CatalogRequest};
use pmodulus::{BoxDomain, Exponent, QuadratureKind, QuadratureScheme};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pmodulus",
    version,
    about = "p-modulus and extremal densities of surface families"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<CommandKind>,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    /// Modulus, expected value and l(x) samples.
    Compute,
    /// Admissibility, co-area, route equivalence and extremality checks.
    Verify,
    /// Discrete oracle convergence table.
    CrossValidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureName {
    GaussLegendre,
    Midpoint,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Catalog family name.
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// Index box, `lo,hi` per axis separated by `;`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Surface parameter box, same syntax as `--u`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub v: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub r0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub r1: Option<f64>,
    /// Shear entries, comma separated, row-major.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Scale of the (p,q)-map.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Outer linear map for `condenser-linear`, comma separated, row-major.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Extra family parameter `name=value`; repeatable.
    #[arg(long = "param", global = true, value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    #[arg(long, global = true, value_enum)]
    pub quadrature: Option<QuadratureName>,
    #[arg(long, global = true)]
    pub order: Option<usize>,
    #[arg(long, global = true)]
    pub subdivisions: Option<usize>,
    /// Oracle grid resolutions, comma separated.
    #[arg(long, global = true)]
    pub ladder: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON or TOML file with RunConfig fields; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureFile {
    pub kind: Option<QuadratureName>,
    pub order: Option<usize>,
    pub subdivisions: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleFile {
    pub ladder: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Structured config file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<CommandKind>,
    pub family: Option<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub p: Option<f64>,
    pub u: Option<String>,
    pub v: Option<String>,
    pub b: Option<Vec<f64>>,
    pub matrix: Option<Vec<f64>>,
    #[serde(default)]
    pub quadrature: QuadratureFile,
    #[serde(default)]
    pub oracle: OracleFile,
    #[serde(default)]
    pub output: OutputFile,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let toml_like = path.extension().is_some_and(|e| e == "toml");
        if toml_like {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// Validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub family: String,
    pub request: CatalogRequest,
    pub exponent: Exponent,
    pub quadrature: QuadratureScheme,
    pub ladder: Vec<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Domains as given, echoed into the result document.
    pub u_text: Option<String>,
    pub v_text: Option<String>,
}

pub const DEFAULT_LADDER: [usize; 4] = [16, 32, 64, 128];

fn config_error(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

/// `lo,hi;lo,hi;…`
pub fn parse_box(text: &str) -> Result<BoxDomain, CliError> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for axis in text.split(';') {
        let values = parse_list(axis)?;
        match values.as_slice() {
            [lo, hi] => {
                lower.push(*lo);
                upper.push(*hi);
            }
            _ => return Err(config_error(format!("box axis `{axis}` must be `lo,hi`"))),
        }
    }
    BoxDomain::new(lower, upper).map_err(|e| config_error(e.to_string()))
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| config_error(format!("`{}` is not a number", t.trim())))
        })
        .collect()
}

fn parse_ladder(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| config_error(format!("`{}` is not a grid resolution", t.trim())))
        })
        .collect()
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let flags = &cli.flags;
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let command = cli
            .command
            .or(file.command)
            .ok_or_else(|| config_error("no command given (compute, verify or cross-validate)"))?;
        let family = flags
            .family
            .clone()
            .or(file.family)
            .ok_or_else(|| config_error("no family given; use --family"))?;
        if !catalog::NAMES.contains(&family.as_str()) {
            return Err(config_error(format!(
                "unknown family `{family}` (known: {})",
                catalog::NAMES.join(", ")
            )));
        }

        let mut parameters = file.parameters;
        for (key, value) in [("r0", flags.r0), ("r1", flags.r1), ("a", flags.a)] {
            if let Some(value) = value {
                parameters.insert(key.to_string(), value);
            }
        }
        for pair in &flags.params {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| config_error(format!("parameter `{pair}` is not name=value")))?;
            let value = value
                .trim()
                .parse::<f64>()
                .map_err(|_| config_error(format!("parameter `{pair}` has a non-numeric value")))?;
            parameters.insert(key.trim().to_string(), value);
        }

        let p = flags.p.or(file.p).unwrap_or(2.0);
        let exponent = Exponent::new(p)
            .map_err(|_| config_error(format!("p must be a finite number above 1, got {p}")))?;

        let u_text = flags.u.clone().or(file.u);
        let v_text = flags.v.clone().or(file.v);
        let b = match &flags.b {
            Some(text) => Some(parse_list(text)?),
            None => file.b,
        };
        let matrix = match &flags.matrix {
            Some(text) => Some(parse_list(text)?),
            None => file.matrix,
        };
        let request = CatalogRequest {
            u: u_text.as_deref().map(parse_box).transpose()?,
            v: v_text.as_deref().map(parse_box).transpose()?,
            parameters,
            b,
            matrix,
            p: Some(p),
        };

        let kind = match flags.quadrature.or(file.quadrature.kind) {
            Some(QuadratureName::Midpoint) => QuadratureKind::Midpoint,
            _ => QuadratureKind::GaussLegendre,
        };
        let default = QuadratureScheme::default();
        let order = flags
            .order
            .or(file.quadrature.order)
            .unwrap_or(default.order());
        let subdivisions = flags
            .subdivisions
            .or(file.quadrature.subdivisions)
            .unwrap_or(default.subdivisions());
        let quadrature = QuadratureScheme::new(kind, order, subdivisions)
            .map_err(|e| config_error(e.to_string()))?;

        let ladder = match &flags.ladder {
            Some(text) => parse_ladder(text)?,
            None => file
                .oracle
                .ladder
                .unwrap_or_else(|| DEFAULT_LADDER.to_vec()),
        };
        if ladder.is_empty() || ladder.iter().any(|&r| r < 2) {
            return Err(config_error(
                "oracle ladder needs resolutions of at least 2",
            ));
        }

        let threads = flags.threads.or(file.threads);
        if threads == Some(0) {
            return Err(config_error("--threads must be positive"));
        }

        Ok(Self {
            command,
            family,
            request,
            exponent,
            quadrature,
            ladder,
            output: flags.output.clone().or(file.output.path),
            format: flags.format.or(file.output.format).unwrap_or_default(),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            threads,
            u_text,
            v_text,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        RunConfig::from_cli(&Cli::try_parse_from(args).unwrap())
    }

    #[test]
    fn boxes() {
        let b = parse_box("0,2;-1,1").unwrap();
        assert_eq!(b.lower(), &[0.0, -1.0]);
        assert_eq!(b.upper(), &[2.0, 1.0]);
        assert!(parse_box("0").is_err());
        assert!(parse_box("1,0").is_err());
        assert!(parse_box("a,b").is_err());
    }

    #[test]
    fn flags_fill_the_request() {
        let cfg = parse(&[
            "pmodulus",
            "compute",
            "--family",
            "annulus-radial",
            "--r0",
            "1",
            "--r1",
            "2",
            "--p",
            "3",
        ])
        .unwrap();
        assert_eq!(cfg.command, CommandKind::Compute);
        assert_eq!(cfg.request.parameters["r1"], 2.0);
        assert_eq!(cfg.exponent.p(), 3.0);
        assert_eq!(cfg.ladder, DEFAULT_LADDER.to_vec());
    }

    #[test]
    fn invalid_settings_are_configuration_errors() {
        for args in [
            vec!["pmodulus", "compute", "--family", "nope"],
            vec!["pmodulus", "compute", "--family", "parallel", "--p", "1"],
            vec![
                "pmodulus", "compute", "--family", "parallel", "--order", "0",
            ],
            vec!["pmodulus", "compute"],
            vec!["pmodulus", "--family", "parallel"],
            vec![
                "pmodulus",
                "cross-validate",
                "--family",
                "parallel",
                "--ladder",
                "1,2",
            ],
        ] {
            assert!(matches!(parse(&args), Err(CliError::Config(_))), "{args:?}");
        }
    }
}

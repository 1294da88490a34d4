//! Batch runner for diagbench experiments. Each run writes a JSON report
//! and, for schedule commands, an optional CSV curve.
//!
//! Exit codes: 0 verdict pass, 1 verdict fail, 2 invalid input, 3 internal
//! error.

pub mod config;
pub mod report;
mod run;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{
    parse_exponent, Command, ConstructConfig, ExperimentConfig, GroupConfig, GroupName, HostConfig, HostKind, Model,
    OperatorConfig, OperatorName,
};
pub use report::Report;
pub use run::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<diagbench::Error> for CliError {
    fn from(e: diagbench::Error) -> Self {
        match e {
            diagbench::Error::Internal(msg) => CliError::Internal(msg),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "diagbench",
    version,
    about = "Diagonal and property-(A) experiments on finite-dimensional operator algebras"
)]
pub struct Cli {
    /// Read the whole experiment from a JSON config instead of a subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Also write the rows as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Compare the group diagonal with the canonical diagonal.
    VerifyDiagonal(GroupArgs),
    /// Span test for irreducibility.
    Irreducible(GroupArgs),
    /// Certify property (A) along a schedule of lifts.
    CertifyA(ScheduleArgs),
    /// Defects of averaged diagonals against a test operator.
    Converge(ConvergeArgs),
    /// Exact block-algebra constructions.
    Construct(ConstructArgs),
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "monomial")]
    pub group: GroupName,
    /// Group-spec JSON file; implies `--group file`.
    #[arg(long)]
    pub group_file: Option<PathBuf>,
}

impl GroupArgs {
    fn config(self) -> GroupConfig {
        let kind = if self.group_file.is_some() { GroupName::File } else { self.group };
        GroupConfig { kind, n: self.n, generators_file: self.group_file }
    }
}

#[derive(Debug, Args)]
pub struct HostArgs {
    #[arg(long, value_enum, default_value = "lp")]
    pub host: HostKind,
    #[arg(long, value_parser = parse_exponent, default_value = "2")]
    pub p: f64,
    #[arg(long)]
    pub dim: usize,
    /// Comma-separated host weights.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Lorentz weight exponent, `w_k = k^{-alpha}`.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl HostArgs {
    fn config(self) -> HostConfig {
        HostConfig { kind: self.host, p: self.p, dim: self.dim, weights: self.weights, alpha: self.alpha }
    }
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub host: HostArgs,
    #[arg(long, value_delimiter = ',')]
    pub schedule: Vec<usize>,
    #[arg(long, value_enum, default_value = "cyclic-monomial")]
    pub group: GroupName,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub host: HostArgs,
    #[arg(long, value_enum, default_value = "harmonic-diag")]
    pub operator: OperatorName,
    /// Rank of the truncation operator.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub schedule: Vec<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    pub group: GroupName,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub block: usize,
}

impl Cli {
    /// The experiment config this invocation describes.
    pub fn into_config(self) -> Result<ExperimentConfig, CliError> {
        let mut config = match (self.config, self.command) {
            (Some(_), Some(_)) => {
                return Err(CliError::Invalid("give either --config or a subcommand, not both".into()))
            }
            (None, None) => return Err(CliError::Invalid("a subcommand or --config is required".into())),
            (Some(path), None) => {
                let text =
                    fs::read_to_string(&path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_json(&text)?
            }
            (None, Some(sub)) => sub.into_config(),
        };
        if self.output.is_some() {
            config.output.json = self.output;
        }
        if self.csv.is_some() {
            config.output.csv = self.csv;
        }
        Ok(config)
    }
}

impl Sub {
    fn into_config(self) -> ExperimentConfig {
        match self {
            Sub::VerifyDiagonal(g) => {
                ExperimentConfig { group: Some(g.config()), ..ExperimentConfig::new(Command::VerifyDiagonal) }
            }
            Sub::Irreducible(g) => {
                ExperimentConfig { group: Some(g.config()), ..ExperimentConfig::new(Command::Irreducible) }
            }
            Sub::CertifyA(a) => {
                let base = ExperimentConfig::new(Command::CertifyA);
                ExperimentConfig {
                    host: Some(a.host.config()),
                    group: Some(GroupConfig { kind: a.group, n: None, generators_file: None }),
                    schedule: a.schedule,
                    seed: a.seed,
                    tolerance: a.tolerance.unwrap_or(base.tolerance),
                    ..base
                }
            }
            Sub::Converge(a) => {
                let base = ExperimentConfig::new(Command::Converge);
                ExperimentConfig {
                    host: Some(a.host.config()),
                    group: Some(GroupConfig { kind: a.group, n: None, generators_file: None }),
                    schedule: a.schedule,
                    operator: Some(OperatorConfig { kind: a.operator, m: a.m }),
                    seed: a.seed,
                    tolerance: a.tolerance.unwrap_or(base.tolerance),
                    ..base
                }
            }
            Sub::Construct(a) => ExperimentConfig {
                construct: Some(ConstructConfig { model: a.model, m: a.m, k: a.k, block: a.block }),
                ..ExperimentConfig::new(Command::Construct)
            },
        }
    }
}

/// Runs `config` and writes its artifacts; JSON goes to stdout when no path
/// is configured.
pub fn execute(config: &ExperimentConfig, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let report = run(config)?;
    let json = report.to_json();
    let write = |path: &PathBuf, text: &str| {
        fs::write(path, text).map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))
    };
    match &config.output.json {
        Some(path) => write(path, &json)?,
        None => stdout.write_all(json.as_bytes()).map_err(|e| CliError::Internal(format!("stdout: {e}")))?,
    }
    if let Some(path) = &config.output.csv {
        write(path, &report.to_csv()?)?;
    }
    Ok(report.verdict)
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = cli.into_config().and_then(|config| execute(&config, stdout));
    match result {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(stderr, "verdict: fail");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_of(args: &[&str]) -> Result<ExperimentConfig, CliError> {
        Cli::try_parse_from(std::iter::once("diagbench").chain(args.iter().copied())).unwrap().into_config()
    }

    #[test]
    fn flags_build_configs() {
        let c =
            config_of(&["converge", "--dim", "32", "--schedule", "2,4,8,16", "--operator", "harmonic-diag"]).unwrap();
        assert_eq!(c.command, Command::Converge);
        assert_eq!(c.schedule, vec![2, 4, 8, 16]);
        assert_eq!(c.host.as_ref().unwrap().p, 2.0);
        let c = config_of(&["verify-diagonal", "--group-file", "g.json", "--output", "out.json"]).unwrap();
        assert_eq!(c.group.unwrap().kind, GroupName::File);
        assert_eq!(c.output.json, Some(PathBuf::from("out.json")));
        assert!(matches!(config_of(&[]), Err(CliError::Invalid(_))));
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(diagbench::Error::Internal("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(diagbench::Error::NotIdempotent).exit_code(), 2);
        assert_eq!(CliError::from(diagbench::Error::PiMismatch).exit_code(), 2);
    }

    #[test]
    fn execute_reports_verdicts() {
        let mut out = Vec::new();
        let mut config = ExperimentConfig::new(Command::Irreducible);
        config.group = Some(GroupConfig { kind: GroupName::SignFlips, n: Some(2), generators_file: None });
        assert!(!execute(&config, &mut out).unwrap());
        let report: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(report["verdict"], "fail");
        let mut err = Vec::new();
        let code = main_with_args(
            ["diagbench", "irreducible", "--n", "2", "--group", "sign-flips"],
            &mut Vec::new(),
            &mut err,
        );
        assert_eq!(code, 1);
        assert_eq!(String::from_utf8(err).unwrap(), "verdict: fail\n");
    }
}

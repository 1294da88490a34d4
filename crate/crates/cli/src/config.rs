use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use diagbench::constructions::{GroupChoice, TestOperator};
use diagbench::lifts::DEFAULT_TOLERANCE;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyDiagonal,
    Irreducible,
    CertifyA,
    Converge,
    Construct,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyDiagonal => "verify-diagonal",
            Command::Irreducible => "irreducible",
            Command::CertifyA => "certify-a",
            Command::Converge => "converge",
            Command::Construct => "construct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HostKind {
    Lp,
    WeightedLp,
    Lorentz,
    /// `L_p` of `dim` uniform atoms, refined dyadically.
    Dissection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostConfig {
    pub kind: HostKind,
    #[serde(with = "exponent")]
    pub p: f64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Lorentz weights `k^{-alpha}` when no explicit weights are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GroupName {
    Monomial,
    CyclicMonomial,
    SignFlips,
    Dyadic,
    /// Cyclic-monomial, dyadic for powers of two from 16 on.
    Auto,
    /// Closure of the generators in `generators_file`.
    File,
}

impl GroupName {
    pub fn schedule_choice(self) -> Result<GroupChoice, CliError> {
        match self {
            GroupName::Monomial => Ok(GroupChoice::Monomial),
            GroupName::CyclicMonomial => Ok(GroupChoice::CyclicMonomial),
            GroupName::Dyadic => Ok(GroupChoice::Dyadic),
            GroupName::Auto => Ok(GroupChoice::Auto),
            GroupName::SignFlips | GroupName::File => {
                Err(CliError::Invalid("schedules need a monomial, cyclic-monomial, dyadic or auto group".into()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub kind: GroupName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorName {
    HarmonicDiag,
    Truncation,
    RandomCompact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorName,
    /// Rank of the truncation projection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl OperatorConfig {
    pub fn operator(&self, seed: u64) -> Result<TestOperator, CliError> {
        Ok(match self.kind {
            OperatorName::HarmonicDiag => TestOperator::HarmonicDiagonal,
            OperatorName::RandomCompact => TestOperator::RandomCompact { seed },
            OperatorName::Truncation => TestOperator::TruncationProjection {
                m: self.m.ok_or_else(|| CliError::Invalid("truncation operator needs m".into()))?,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    DirectSum,
    Cutdown,
    Ideal,
    /// Direct sum and cut-down with `m = k = 1`.
    Hyperplane,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructConfig {
    pub model: Model,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default = "one")]
    pub k: usize,
    /// Which block of `M_m ⊕ M_k` the ideal model cuts down to.
    #[serde(default)]
    pub block: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<HostConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construct: Option<ConstructConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            host: None,
            group: None,
            schedule: Vec::new(),
            operator: None,
            construct: None,
            seed: 0,
            tolerance: DEFAULT_TOLERANCE,
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub(crate) fn host(&self) -> Result<&HostConfig, CliError> {
        self.host.as_ref().ok_or_else(|| CliError::Invalid(format!("{} needs a host", self.command.name())))
    }

    pub(crate) fn group(&self) -> Result<&GroupConfig, CliError> {
        self.group.as_ref().ok_or_else(|| CliError::Invalid(format!("{} needs a group", self.command.name())))
    }
}

/// Accepts a number, or `"inf"` for `p = ∞`.
pub fn parse_exponent(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => other.parse::<f64>().map_err(|e| format!("invalid exponent {s:?}: {e}")),
    }
}

mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    // Through `Value`, which understands serde_json's arbitrary-precision
    // number encoding.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n.as_f64().ok_or_else(|| de::Error::custom(format!("exponent {n} out of range"))),
            Value::String(s) => super::parse_exponent(&s).map_err(de::Error::custom),
            other => Err(de::Error::custom(format!("expected a number or \"inf\", got {other}"))),
        }
    }
}

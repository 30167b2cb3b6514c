//! Experiment harness around `vrnoma-core`: config files, training
//! campaigns over seeds, metric files, and the standalone checks.
//!
//! Exit codes follow [`HarnessError::exit_code`]: 0 on success, 1 for
//! configuration errors, 2 for runtime faults.

pub mod campaign;
pub mod checks;
pub mod config_file;
pub mod metrics;

use std::path::PathBuf;

use vrnoma_core::agents::AgentError;
use vrnoma_core::env::EnvError;
use vrnoma_core::nets::NetError;
use vrnoma_core::oracle::OracleError;

pub use campaign::{evaluate_policy, run_campaign, run_seed, CampaignResult, SeedRun};
pub use config_file::{load_config, parse_config, parse_seeds, ExperimentSpec};
pub use metrics::{read_metrics, summarize, write_metrics, write_summary, MetricsRow, SummaryRow};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("{}unknown config key `{key}`", line_prefix(*.line))]
    UnknownKey { line: Option<usize>, key: String },
    #[error("{}invalid value `{value}` for `{key}`", line_prefix(*.line))]
    InvalidValue { line: Option<usize>, key: String, value: String },
    #[error("invalid experiment `{key}`: {reason}")]
    InvalidSpec { key: &'static str, reason: String },
    #[error("{what} mismatch: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed metrics file {}: {reason}", path.display())]
    Metrics { path: PathBuf, reason: String },
    #[error("check failed: {0}")]
    CheckFailed(String),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

fn env_is_config(e: &EnvError) -> bool {
    matches!(
        e,
        EnvError::InvalidConfig { .. }
            | EnvError::UnknownKey(_)
            | EnvError::InvalidValue { .. }
            | EnvError::ActionSpaceOverflow
    )
}

impl HarnessError {
    pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Self {
        HarnessError::InvalidSpec { key, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    /// Attaches a config-file line number where the error has a slot for one.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            HarnessError::UnknownKey { key, .. } => HarnessError::UnknownKey { line: Some(line), key },
            HarnessError::InvalidValue { key, value, .. } => {
                HarnessError::InvalidValue { line: Some(line), key, value }
            }
            HarnessError::Env(EnvError::UnknownKey(key)) | HarnessError::Agent(AgentError::UnknownKey(key)) => {
                HarnessError::UnknownKey { line: Some(line), key }
            }
            other => other,
        }
    }

    /// 1 for configuration errors, 2 for everything that fails at runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Syntax { .. }
            | HarnessError::UnknownKey { .. }
            | HarnessError::InvalidValue { .. }
            | HarnessError::InvalidSpec { .. }
            | HarnessError::DimensionMismatch { .. } => 1,
            HarnessError::Env(e) => {
                if env_is_config(e) {
                    1
                } else {
                    2
                }
            }
            HarnessError::Agent(e) => match e {
                AgentError::InvalidConfig { .. }
                | AgentError::UnknownKey(_)
                | AgentError::InvalidValue { .. }
                | AgentError::ActionSpaceTooLarge { .. } => 1,
                AgentError::Env(e) if env_is_config(e) => 1,
                _ => 2,
            },
            HarnessError::Net(_)
            | HarnessError::Oracle(_)
            | HarnessError::Io { .. }
            | HarnessError::Metrics { .. }
            | HarnessError::CheckFailed(_) => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_config_from_runtime() {
        assert_eq!(HarnessError::invalid("seeds", "empty").exit_code(), 1);
        assert_eq!(HarnessError::Agent(AgentError::ActionSpaceTooLarge { size: 1, max: 0 }).exit_code(), 1);
        assert_eq!(HarnessError::Agent(AgentError::Net(NetError::NonFiniteGradient)).exit_code(), 2);
        assert_eq!(HarnessError::CheckFailed("x".into()).exit_code(), 2);
        let io = HarnessError::io("a.csv")(std::io::Error::other("boom"));
        assert_eq!(io.exit_code(), 2);
        assert!(io.to_string().starts_with("a.csv"));
    }

    #[test]
    fn line_numbers_show_in_messages() {
        let e = HarnessError::UnknownKey { line: None, key: "k".into() }.at_line(7);
        assert_eq!(e.to_string(), "line 7: unknown config key `k`");
    }
}

use std::path::{Path, PathBuf};

use parley_core::augment::AugmentError;
use parley_core::experiment::ExperimentError;
use parley_core::gridworld::GridError;
use parley_core::indicators::IndicatorError;
use parley_core::mc::McError;
use parley_core::synthesis::SynthError;
use parley_core::webapp::WebAppError;
use parley_prism::{BindError, ParseError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MODEL: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Model(_) => EXIT_MODEL,
            CliError::NonConvergence(_) => EXIT_NON_CONVERGENCE,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn model(message: impl std::fmt::Display) -> Self {
        CliError::Model(message.to_string())
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            other => CliError::model(other),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Mc(m) => m.into(),
            SynthError::Config(m) => CliError::Usage(m),
            other => CliError::model(other),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Synth(s) => s.into(),
            ExperimentError::Config(m) => CliError::Usage(m),
            other => CliError::model(other),
        }
    }
}

macro_rules! model_errors {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::model(e)
            }
        })*
    };
}

model_errors!(AugmentError, GridError, IndicatorError, WebAppError, ParseError, BindError);

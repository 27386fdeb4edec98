//! Pipeline driver behind the `enroll` binary.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 data error
//! (schema, parsing, cleaning), 4 numeric failure (fitting, evaluation).

mod config;
mod predict;
mod profile;
mod run;
mod synth;

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::cohortsynth::SynthError;
use crate::evalkit::EvalError;
use crate::glm::{GlmError, ModelFormatError};
use crate::select::SelectError;
use crate::tabular::TabularError;

pub use config::{ImputeChoice, InputSource, RunConfig, SelectionMethod};
pub use predict::{cmd_predict, PredictSummary};
pub use profile::{cmd_profile, profile, Breakdown, BreakdownRow, Profile};
pub use run::{cmd_run, RunSummary};
pub use synth::{cmd_synth, SynthSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Merge,
    Dedup,
    Impute,
    Split,
    Encode,
    Select,
    CrossValidate,
    Fit,
    Evaluate,
    Predict,
    Synth,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Merge => "merge",
            Stage::Dedup => "dedup",
            Stage::Impute => "impute",
            Stage::Split => "split",
            Stage::Encode => "encode",
            Stage::Select => "select",
            Stage::CrossValidate => "cross-validate",
            Stage::Fit => "fit",
            Stage::Evaluate => "evaluate",
            Stage::Predict => "predict",
            Stage::Synth => "synth",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("[{stage}] {message}")]
pub struct CliError {
    pub stage: Stage,
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn new(stage: Stage, class: ErrorClass, message: impl Into<String>) -> Self {
        CliError { stage, class, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Stage::Config, ErrorClass::Config, message)
    }

    pub fn io(stage: Stage, message: impl Into<String>) -> Self {
        Self::new(stage, ErrorClass::Io, message)
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            ErrorClass::Io => 1,
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
        }
    }

    pub(crate) fn tabular(stage: Stage, e: TabularError) -> Self {
        let class = match &e {
            TabularError::Io(_) => ErrorClass::Io,
            TabularError::InFile { source, .. } if matches!(**source, TabularError::Io(_)) => {
                ErrorClass::Io
            }
            TabularError::InvalidSchema(_) => ErrorClass::Config,
            _ => ErrorClass::Data,
        };
        Self::new(stage, class, e.to_string())
    }

    pub(crate) fn glm(stage: Stage, e: GlmError) -> Self {
        let class = match e {
            GlmError::InvalidConfig(_) => ErrorClass::Config,
            _ => ErrorClass::Numeric,
        };
        Self::new(stage, class, e.to_string())
    }

    pub(crate) fn eval(stage: Stage, e: EvalError) -> Self {
        let class = match e {
            EvalError::InvalidFolds { .. } => ErrorClass::Config,
            EvalError::LengthMismatch(..) | EvalError::NonBinary { .. } => ErrorClass::Data,
            _ => ErrorClass::Numeric,
        };
        Self::new(stage, class, e.to_string())
    }

    pub(crate) fn select(stage: Stage, e: SelectError) -> Self {
        match e {
            SelectError::Eval(inner) => Self::eval(stage, inner),
            SelectError::InvalidConfig(_) => Self::new(stage, ErrorClass::Config, e.to_string()),
            _ => Self::new(stage, ErrorClass::Data, e.to_string()),
        }
    }

    pub(crate) fn synth(stage: Stage, e: SynthError) -> Self {
        let class = match e {
            SynthError::Tabular(_) => ErrorClass::Data,
            _ => ErrorClass::Config,
        };
        Self::new(stage, class, e.to_string())
    }

    pub(crate) fn model(stage: Stage, e: ModelFormatError) -> Self {
        Self::new(stage, ErrorClass::Data, e.to_string())
    }
}

/// Line-oriented record of every action a command takes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    lines: Vec<String>,
}

impl RunLog {
    pub fn note(&mut self, stage: Stage, message: impl AsRef<str>) {
        for line in message.as_ref().lines().filter(|l| !l.trim().is_empty()) {
            self.lines.push(format!("[{stage}] {line}"));
        }
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn render(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

pub(crate) fn write_file(stage: Stage, path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(stage, format!("{}: {e}", path.display())))
}

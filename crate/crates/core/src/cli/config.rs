use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evalkit::Execution;
use crate::glm::FitConfig;
use crate::select::{Direction, MeritMode, SearchConfig};
use crate::tabular::{Imputation, JoinMode};

use super::{CliError, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSource {
    pub path: PathBuf,
    pub schema: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeChoice {
    ModeFill,
    DropRows,
    /// Drop sparse columns, then drop rows still holding a missing cell.
    DropColumns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Rank,
    Wrapper,
    None,
}

/// Everything one `run` needs. Loadable from TOML; every field except
/// `inputs` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<InputSource>,
    /// Join key for multiple inputs; defaults to the first identifier column.
    pub merge_key: Option<String>,
    pub merge_mode: JoinMode,
    pub seed: u64,
    pub imputation: ImputeChoice,
    pub drop_threshold: f64,
    pub standardize_counts: bool,
    pub test_fraction: f64,
    pub selection: SelectionMethod,
    /// Features kept by the `rank` method; all when unset.
    pub rank_keep: Option<usize>,
    pub direction: Direction,
    pub stale_limit: usize,
    pub merit_folds: usize,
    pub merit_mode: MeritMode,
    pub folds: usize,
    pub ridge: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub step_halvings: usize,
    pub threshold: f64,
    pub parallel: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        let search = SearchConfig::default();
        RunConfig {
            inputs: Vec::new(),
            merge_key: None,
            merge_mode: JoinMode::Left,
            seed: 1,
            imputation: ImputeChoice::ModeFill,
            drop_threshold: 0.5,
            standardize_counts: false,
            test_fraction: 0.0,
            selection: SelectionMethod::Wrapper,
            rank_keep: None,
            direction: search.direction,
            stale_limit: search.stale_limit,
            merit_folds: search.merit_cv_folds,
            merit_mode: search.merit_mode,
            folds: 10,
            ridge: fit.ridge,
            max_iterations: fit.max_iterations,
            tolerance: fit.tolerance,
            step_halvings: fit.fallback_step_halvings,
            threshold: fit.threshold,
            parallel: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(Stage::Config, format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            ridge: self.ridge,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            fallback_step_halvings: self.step_halvings,
            threshold: self.threshold,
        }
    }

    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            direction: self.direction,
            stale_limit: self.stale_limit,
            merit_cv_folds: self.merit_folds,
            seed: self.seed,
            merit_mode: self.merit_mode,
            execution: self.execution(),
        }
    }

    pub fn imputation(&self) -> Imputation {
        match self.imputation {
            ImputeChoice::ModeFill => Imputation::ModeFill,
            ImputeChoice::DropRows => Imputation::DropRows,
            ImputeChoice::DropColumns => Imputation::DropColumns(self.drop_threshold),
        }
    }

    /// Checks every bound before any data is touched.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::config(m));
        if self.inputs.is_empty() {
            return fail("at least one input is required".into());
        }
        if self.folds < 2 {
            return fail(format!("folds must be >= 2, got {}", self.folds));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return fail(format!("test_fraction {} outside [0, 1)", self.test_fraction));
        }
        if !(0.0..=1.0).contains(&self.drop_threshold) {
            return fail(format!("drop_threshold {} outside [0, 1]", self.drop_threshold));
        }
        if self.rank_keep == Some(0) {
            return fail("rank_keep must be positive".into());
        }
        self.fit_config().validate().map_err(|e| CliError::config(e.to_string()))?;
        self.search_config().validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(())
    }
}

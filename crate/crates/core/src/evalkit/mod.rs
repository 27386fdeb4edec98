//! Stratified k-fold cross-validation, confusion matrices and rate metrics.
//!
//! Matrices are oriented rows = actual, columns = predicted. Pooled metrics
//! are computed from the fold counts summed elementwise.

mod report;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::glm::{self, FitConfig, GlmError, Model};
use crate::tabular::DesignMatrix;

pub use report::{confusion_grid, metrics_kv, metrics_table, percent};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid fold count k={k} for n={n}")]
    InvalidFolds { k: usize, n: usize },
    #[error("length mismatch: {0} truths vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("non-binary label {value} at position {index}")]
    NonBinary { index: usize, value: u8 },
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: GlmError },
    #[error(transparent)]
    Glm(#[from] GlmError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn actual_positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn actual_negatives(&self) -> u64 {
        self.fp + self.tn
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = ConfusionMatrix;
    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(self.tp + o.tp, self.fn_ + o.fn_, self.fp + o.fp, self.tn + o.tn)
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = ConfusionMatrix>>(iter: I) -> Self {
        iter.fold(ConfusionMatrix::default(), |a, b| a + b)
    }
}

/// Rate metrics. `None` marks a rate whose denominator is zero; it is never
/// replaced by 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    /// Also the TP rate and recall.
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
    pub fp_rate: Option<f64>,
}

impl Metrics {
    pub fn recall(&self) -> Option<f64> {
        self.sensitivity
    }

    pub fn tp_rate(&self) -> Option<f64> {
        self.sensitivity
    }

    pub fn is_fully_defined(&self) -> bool {
        [
            self.accuracy,
            self.sensitivity,
            self.specificity,
            self.precision,
            self.f_measure,
            self.fp_rate,
        ]
        .iter()
        .all(Option::is_some)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Metrics {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        sensitivity: recall,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        precision,
        f_measure,
        fp_rate: ratio(cm.fp, cm.fp + cm.tn),
    })
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fn_ += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            _ => {
                let value = if t > 1 { t } else { p };
                return Err(EvalError::NonBinary { index: i, value });
            }
        }
    }
    Ok(cm)
}

/// Assigns each instance to one of `k` folds.
///
/// Instances of each class are shuffled with a seeded ChaCha8 generator and
/// dealt round-robin; the deal continues from class 0 into class 1, so fold
/// sizes also differ by at most one.
pub fn stratified_folds(y: &[u8], k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let n = y.len();
    if k < 2 || k > n {
        return Err(EvalError::InvalidFolds { k, n });
    }
    if let Some(i) = y.iter().position(|&v| v > 1) {
        return Err(EvalError::NonBinary { index: i, value: y[i] });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; n];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub train_size: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub pooled: ConfusionMatrix,
    pub pooled_metrics: Metrics,
}

pub fn cross_validate(
    dm: &DesignMatrix,
    k: usize,
    seed: u64,
    fit_cfg: &FitConfig,
) -> Result<CvResult, EvalError> {
    cross_validate_with(dm, k, seed, fit_cfg, Execution::default())
}

/// Runs k-fold CV. Parallel and sequential execution give identical results:
/// each fold is a pure function of its index and results are merged in fold
/// order.
pub fn cross_validate_with(
    dm: &DesignMatrix,
    k: usize,
    seed: u64,
    fit_cfg: &FitConfig,
    execution: Execution,
) -> Result<CvResult, EvalError> {
    let y = dm.labels();
    let assignment = stratified_folds(&y, k, seed)?;
    let run_fold = |fold: usize| -> Result<FoldResult, EvalError> {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..dm.n()).partition(|&i| assignment[i] == fold);
        let train_dm = dm.select_rows(&train);
        let test_dm = dm.select_rows(&test);
        let model = glm::fit(&train_dm, fit_cfg).map_err(|source| EvalError::Fold { fold, source })?;
        let pred = glm::predict_label(&model, &test_dm)?;
        let cm = confusion(&test_dm.labels(), &pred)?;
        Ok(FoldResult {
            confusion: cm,
            metrics: metrics(&cm)?,
            train_size: train.len(),
            converged: model.converged,
        })
    };
    let folds: Vec<FoldResult> = match execution {
        Execution::Sequential => (0..k).map(run_fold).collect::<Result<_, _>>()?,
        Execution::Parallel => (0..k).into_par_iter().map(run_fold).collect::<Result<_, _>>()?,
    };
    let pooled: ConfusionMatrix = folds.iter().map(|f| f.confusion).sum();
    Ok(CvResult { k, seed, pooled_metrics: metrics(&pooled)?, pooled, folds })
}

/// Scores `model` on `dm`.
pub fn evaluate_on(model: &Model, dm: &DesignMatrix) -> Result<(ConfusionMatrix, Metrics), EvalError> {
    let pred = glm::predict_label(model, dm)?;
    let cm = confusion(&dm.labels(), &pred)?;
    Ok((cm, metrics(&cm)?))
}

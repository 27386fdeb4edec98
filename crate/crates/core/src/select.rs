//! Attribute ranking by class correlation and wrapper subset selection.
//!
//! The wrapper scores a feature subset by the accuracy of a logistic model
//! restricted to it and explores the subset lattice with best-first search.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::evalkit::{self, EvalError, Execution};
use crate::glm::{self, FitConfig};
use crate::tabular::DesignMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("length mismatch: {0} attribute values vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 instances, got {0}")]
    TooFewInstances(usize),
    #[error("design matrix has no features")]
    NoFeatures,
    #[error("feature index {index} out of range for {dim} features")]
    InvalidIndex { index: usize, dim: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    /// Set when either input has zero variance; `value` is then 0.
    pub constant_attribute: bool,
}

/// Pearson product-moment correlation between an attribute and 0/1 labels.
pub fn correlation(attr: &[f64], cls: &[u8]) -> Result<Correlation, SelectError> {
    if attr.len() != cls.len() {
        return Err(SelectError::LengthMismatch(attr.len(), cls.len()));
    }
    let n = attr.len();
    if n < 2 {
        return Err(SelectError::TooFewInstances(n));
    }
    let nf = n as f64;
    let mx = attr.iter().sum::<f64>() / nf;
    let my = cls.iter().map(|&c| f64::from(c)).sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &c) in attr.iter().zip(cls) {
        let dx = x - mx;
        let dy = f64::from(c) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation { value: 0.0, constant_attribute: true });
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation { value: r, constant_attribute: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedAttribute {
    /// 0-based feature index (intercept excluded).
    pub index: usize,
    pub name: String,
    pub correlation: f64,
    pub constant_attribute: bool,
}

impl RankedAttribute {
    pub fn score(&self) -> f64 {
        self.correlation.abs()
    }
}

/// Ranks every feature by |correlation with the class|, descending, ties by index.
pub fn rank_attributes(dm: &DesignMatrix) -> Result<Vec<RankedAttribute>, SelectError> {
    if dm.num_features() == 0 {
        return Err(SelectError::NoFeatures);
    }
    let y = dm.labels();
    let mut ranked = (0..dm.num_features())
        .map(|f| {
            let c = correlation(&dm.feature_column(f), &y)?;
            Ok(RankedAttribute {
                index: f,
                name: dm.feature_names()[f].clone(),
                correlation: c.value,
                constant_attribute: c.constant_attribute,
            })
        })
        .collect::<Result<Vec<_>, SelectError>>()?;
    ranked.sort_by(|a, b| b.score().total_cmp(&a.score()).then(a.index.cmp(&b.index)));
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
    Bidirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeritMode {
    /// Stratified k-fold CV accuracy.
    CrossValidated,
    /// Accuracy on the data the model was fitted to.
    TrainingSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub direction: Direction,
    pub stale_limit: usize,
    pub merit_cv_folds: usize,
    pub seed: u64,
    pub merit_mode: MeritMode,
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            direction: Direction::Bidirectional,
            stale_limit: 5,
            merit_cv_folds: 5,
            seed: 1,
            merit_mode: MeritMode::CrossValidated,
            execution: Execution::Parallel,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SelectError> {
        if self.stale_limit == 0 {
            return Err(SelectError::InvalidConfig("stale_limit must be >= 1".into()));
        }
        if self.merit_cv_folds < 2 {
            return Err(SelectError::InvalidConfig("merit_cv_folds must be >= 2".into()));
        }
        Ok(())
    }
}

/// Accuracy of a logistic model on `features` (intercept always included).
pub fn subset_merit(
    features: &[usize],
    dm: &DesignMatrix,
    cfg: &SearchConfig,
    fit_cfg: &FitConfig,
) -> Result<f64, SelectError> {
    if let Some(&bad) = features.iter().find(|&&f| f >= dm.num_features()) {
        return Err(SelectError::InvalidIndex { index: bad, dim: dm.num_features() });
    }
    let sub = dm.select_features(features);
    let cm = match cfg.merit_mode {
        MeritMode::CrossValidated => {
            evalkit::cross_validate_with(&sub, cfg.merit_cv_folds, cfg.seed, fit_cfg, Execution::Sequential)?
                .pooled
        }
        MeritMode::TrainingSet => {
            let model = glm::fit(&sub, fit_cfg).map_err(EvalError::from)?;
            evalkit::evaluate_on(&model, &sub)?.0
        }
    };
    Ok((cm.tp + cm.tn) as f64 / cm.total() as f64)
}

/// A feature subset (sorted indices) with its merit.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetCandidate {
    pub features: Vec<usize>,
    pub merit: f64,
}

/// Search preference: higher merit, then fewer features, then lexicographic indices.
fn preference(a: &SubsetCandidate, b: &SubsetCandidate) -> Ordering {
    b.merit
        .total_cmp(&a.merit)
        .then(a.features.len().cmp(&b.features.len()))
        .then_with(|| a.features.cmp(&b.features))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: SubsetCandidate,
    pub start: SubsetCandidate,
    /// Distinct subsets evaluated.
    pub evaluations: usize,
    pub expansions: usize,
}

/// Best-first search over feature subsets.
///
/// Forward and bidirectional start from the empty set, backward from the full
/// set. Each step expands the preferred open candidate into its one-feature
/// additions (forward, bidirectional) and removals (backward, bidirectional).
/// Every subset is evaluated once. The search stops when `stale_limit`
/// consecutive expansions fail to raise the best merit, or when nothing is
/// left to expand.
pub fn best_first_search(
    dm: &DesignMatrix,
    cfg: &SearchConfig,
    fit_cfg: &FitConfig,
) -> Result<SearchOutcome, SelectError> {
    cfg.validate()?;
    let d = dm.num_features();
    if d == 0 {
        return Err(SelectError::NoFeatures);
    }
    let (add, remove) = match cfg.direction {
        Direction::Forward => (true, false),
        Direction::Backward => (false, true),
        Direction::Bidirectional => (true, true),
    };
    let start_set: Vec<usize> = match cfg.direction {
        Direction::Backward => (0..d).collect(),
        _ => Vec::new(),
    };

    let mut memo: HashMap<Vec<usize>, f64> = HashMap::new();
    let start = SubsetCandidate { merit: subset_merit(&start_set, dm, cfg, fit_cfg)?, features: start_set };
    memo.insert(start.features.clone(), start.merit);
    let mut open = vec![start.clone()];
    let mut best = start.clone();
    let mut stale = 0;
    let mut expansions = 0;

    while !open.is_empty() {
        let pick = (0..open.len())
            .min_by(|&i, &j| preference(&open[i], &open[j]))
            .expect("open list is non-empty");
        let node = open.swap_remove(pick);
        expansions += 1;

        let mut successors = Vec::new();
        for f in 0..d {
            let contains = node.features.binary_search(&f);
            let next = match contains {
                Err(pos) if add => {
                    let mut s = node.features.clone();
                    s.insert(pos, f);
                    s
                }
                Ok(pos) if remove => {
                    let mut s = node.features.clone();
                    s.remove(pos);
                    s
                }
                _ => continue,
            };
            if !memo.contains_key(&next) && !successors.contains(&next) {
                successors.push(next);
            }
        }

        let merits: Vec<f64> = match cfg.execution {
            Execution::Sequential => successors
                .iter()
                .map(|s| subset_merit(s, dm, cfg, fit_cfg))
                .collect::<Result<_, _>>()?,
            Execution::Parallel => successors
                .par_iter()
                .map(|s| subset_merit(s, dm, cfg, fit_cfg))
                .collect::<Result<_, _>>()?,
        };

        let previous_best = best.merit;
        for (features, merit) in successors.into_iter().zip(merits) {
            memo.insert(features.clone(), merit);
            let cand = SubsetCandidate { features, merit };
            if preference(&cand, &best) == Ordering::Less {
                best = cand.clone();
            }
            open.push(cand);
        }
        if best.merit > previous_best {
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.stale_limit {
                break;
            }
        }
    }

    Ok(SearchOutcome { best, start, evaluations: memo.len(), expansions })
}

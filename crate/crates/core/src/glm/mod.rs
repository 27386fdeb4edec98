//! Ridge-penalized binary logistic regression fitted by Newton/IRLS.
//!
//! The objective is the negative log-likelihood plus `(ridge / 2) * Σ_{j≥1} w_j²`;
//! the intercept (index 0) is never penalized. Each Newton step solves
//! `H Δ = g` with a Cholesky factorization and is halved until the objective
//! does not increase.

mod linalg;
mod model;

use thiserror::Error;

use crate::tabular::DesignMatrix;

pub use linalg::{Cholesky, SquareMatrix};
pub use model::{Model, ModelFormatError};

/// Probabilities are kept this far from 0 and 1 inside the logarithm.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlmError {
    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Hessian is singular; add a ridge penalty or remove collinear features")]
    SingularSystem,
    #[error("all labels belong to one class; a ridge penalty is required")]
    DegenerateLabels,
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub ridge: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the largest absolute coefficient change.
    pub tolerance: f64,
    pub fallback_step_halvings: usize,
    pub threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            ridge: 1e-8,
            max_iterations: 100,
            tolerance: 1e-8,
            fallback_step_halvings: 30,
            threshold: 0.5,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), GlmError> {
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(GlmError::InvalidConfig(format!("ridge {} must be >= 0", self.ridge)));
        }
        if self.max_iterations == 0 {
            return Err(GlmError::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(GlmError::InvalidConfig(format!("tolerance {} must be > 0", self.tolerance)));
        }
        if !(self.threshold >= 0.0 && self.threshold <= 1.0) {
            return Err(GlmError::InvalidConfig(format!(
                "threshold {} must be in [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Logistic function, evaluated on the branch that cannot overflow.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(z))` without forming the probability.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

fn check_dim(weights: &[f64], dm: &DesignMatrix) -> Result<(), GlmError> {
    if weights.len() != dm.dim() {
        return Err(GlmError::DimensionMismatch { expected: dm.dim(), found: weights.len() });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn penalty(weights: &[f64], ridge: f64) -> f64 {
    0.5 * ridge * weights[1..].iter().map(|w| w * w).sum::<f64>()
}

/// Penalized negative log-likelihood.
pub fn penalized_nll(weights: &[f64], dm: &DesignMatrix, ridge: f64) -> Result<f64, GlmError> {
    check_dim(weights, dm)?;
    let floor = PROB_CLAMP.ln();
    let ceil = (-PROB_CLAMP).ln_1p();
    let mut nll = 0.0;
    for (row, &y) in dm.rows().zip(dm.y()) {
        let z = dot(row, weights);
        // ln p and ln(1-p), each clamped to [ln 1e-12, ln(1 - 1e-12)]
        let lp = log_sigmoid(z).clamp(floor, ceil);
        let lq = log_sigmoid(-z).clamp(floor, ceil);
        nll -= y * lp + (1.0 - y) * lq;
    }
    Ok(nll + penalty(weights, ridge))
}

/// `Xᵀ(p - y) + ridge * w̃`, with `w̃` the weights with the intercept zeroed.
pub fn gradient(weights: &[f64], dm: &DesignMatrix, ridge: f64) -> Result<Vec<f64>, GlmError> {
    check_dim(weights, dm)?;
    let mut g = vec![0.0; dm.dim()];
    for (row, &y) in dm.rows().zip(dm.y()) {
        let r = sigmoid(dot(row, weights)) - y;
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    for j in 1..g.len() {
        g[j] += ridge * weights[j];
    }
    Ok(g)
}

/// `XᵀWX + ridge * Ĩ` with `W = diag(p(1-p))`.
pub fn hessian(weights: &[f64], dm: &DesignMatrix, ridge: f64) -> Result<SquareMatrix, GlmError> {
    check_dim(weights, dm)?;
    let k = dm.dim();
    let mut h = SquareMatrix::zeros(k);
    for row in dm.rows() {
        let p = sigmoid(dot(row, weights));
        let w = p * (1.0 - p);
        for i in 0..k {
            let wi = w * row[i];
            for j in 0..=i {
                h[(i, j)] += wi * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
        if i > 0 {
            h[(i, i)] += ridge;
        }
    }
    Ok(h)
}

/// Fits the model from a zero start.
///
/// Stops when the largest coefficient change falls below `cfg.tolerance`
/// (`converged = true`) or after `cfg.max_iterations` Newton steps, in which
/// case the current weights are still returned.
pub fn fit(dm: &DesignMatrix, cfg: &FitConfig) -> Result<Model, GlmError> {
    cfg.validate()?;
    let positives = dm.positives();
    if cfg.ridge == 0.0 && (positives == 0 || positives == dm.n()) {
        return Err(GlmError::DegenerateLabels);
    }

    let mut w = vec![0.0; dm.dim()];
    let mut loss = penalized_nll(&w, dm, cfg.ridge)?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let g = gradient(&w, dm, cfg.ridge)?;
        let h = hessian(&w, dm, cfg.ridge)?;
        let step = match h.cholesky() {
            Some(chol) => chol.solve(&g),
            // with a penalty only the unpenalized intercept can degenerate
            // (single-class labels); keep the finite weights reached so far
            None if cfg.ridge > 0.0 && iterations > 1 => break,
            None => return Err(GlmError::SingularSystem),
        };

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.fallback_step_halvings {
            let candidate: Vec<f64> = w.iter().zip(&step).map(|(wi, si)| wi - t * si).collect();
            let cand_loss = penalized_nll(&candidate, dm, cfg.ridge)?;
            if cand_loss <= loss {
                accepted = Some((candidate, cand_loss));
                break;
            }
            t *= 0.5;
        }
        let full_change = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        match accepted {
            Some((next, next_loss)) => {
                let change = w.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                w = next;
                loss = next_loss;
                if change < cfg.tolerance {
                    converged = true;
                    break;
                }
            }
            None => {
                // no halving decreased the objective: we are at the floating-point floor
                converged = full_change < cfg.tolerance;
                break;
            }
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(GlmError::SingularSystem);
    }

    Ok(Model {
        weights: w,
        feature_names: dm.feature_names().to_vec(),
        scaling: dm.scaling().to_vec(),
        ridge: cfg.ridge,
        threshold: cfg.threshold,
        converged,
        iterations_used: iterations,
        final_loss: loss,
    })
}

fn check_model(model: &Model, dm: &DesignMatrix) -> Result<(), GlmError> {
    check_dim(&model.weights, dm)
}

pub fn predict_proba(model: &Model, dm: &DesignMatrix) -> Result<Vec<f64>, GlmError> {
    check_model(model, dm)?;
    Ok(dm.rows().map(|row| sigmoid(dot(row, &model.weights))).collect())
}

/// Label 1 iff the probability is at least the model threshold.
pub fn predict_label(model: &Model, dm: &DesignMatrix) -> Result<Vec<u8>, GlmError> {
    Ok(predict_proba(model, dm)?
        .into_iter()
        .map(|p| u8::from(p >= model.threshold))
        .collect())
}

/// Asymptotic standard errors: square roots of the diagonal of the inverse
/// penalized Hessian at `weights`.
pub fn standard_errors(weights: &[f64], dm: &DesignMatrix, ridge: f64) -> Result<Vec<f64>, GlmError> {
    let h = hessian(weights, dm, ridge)?;
    let inv = h.cholesky().ok_or(GlmError::SingularSystem)?.inverse();
    Ok(inv.diagonal().into_iter().map(f64::sqrt).collect())
}

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::tabular::Scaling;

const FORMAT_TAG: &str = "enroll-logit/1";

/// A fitted logistic model. `weights[0]` is the intercept and `weights[j]`
/// pairs with `feature_names[j - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub weights: Vec<f64>,
    pub feature_names: Vec<String>,
    /// Transform applied to each raw feature before the dot product.
    pub scaling: Vec<Scaling>,
    pub ridge: f64,
    pub threshold: f64,
    pub converged: bool,
    pub iterations_used: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelFormatError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("unsupported model format `{0}`")]
    Format(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

impl Model {
    /// All-zero weights over the given features.
    pub fn zeros(feature_names: Vec<String>, threshold: f64) -> Self {
        let d = feature_names.len();
        Model {
            weights: vec![0.0; d + 1],
            scaling: vec![Scaling::IDENTITY; d],
            feature_names,
            ridge: 0.0,
            threshold,
            converged: true,
            iterations_used: 0,
            final_loss: 0.0,
        }
    }

    pub fn intercept(&self) -> f64 {
        self.weights[0]
    }

    pub fn validate(&self) -> Result<(), ModelFormatError> {
        if self.feature_names.len() + 1 != self.weights.len() {
            return Err(ModelFormatError::Invalid(format!(
                "{} feature names for {} weights",
                self.feature_names.len(),
                self.weights.len()
            )));
        }
        if self.scaling.len() != self.feature_names.len() {
            return Err(ModelFormatError::Invalid("scaling length differs from features".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(ModelFormatError::Invalid("non-finite weight".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ModelFormatError::Invalid(format!("threshold {}", self.threshold)));
        }
        Ok(())
    }

    /// Serializes to the line-oriented `key = value` model document.
    ///
    /// Floats are written with their shortest round-trip representation, so
    /// [`Model::from_text`] restores them bit for bit.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "format = {FORMAT_TAG}");
        let _ = writeln!(s, "features = {}", self.feature_names.len());
        let _ = writeln!(s, "ridge = {:?}", self.ridge);
        let _ = writeln!(s, "threshold = {:?}", self.threshold);
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "iterations_used = {}", self.iterations_used);
        let _ = writeln!(s, "final_loss = {:?}", self.final_loss);
        let _ = writeln!(s, "intercept = {:?}", self.weights[0]);
        for (j, name) in self.feature_names.iter().enumerate() {
            let _ = writeln!(s, "feature.{j}.name = {name}");
            let _ = writeln!(s, "feature.{j}.weight = {:?}", self.weights[j + 1]);
            if !self.scaling[j].is_identity() {
                let _ = writeln!(s, "feature.{j}.center = {:?}", self.scaling[j].center);
                let _ = writeln!(s, "feature.{j}.scale = {:?}", self.scaling[j].scale);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ModelFormatError> {
        let mut kv: HashMap<&str, &str> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| ModelFormatError::Syntax {
                line: i + 1,
                reason: "expected `key = value`".into(),
            })?;
            if kv.insert(k.trim(), v).is_some() {
                return Err(ModelFormatError::Syntax {
                    line: i + 1,
                    reason: format!("duplicate key `{}`", k.trim()),
                });
            }
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| ModelFormatError::MissingKey(k.into()));
        fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ModelFormatError> {
            v.trim()
                .parse()
                .map_err(|_| ModelFormatError::BadValue { key: key.into(), value: v.into() })
        }

        let format = get("format")?.trim();
        if format != FORMAT_TAG {
            return Err(ModelFormatError::Format(format.into()));
        }
        let d: usize = parse("features", get("features")?)?;
        let mut weights = vec![parse::<f64>("intercept", get("intercept")?)?];
        let mut feature_names = Vec::with_capacity(d);
        let mut scaling = Vec::with_capacity(d);
        for j in 0..d {
            feature_names.push(get(&format!("feature.{j}.name"))?.to_string());
            let wk = format!("feature.{j}.weight");
            weights.push(parse(&wk, get(&wk)?)?);
            let ck = format!("feature.{j}.center");
            let sk = format!("feature.{j}.scale");
            scaling.push(match (kv.get(ck.as_str()), kv.get(sk.as_str())) {
                (None, None) => Scaling::IDENTITY,
                (Some(c), Some(s)) => Scaling { center: parse(&ck, c)?, scale: parse(&sk, s)? },
                _ => return Err(ModelFormatError::MissingKey(format!("feature.{j} scaling pair"))),
            });
        }
        let model = Model {
            weights,
            feature_names,
            scaling,
            ridge: parse("ridge", get("ridge")?)?,
            threshold: parse("threshold", get("threshold")?)?,
            converged: parse("converged", get("converged")?)?,
            iterations_used: parse("iterations_used", get("iterations_used")?)?,
            final_loss: parse("final_loss", get("final_loss")?)?,
        };
        model.validate()?;
        Ok(model)
    }
}

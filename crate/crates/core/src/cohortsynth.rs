//! Seeded synthetic admission cohorts with known logistic coefficients.
//!
//! Features are drawn independently from their laws (optionally a binary
//! feature may depend on an earlier binary feature) and the label is drawn
//! as `Bernoulli(sigmoid(w · [1, x]))`, where `x` is the encoded feature row.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glm::sigmoid;
use crate::tabular::{Cell, Column, ColumnKind, Dataset, Schema, TabularError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
    #[error("missing-value rate {0} outside [0, 1]")]
    InvalidRate(f64),
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

/// Generation law for one feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum FeatureLaw {
    Bernoulli { q: f64 },
    /// Poisson(mean) conditioned on the value being at most `max`.
    TruncatedPoisson { mean: f64, max: u64 },
    /// Levels with probabilities; encoded against the sorted levels with the
    /// smallest as reference.
    Categorical { levels: Vec<String>, probs: Vec<f64> },
}

/// Makes a binary feature depend on an earlier binary feature: when that
/// feature is 1 the success probability is `q` instead of the law's own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dependency {
    pub feature: String,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub law: FeatureLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<Dependency>,
}

impl FeatureSpec {
    pub fn bernoulli(name: &str, q: f64) -> Self {
        FeatureSpec { name: name.into(), law: FeatureLaw::Bernoulli { q }, when: None }
    }

    fn kind(&self) -> ColumnKind {
        match self.law {
            FeatureLaw::Bernoulli { .. } => ColumnKind::Binary,
            FeatureLaw::TruncatedPoisson { .. } => ColumnKind::Count,
            FeatureLaw::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    fn encoded_dim(&self) -> usize {
        match &self.law {
            FeatureLaw::Categorical { levels, .. } => levels.len().saturating_sub(1),
            _ => 1,
        }
    }
}

fn default_id() -> String {
    "id".into()
}

fn default_target() -> String {
    "enrolled".into()
}

/// Cohort description, loadable from TOML:
///
/// ```toml
/// n = 1000
/// seed = 7
/// true_weights = [-1.0, 0.8, -0.5]   # intercept first, then encoded features
///
/// [[features]]
/// name = "With_Honors"
/// law = "bernoulli"
/// q = 0.3
///
/// [[features]]
/// name = "Total_Number_Siblings"
/// law = "truncated_poisson"
/// mean = 2.0
/// max = 8
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n: usize,
    pub seed: u64,
    pub true_weights: Vec<f64>,
    pub features: Vec<FeatureSpec>,
    #[serde(default = "default_id")]
    pub id_column: String,
    #[serde(default = "default_target")]
    pub target: String,
}

fn is_prob(q: f64) -> bool {
    (0.0..=1.0).contains(&q)
}

impl CohortSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let spec: CohortSpec =
            toml::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SynthError::InvalidSpec(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("cohort spec serializes")
    }

    pub fn encoded_dim(&self) -> usize {
        self.features.iter().map(FeatureSpec::encoded_dim).sum()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        for (i, f) in self.features.iter().enumerate() {
            match &f.law {
                FeatureLaw::Bernoulli { q } if !is_prob(*q) => {
                    return bad(format!("`{}`: Bernoulli parameter {q} outside [0, 1]", f.name))
                }
                FeatureLaw::TruncatedPoisson { mean, max } => {
                    if !(mean.is_finite() && *mean >= 0.0 && *mean <= 1e3) {
                        return bad(format!("`{}`: Poisson mean {mean} outside [0, 1000]", f.name));
                    }
                    if (*max as f64) < mean.floor() {
                        return bad(format!("`{}`: truncation {max} below the mean {mean}", f.name));
                    }
                }
                FeatureLaw::Categorical { levels, probs } => {
                    if levels.is_empty() || levels.len() != probs.len() {
                        return bad(format!("`{}`: levels and probs must be non-empty and aligned", f.name));
                    }
                    if probs.iter().any(|p| !is_prob(*p)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                        return bad(format!("`{}`: level probabilities must lie in [0, 1] and sum to 1", f.name));
                    }
                    let mut sorted = levels.clone();
                    sorted.sort();
                    sorted.dedup();
                    if sorted.len() != levels.len() || levels.iter().any(String::is_empty) {
                        return bad(format!("`{}`: levels must be distinct and non-empty", f.name));
                    }
                }
                _ => {}
            }
            if let Some(dep) = &f.when {
                if !matches!(f.law, FeatureLaw::Bernoulli { .. }) {
                    return bad(format!("`{}`: only binary features may depend on another", f.name));
                }
                if !is_prob(dep.q) {
                    return bad(format!("`{}`: dependent parameter {} outside [0, 1]", f.name, dep.q));
                }
                let parent = self.features[..i].iter().find(|p| p.name == dep.feature);
                if !parent.is_some_and(|p| matches!(p.law, FeatureLaw::Bernoulli { .. })) {
                    return bad(format!(
                        "`{}`: depends on `{}`, which is not an earlier binary feature",
                        f.name, dep.feature
                    ));
                }
            }
        }
        if self.true_weights.len() != self.encoded_dim() + 1 {
            return bad(format!(
                "true_weights has {} entries, expected {} (intercept + encoded features)",
                self.true_weights.len(),
                self.encoded_dim() + 1
            ));
        }
        if self.true_weights.iter().any(|w| !w.is_finite()) {
            return bad("true_weights must be finite".into());
        }
        self.schema()?;
        Ok(())
    }

    /// Schema of generated cohorts: identifier, features in order, target.
    pub fn schema(&self) -> Result<Schema, SynthError> {
        let mut columns = vec![Column::new(self.id_column.clone(), ColumnKind::Identifier)];
        columns.extend(self.features.iter().map(|f| Column::new(f.name.clone(), f.kind())));
        columns.push(Column::new(self.target.clone(), ColumnKind::Target));
        Ok(Schema::new(columns)?)
    }
}

fn draw_count<R: Rng>(rng: &mut R, mean: f64, max: u64) -> u64 {
    if mean == 0.0 {
        return 0;
    }
    let law = Poisson::new(mean).expect("validated mean");
    loop {
        let v: f64 = law.sample(rng);
        if v <= max as f64 {
            return v as u64;
        }
    }
}

/// Draws a cohort. The same spec (seed included) always yields the same dataset.
pub fn generate(spec: &CohortSpec) -> Result<Dataset, SynthError> {
    spec.validate()?;
    let schema = spec.schema()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = (spec.n.max(1)).to_string().len();
    let mut rows = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let mut cells = Vec::with_capacity(spec.features.len() + 2);
        cells.push(Cell::Text(format!("S{:0width$}", i + 1)));
        let mut z = spec.true_weights[0];
        let mut w = spec.true_weights[1..].iter();
        for (j, f) in spec.features.iter().enumerate() {
            match &f.law {
                FeatureLaw::Bernoulli { q } => {
                    let q = match &f.when {
                        Some(dep) => {
                            let parent = spec.features[..j]
                                .iter()
                                .position(|p| p.name == dep.feature)
                                .expect("validated dependency");
                            if cells[parent + 1] == Cell::Binary(true) { dep.q } else { *q }
                        }
                        None => *q,
                    };
                    let b = rng.random_bool(q);
                    z += w.next().unwrap() * f64::from(u8::from(b));
                    cells.push(Cell::Binary(b));
                }
                FeatureLaw::TruncatedPoisson { mean, max } => {
                    let c = draw_count(&mut rng, *mean, *max);
                    z += w.next().unwrap() * c as f64;
                    cells.push(Cell::Count(c));
                }
                FeatureLaw::Categorical { levels, probs } => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = levels.len() - 1;
                    for (l, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = l;
                            break;
                        }
                    }
                    let mut sorted: Vec<&String> = levels.iter().collect();
                    sorted.sort();
                    for level in sorted.into_iter().skip(1) {
                        let wl = w.next().unwrap();
                        if *level == levels[pick] {
                            z += wl;
                        }
                    }
                    cells.push(Cell::Text(levels[pick].clone()));
                }
            }
        }
        cells.push(Cell::Binary(rng.random_bool(sigmoid(z))));
        rows.push(cells);
    }
    Ok(Dataset::new(schema, rows)?)
}

/// Sets each feature cell to missing with probability `rate`. Identifier and
/// target cells are untouched.
pub fn inject_missing(ds: &Dataset, rate: f64, seed: u64) -> Result<Dataset, SynthError> {
    if !is_prob(rate) {
        return Err(SynthError::InvalidRate(rate));
    }
    let features = ds.schema().feature_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = ds
        .rows()
        .iter()
        .map(|row| {
            let mut row = row.clone();
            for &c in &features {
                if rng.random_bool(rate) {
                    row[c] = Cell::Missing;
                }
            }
            row
        })
        .collect();
    Ok(Dataset::new(ds.schema().clone(), rows)?)
}

/// Published counts the reference cohort is calibrated to.
pub mod published {
    pub const APPLICANTS: u64 = 7_879;
    pub const ADMITTED: u64 = 4_486;
    pub const ENROLLED: u64 = 3_414;
    pub const IN_PROVINCE: (u64, u64) = (6_489, 3_199);
    pub const OUT_PROVINCE: (u64, u64) = (1_390, 215);
    pub const MALE: (u64, u64) = (3_635, 1_870);
    pub const FEMALE: (u64, u64) = (4_244, 1_693);
    /// Online applicants and online enrollees; on-site is the remainder.
    pub const ONLINE: (u64, u64) = (1_962, 892);
}

/// Calibrated weights of the reference cohort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperCalibration {
    pub intercept: f64,
    pub within_province: f64,
    pub male: f64,
    pub online: f64,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Solves `f(c) = target` for increasing `f` by bisection on [-40, 40].
fn solve_increasing(target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Weights for [`paper_cohort`].
///
/// The male and online effects are the log-odds ratios between the published
/// group rates. With those fixed, the province intercepts solve two 1-D
/// equations: the expected enrollment rate over the gender and online mix
/// equals the published in-province and out-of-province rates.
pub fn paper_calibration() -> PaperCalibration {
    use published::*;
    let frac = |(a, b): (u64, u64)| b as f64 / a as f64;
    let p_male = MALE.0 as f64 / APPLICANTS as f64;
    let p_online = ONLINE.0 as f64 / APPLICANTS as f64;
    let onsite = (APPLICANTS - ONLINE.0, ENROLLED - ONLINE.1);

    let male = logit(frac(MALE)) - logit(frac(FEMALE));
    let online = logit(frac(ONLINE)) - logit(frac(onsite));
    let mixture = |c: f64| {
        let mut e = 0.0;
        for (m, pm) in [(1.0, p_male), (0.0, 1.0 - p_male)] {
            for (o, po) in [(1.0, p_online), (0.0, 1.0 - p_online)] {
                e += pm * po * sigmoid(c + male * m + online * o);
            }
        }
        e
    };
    let c_in = solve_increasing(frac(IN_PROVINCE), mixture);
    let c_out = solve_increasing(frac(OUT_PROVINCE), mixture);
    PaperCalibration { intercept: c_out, within_province: c_in - c_out, male, online }
}

/// Spec of the reference applicant cohort (n = 7,879).
///
/// Within_Province, Male and Online_Application carry calibrated effects.
/// The remaining catalog features are included with zero weight and
/// placeholder rates, so feature selection has uninformative columns to reject.
pub fn paper_cohort_spec(seed: u64) -> CohortSpec {
    use published::*;
    let cal = paper_calibration();
    let rate = |num: u64| num as f64 / APPLICANTS as f64;
    CohortSpec {
        n: APPLICANTS as usize,
        seed,
        true_weights: vec![cal.intercept, cal.within_province, cal.male, cal.online, 0.0, 0.0, 0.0, 0.0, 0.0],
        features: vec![
            FeatureSpec::bernoulli("Within_Province", rate(IN_PROVINCE.0)),
            FeatureSpec::bernoulli("Male", rate(MALE.0)),
            FeatureSpec::bernoulli("Online_Application", rate(ONLINE.0)),
            FeatureSpec::bernoulli("Religion_Binary", 0.5),
            FeatureSpec::bernoulli("Type_of_School", 0.5),
            FeatureSpec::bernoulli("With_Honors", 0.5),
            FeatureSpec::bernoulli("School_Choice", 0.5),
            FeatureSpec {
                name: "Total_Number_Siblings".into(),
                law: FeatureLaw::TruncatedPoisson { mean: 2.0, max: 10 },
                when: None,
            },
        ],
        id_column: "Applicant_ID".into(),
        target: "OL_Pursued".into(),
    }
}

pub fn paper_cohort(seed: u64) -> Dataset {
    generate(&paper_cohort_spec(seed)).expect("reference spec is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(weights: Vec<f64>, n: usize) -> CohortSpec {
        CohortSpec {
            n,
            seed: 11,
            true_weights: weights,
            features: vec![FeatureSpec::bernoulli("a", 0.4)],
            id_column: "id".into(),
            target: "y".into(),
        }
    }

    fn positive_rate(ds: &Dataset) -> f64 {
        ds.labels().iter().filter(|l| **l == Some(true)).count() as f64 / ds.len() as f64
    }

    fn three_sigma(p: f64, n: usize) -> f64 {
        3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn zero_weights_give_half() {
        let ds = generate(&spec(vec![0.0, 0.0], 20_000)).unwrap();
        assert!((positive_rate(&ds) - 0.5).abs() < three_sigma(0.5, 20_000));
    }

    #[test]
    fn intercept_ln3_gives_three_quarters() {
        let ds = generate(&spec(vec![3f64.ln(), 0.0], 20_000)).unwrap();
        assert!((positive_rate(&ds) - 0.75).abs() < three_sigma(0.75, 20_000));
    }

    #[test]
    fn deterministic_per_seed() {
        let s = spec(vec![0.2, 1.0], 500);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let other = CohortSpec { seed: 12, ..s.clone() };
        assert_ne!(generate(&s).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn validation_errors() {
        let mut s = spec(vec![0.0, 0.0], 10);
        s.features[0].law = FeatureLaw::Bernoulli { q: 1.2 };
        assert!(matches!(s.validate(), Err(SynthError::InvalidSpec(_))));
        let s = spec(vec![0.0], 10);
        assert!(s.validate().is_err());
        let mut s = spec(vec![0.0, 0.0, 0.0], 10);
        s.features.push(FeatureSpec {
            name: "b".into(),
            law: FeatureLaw::Bernoulli { q: 0.5 },
            when: Some(Dependency { feature: "missing".into(), q: 0.3 }),
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn dependency_hook_shifts_rate() {
        let mut s = spec(vec![0.0, 0.0, 0.0], 20_000);
        s.features[0].law = FeatureLaw::Bernoulli { q: 0.5 };
        s.features.push(FeatureSpec {
            name: "b".into(),
            law: FeatureLaw::Bernoulli { q: 0.1 },
            when: Some(Dependency { feature: "a".into(), q: 0.9 }),
        });
        let ds = generate(&s).unwrap();
        let (mut with_a, mut b_with_a) = (0, 0);
        for r in ds.rows() {
            if r[1] == Cell::Binary(true) {
                with_a += 1;
                b_with_a += usize::from(r[2] == Cell::Binary(true));
            }
        }
        let rate = b_with_a as f64 / with_a as f64;
        assert!((rate - 0.9).abs() < three_sigma(0.9, with_a));
    }

    #[test]
    fn categorical_and_count_laws() {
        let s = CohortSpec {
            n: 20_000,
            seed: 5,
            true_weights: vec![0.0, 0.0, 0.0, 0.0],
            features: vec![
                FeatureSpec {
                    name: "college".into(),
                    law: FeatureLaw::Categorical {
                        levels: vec!["ENG".into(), "ACC".into(), "ART".into()],
                        probs: vec![0.5, 0.3, 0.2],
                    },
                    when: None,
                },
                FeatureSpec {
                    name: "sib".into(),
                    law: FeatureLaw::TruncatedPoisson { mean: 2.0, max: 4 },
                    when: None,
                },
            ],
            id_column: "id".into(),
            target: "y".into(),
        };
        let ds = generate(&s).unwrap();
        let eng = ds.column(1).filter(|c| c.as_text() == Some("ENG")).count();
        assert!((eng as f64 / 20_000.0 - 0.5).abs() < three_sigma(0.5, 20_000));
        assert!(ds.column(2).all(|c| matches!(c, Cell::Count(v) if *v <= 4)));
        let spec_text = s.to_toml_string();
        assert_eq!(CohortSpec::from_toml_str(&spec_text).unwrap(), s);
    }

    #[test]
    fn inject_missing_bounds() {
        let ds = generate(&spec(vec![0.0, 0.0], 100)).unwrap();
        assert_eq!(inject_missing(&ds, 0.0, 3).unwrap(), ds);
        let all = inject_missing(&ds, 1.0, 3).unwrap();
        assert!(all.column(1).all(Cell::is_missing));
        assert!(all.column(0).all(|c| !c.is_missing()));
        assert!(all.column(2).all(|c| !c.is_missing()));
        assert_eq!(inject_missing(&ds, 1.5, 0).unwrap_err(), SynthError::InvalidRate(1.5));
    }

    #[test]
    fn inject_missing_fraction() {
        let s = paper_cohort_spec(4);
        let ds = generate(&s).unwrap();
        let out = inject_missing(&ds, 0.1, 9).unwrap();
        let cells = ds.len() * s.features.len();
        let frac = out.missing_count() as f64 / cells as f64;
        assert!((frac - 0.1).abs() < three_sigma(0.1, cells));
    }

    #[test]
    fn calibration_effect_signs() {
        let cal = paper_calibration();
        assert!(cal.within_province > 0.0);
        assert!(cal.male > 0.0);
        assert!(cal.online > 0.0);
    }
}

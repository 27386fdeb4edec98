//! Enrollment-likelihood modelling toolkit.
//!
//! - [`tabular`]: schema-checked CSV ingestion, cleaning and encoding
//! - [`glm`]: ridge logistic regression fitted by Newton/IRLS
//! - [`select`]: correlation ranking and best-first wrapper selection
//! - [`evalkit`]: stratified k-fold CV, confusion matrices, rate metrics
//! - [`cohortsynth`]: seeded synthetic cohorts with known coefficients
//! - [`cli`]: the `profile` / `run` / `predict` / `synth` pipeline driver

pub mod cli;
pub mod cohortsynth;
pub mod evalkit;
pub mod glm;
pub mod select;
pub mod tabular;

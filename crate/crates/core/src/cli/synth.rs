use std::path::{Path, PathBuf};

use crate::cohortsynth::{generate, paper_cohort_spec, CohortSpec};
use crate::tabular::write_csv_file;

use super::{write_file, CliError, Stage};

pub enum SynthSource<'a> {
    SpecFile(&'a Path),
    /// The reference 7,879-applicant cohort with the given seed.
    PaperCohort(u64),
}

/// Writes a generated cohort as CSV plus its schema next to it
/// (`<stem>.schema.toml`). Returns the schema path.
pub fn cmd_synth(source: SynthSource<'_>, out: &Path, seed: Option<u64>) -> Result<PathBuf, CliError> {
    let mut spec = match source {
        SynthSource::SpecFile(path) => CohortSpec::load(path).map_err(|e| CliError::synth(Stage::Config, e))?,
        SynthSource::PaperCohort(seed) => paper_cohort_spec(seed),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let ds = generate(&spec).map_err(|e| CliError::synth(Stage::Synth, e))?;
    write_csv_file(&ds, out).map_err(|e| CliError::tabular(Stage::Synth, e))?;
    let schema_path = out.with_extension("schema.toml");
    write_file(Stage::Synth, &schema_path, &ds.schema().to_toml_string())?;
    Ok(schema_path)
}

use std::path::Path;

use crate::glm::{self, Model};
use crate::tabular::{apply_encoding, parse_csv, plan_from_names, Schema};

use super::{CliError, Stage};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictSummary {
    pub rows: usize,
    /// Sum of the predicted probabilities.
    pub expected_enrollees: f64,
    pub predicted_positive: usize,
}

impl PredictSummary {
    pub fn line(&self) -> String {
        format!(
            "rows = {}, expected_enrollees = {:.3}, predicted_positive = {}",
            self.rows, self.expected_enrollees, self.predicted_positive
        )
    }
}

/// Scores `input` with a saved model and writes the input rows with
/// `probability` and `predicted_label` columns appended.
pub fn cmd_predict(
    model_path: &Path,
    input: &Path,
    schema_path: &Path,
    output: &Path,
) -> Result<PredictSummary, CliError> {
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| CliError::io(Stage::Load, format!("{}: {e}", model_path.display())))?;
    let model = Model::from_text(&text).map_err(|e| CliError::model(Stage::Load, e))?;
    let schema = Schema::load(schema_path).map_err(|e| CliError::tabular(Stage::Load, e))?;
    let raw = std::fs::read(input)
        .map_err(|e| CliError::io(Stage::Load, format!("{}: {e}", input.display())))?;
    let ds = parse_csv(raw.as_slice(), &schema).map_err(|e| CliError::tabular(Stage::Load, e))?;

    let plan = plan_from_names(&schema, &model.feature_names, &model.scaling)
        .map_err(|e| CliError::tabular(Stage::Predict, e))?;
    let dm = apply_encoding(&ds, &plan, false).map_err(|e| CliError::tabular(Stage::Predict, e))?;
    let probs = glm::predict_proba(&model, &dm).map_err(|e| CliError::glm(Stage::Predict, e))?;
    let labels = glm::predict_label(&model, &dm).map_err(|e| CliError::glm(Stage::Predict, e))?;

    // echo the input records verbatim, then the two score columns
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(raw.as_slice());
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::new(Stage::Predict, super::ErrorClass::Data, e.to_string());
    let mut header = reader.headers().map_err(csv_err)?.clone();
    header.push_field("probability");
    header.push_field("predicted_label");
    writer.write_record(&header).map_err(csv_err)?;
    for (record, (p, l)) in reader.records().zip(probs.iter().zip(&labels)) {
        let mut record = record.map_err(csv_err)?;
        record.push_field(&format!("{p:?}"));
        record.push_field(&l.to_string());
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::io(Stage::Report, e.to_string()))?;
    std::fs::write(output, bytes)
        .map_err(|e| CliError::io(Stage::Report, format!("{}: {e}", output.display())))?;

    Ok(PredictSummary {
        rows: probs.len(),
        expected_enrollees: probs.iter().sum(),
        predicted_positive: labels.iter().filter(|&&l| l == 1).count(),
    })
}

use std::collections::BTreeSet;

use super::dataset::{Cell, Dataset};
use super::schema::ColumnKind;
use super::TabularError;

/// Affine transform applied to a raw feature value: `(raw - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub center: f64,
    pub scale: f64,
}

impl Scaling {
    pub const IDENTITY: Scaling = Scaling { center: 0.0, scale: 1.0 };

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.center) / self.scale
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

impl Default for Scaling {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Numeric design matrix: column 0 is the intercept (all ones), followed by
/// one column per encoded feature. Labels are 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    cols: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    feature_names: Vec<String>,
    scaling: Vec<Scaling>,
}

impl DesignMatrix {
    /// Builds a design matrix from feature rows (without intercept) and labels.
    pub fn from_rows(
        rows: &[Vec<f64>],
        y: &[f64],
        feature_names: Vec<String>,
    ) -> Result<Self, TabularError> {
        let d = feature_names.len();
        if rows.is_empty() {
            return Err(TabularError::EmptyDataset);
        }
        if rows.len() != y.len() {
            return Err(TabularError::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                y.len()
            )));
        }
        let mut x = Vec::with_capacity(rows.len() * (d + 1));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(TabularError::InvalidRow {
                    row: i,
                    reason: format!("{} features, expected {d}", row.len()),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(TabularError::InvalidRow { row: i, reason: "non-finite value".into() });
            }
            x.push(1.0);
            x.extend_from_slice(row);
        }
        if let Some(bad) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(TabularError::InvalidRow { row: bad, reason: "label not in {0, 1}".into() });
        }
        Ok(DesignMatrix {
            n: rows.len(),
            cols: d + 1,
            x,
            y: y.to_vec(),
            scaling: vec![Scaling::IDENTITY; d],
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of columns including the intercept.
    pub fn dim(&self) -> usize {
        self.cols
    }

    /// Number of encoded features (excluding the intercept).
    pub fn num_features(&self) -> usize {
        self.cols - 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.x.chunks_exact(self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.cols + j]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn labels(&self) -> Vec<u8> {
        self.y.iter().map(|&v| v as u8).collect()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn scaling(&self) -> &[Scaling] {
        &self.scaling
    }

    /// Values of encoded feature `f` (0-based, intercept excluded).
    pub fn feature_column(&self, f: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, f + 1)).collect()
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1.0).count()
    }

    /// Restricts to the given features (0-based, intercept excluded); the
    /// intercept column is always kept.
    pub fn select_features(&self, features: &[usize]) -> DesignMatrix {
        let cols = features.len() + 1;
        let mut x = Vec::with_capacity(self.n * cols);
        for row in self.rows() {
            x.push(row[0]);
            x.extend(features.iter().map(|&f| row[f + 1]));
        }
        DesignMatrix {
            n: self.n,
            cols,
            x,
            y: self.y.clone(),
            feature_names: features.iter().map(|&f| self.feature_names[f].clone()).collect(),
            scaling: features.iter().map(|&f| self.scaling[f]).collect(),
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> DesignMatrix {
        let mut x = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            x.extend_from_slice(self.row(i));
        }
        DesignMatrix {
            n: indices.len(),
            cols: self.cols,
            x,
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            scaling: self.scaling.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EncodeOptions {
    /// z-score count columns using the training mean and standard deviation.
    pub standardize_counts: bool,
}

/// How one encoded column is derived from the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoding {
    pub column: String,
    /// `Some(level)` for a categorical indicator.
    pub level: Option<String>,
    pub scaling: Scaling,
}

impl FeatureEncoding {
    pub fn name(&self) -> String {
        match &self.level {
            Some(level) => format!("{}={level}", self.column),
            None => self.column.clone(),
        }
    }
}

/// Encodes a complete dataset with default options.
pub fn encode(ds: &Dataset) -> Result<DesignMatrix, TabularError> {
    encode_with(ds, EncodeOptions::default()).map(|(dm, _)| dm)
}

/// Learns the feature encoding from `ds` and applies it.
///
/// Binary columns map to 0/1 and counts pass through as reals. A categorical
/// column with `c` observed levels becomes `c - 1` indicators, the
/// lexicographically smallest level being the reference.
pub fn encode_with(
    ds: &Dataset,
    opts: EncodeOptions,
) -> Result<(DesignMatrix, Vec<FeatureEncoding>), TabularError> {
    if ds.is_empty() {
        return Err(TabularError::EmptyDataset);
    }
    let schema = ds.schema();
    let mut plan = Vec::new();
    for c in schema.feature_indices() {
        let col = &schema.columns[c];
        match col.kind {
            ColumnKind::Categorical => {
                let levels: BTreeSet<&str> = ds.column(c).filter_map(Cell::as_text).collect();
                plan.extend(levels.into_iter().skip(1).map(|level| FeatureEncoding {
                    column: col.name.clone(),
                    level: Some(level.to_string()),
                    scaling: Scaling::IDENTITY,
                }));
            }
            ColumnKind::Count if opts.standardize_counts => {
                let vals: Vec<f64> = ds.column(c).filter_map(Cell::as_f64).collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                plan.push(FeatureEncoding {
                    column: col.name.clone(),
                    level: None,
                    scaling: Scaling { center: mean, scale: if sd > 0.0 { sd } else { 1.0 } },
                });
            }
            _ => plan.push(FeatureEncoding {
                column: col.name.clone(),
                level: None,
                scaling: Scaling::IDENTITY,
            }),
        }
    }
    let dm = apply_encoding(ds, &plan, true)?;
    Ok((dm, plan))
}

/// Applies a fixed encoding to `ds`, e.g. a model's features on new data.
///
/// With `require_labels == false`, rows with a missing target get label 0.0;
/// callers that only score rows ignore the labels.
pub fn apply_encoding(
    ds: &Dataset,
    plan: &[FeatureEncoding],
    require_labels: bool,
) -> Result<DesignMatrix, TabularError> {
    if ds.is_empty() {
        return Err(TabularError::EmptyDataset);
    }
    let schema = ds.schema();
    let mut missing = Vec::new();
    let mut sources = Vec::with_capacity(plan.len());
    for fe in plan {
        match schema.index_of(&fe.column) {
            Some(c) if schema.columns[c].kind.is_feature() => {
                let categorical = schema.columns[c].kind == ColumnKind::Categorical;
                if categorical != fe.level.is_some() {
                    missing.push(fe.name());
                }
                sources.push(c);
            }
            _ => missing.push(fe.name()),
        }
    }
    if !missing.is_empty() {
        return Err(TabularError::MissingFeatures(missing));
    }

    let t = schema.target_index();
    let mut rows = Vec::with_capacity(ds.len());
    let mut y = Vec::with_capacity(ds.len());
    for (r, row) in ds.rows().iter().enumerate() {
        let mut out = Vec::with_capacity(plan.len());
        for (fe, &c) in plan.iter().zip(&sources) {
            let raw = match (&row[c], &fe.level) {
                (Cell::Missing, _) => {
                    return Err(TabularError::MissingValue {
                        row: r,
                        column: schema.columns[c].name.clone(),
                    })
                }
                (Cell::Text(v), Some(level)) => f64::from(u8::from(v == level)),
                (cell, _) => cell.as_f64().expect("numeric feature cell"),
            };
            out.push(fe.scaling.apply(raw));
        }
        rows.push(out);
        match row[t] {
            Cell::Binary(b) => y.push(f64::from(u8::from(b))),
            _ if !require_labels => y.push(0.0),
            _ => return Err(TabularError::MissingValue { row: r, column: schema.target_name().into() }),
        }
    }
    let mut dm = DesignMatrix::from_rows(&rows, &y, plan.iter().map(FeatureEncoding::name).collect())?;
    dm.scaling = plan.iter().map(|fe| fe.scaling).collect();
    Ok(dm)
}

/// Rebuilds an encoding plan from stored feature names against a schema.
///
/// A name that is itself a column is a direct feature; otherwise `col=level`
/// is an indicator on categorical column `col`.
pub fn plan_from_names(
    schema: &super::Schema,
    names: &[String],
    scaling: &[Scaling],
) -> Result<Vec<FeatureEncoding>, TabularError> {
    let mut plan = Vec::with_capacity(names.len());
    let mut missing = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let sc = scaling.get(i).copied().unwrap_or_default();
        if let Some(c) = schema.index_of(name) {
            if schema.columns[c].kind.is_feature() && schema.columns[c].kind != ColumnKind::Categorical {
                plan.push(FeatureEncoding { column: name.clone(), level: None, scaling: sc });
                continue;
            }
        }
        match name.split_once('=') {
            Some((col, level))
                if schema.index_of(col).map(|c| schema.columns[c].kind)
                    == Some(ColumnKind::Categorical) =>
            {
                plan.push(FeatureEncoding {
                    column: col.to_string(),
                    level: Some(level.to_string()),
                    scaling: sc,
                })
            }
            _ => missing.push(name.clone()),
        }
    }
    if missing.is_empty() {
        Ok(plan)
    } else {
        Err(TabularError::MissingFeatures(missing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{parse_csv, Column, Schema};

    fn schema() -> Schema {
        Schema::new(vec![
            Column::new("id", ColumnKind::Identifier),
            Column::new("With_Honors", ColumnKind::Binary),
            Column::new("Total_Number_Siblings", ColumnKind::Count),
            Column::new("College", ColumnKind::Categorical),
            Column::new("y", ColumnKind::Target),
        ])
        .unwrap()
    }

    fn sample() -> Dataset {
        parse_csv(
            "id,With_Honors,Total_Number_Siblings,College,y\n\
             a,yes,3,ENG,1\n\
             b,no,0,ACC,0\n\
             c,no,1,ART,1\n"
                .as_bytes(),
            &schema(),
        )
        .unwrap()
    }

    #[test]
    fn encodes_each_kind() {
        let dm = encode(&sample()).unwrap();
        assert_eq!(
            dm.feature_names(),
            &["With_Honors", "Total_Number_Siblings", "College=ART", "College=ENG"]
        );
        assert_eq!(dm.row(0), &[1.0, 1.0, 3.0, 0.0, 1.0]);
        assert_eq!(dm.row(1), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(dm.y(), &[1.0, 0.0, 1.0]);
        let intercept: f64 = dm.rows().map(|r| r[0]).sum();
        assert_eq!(intercept, 3.0);
    }

    #[test]
    fn missing_cell_rejected() {
        let ds = parse_csv(
            "id,With_Honors,Total_Number_Siblings,College,y\na,,3,ENG,1\n".as_bytes(),
            &schema(),
        )
        .unwrap();
        assert!(matches!(encode(&ds), Err(TabularError::MissingValue { .. })));
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = Dataset::new(schema(), vec![]).unwrap();
        assert_eq!(encode(&ds).unwrap_err(), TabularError::EmptyDataset);
    }

    #[test]
    fn standardized_counts() {
        let (dm, plan) =
            encode_with(&sample(), EncodeOptions { standardize_counts: true }).unwrap();
        let col = dm.feature_column(1);
        let mean: f64 = col.iter().sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
        assert!((plan[1].scaling.center - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn plan_roundtrips_through_names() {
        let (dm, plan) = encode_with(&sample(), EncodeOptions::default()).unwrap();
        let rebuilt = plan_from_names(&schema(), dm.feature_names(), dm.scaling()).unwrap();
        assert_eq!(rebuilt, plan);
        let err = plan_from_names(&schema(), &["Gender".into()], &[]).unwrap_err();
        assert_eq!(err, TabularError::MissingFeatures(vec!["Gender".into()]));
    }

    #[test]
    fn select_features_keeps_intercept() {
        let dm = encode(&sample()).unwrap();
        let sub = dm.select_features(&[1]);
        assert_eq!(sub.dim(), 2);
        assert_eq!(sub.row(0), &[1.0, 3.0]);
        assert_eq!(sub.feature_names(), &["Total_Number_Siblings"]);
        let none = dm.select_features(&[]);
        assert_eq!(none.row(2), &[1.0]);
    }
}

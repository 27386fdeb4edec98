use std::collections::{BTreeMap, HashMap};

use super::dataset::{Cell, Dataset};
use super::schema::{ColumnKind, Schema};
use super::TabularError;

#[derive(Debug, Clone, PartialEq)]
pub struct Deduplicated {
    pub dataset: Dataset,
    pub removed: usize,
    /// Keys whose dropped duplicates differed from the retained row.
    pub conflicting_keys: Vec<String>,
}

/// Keeps the first row for each key in file order. Rows with a missing key are
/// always retained.
pub fn deduplicate(ds: &Dataset, key: &str) -> Result<Deduplicated, TabularError> {
    let k = identifier_index(ds.schema(), key)?;
    let mut first: HashMap<&str, usize> = HashMap::new();
    let mut keep = Vec::with_capacity(ds.len());
    let mut conflicting_keys = Vec::new();
    for (i, row) in ds.rows().iter().enumerate() {
        match &row[k] {
            Cell::Text(id) => match first.get(id.as_str()) {
                Some(&j) => {
                    if ds.rows()[j] != *row && !conflicting_keys.contains(id) {
                        conflicting_keys.push(id.clone());
                    }
                }
                None => {
                    first.insert(id, i);
                    keep.push(i);
                }
            },
            _ => keep.push(i),
        }
    }
    let removed = ds.len() - keep.len();
    Ok(Deduplicated { dataset: ds.select_rows(&keep), removed, conflicting_keys })
}

fn identifier_index(schema: &Schema, key: &str) -> Result<usize, TabularError> {
    let k = schema
        .index_of(key)
        .ok_or_else(|| TabularError::UnknownColumn(key.to_string()))?;
    if schema.columns[k].kind != ColumnKind::Identifier {
        return Err(TabularError::WrongColumnKind {
            column: key.to_string(),
            expected: ColumnKind::Identifier,
            found: schema.columns[k].kind,
        });
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinMode {
    Inner,
    Left,
}

/// Joins `right` onto `left` by `key`.
///
/// The merged schema is the left columns followed by the right's columns not
/// present on the left. A column present on both sides must have the same kind
/// and agree wherever both cells are observed; a missing left cell is filled
/// from the right. The first right row wins when the right side repeats a key.
pub fn merge_sources(
    left: &Dataset,
    right: &Dataset,
    key: &str,
    mode: JoinMode,
) -> Result<Dataset, TabularError> {
    let lk = identifier_index(left.schema(), key)?;
    let rk = identifier_index(right.schema(), key)?;
    let ls = left.schema();
    let rs = right.schema();

    // right column index -> Some(left index) when shared, None when appended
    let mut shared = Vec::new();
    let mut appended = Vec::new();
    for (ri, col) in rs.columns.iter().enumerate() {
        if ri == rk {
            continue;
        }
        match ls.index_of(&col.name) {
            Some(li) => {
                if ls.columns[li].kind != col.kind {
                    return Err(TabularError::WrongColumnKind {
                        column: col.name.clone(),
                        expected: ls.columns[li].kind,
                        found: col.kind,
                    });
                }
                shared.push((ri, li));
            }
            None => appended.push(ri),
        }
    }
    let mut columns = ls.columns.clone();
    columns.extend(appended.iter().map(|&ri| rs.columns[ri].clone()));
    let schema = Schema {
        binary_true: ls.binary_true.clone(),
        binary_false: ls.binary_false.clone(),
        columns,
    };
    schema.validate()?;

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, row) in right.rows().iter().enumerate() {
        if let Cell::Text(id) = &row[rk] {
            index.entry(id.as_str()).or_insert(i);
        }
    }

    let mut conflicts = Vec::new();
    let mut rows = Vec::with_capacity(left.len());
    for lrow in left.rows() {
        let matched = match &lrow[lk] {
            Cell::Text(id) => index.get(id.as_str()).map(|&i| (id, &right.rows()[i])),
            _ => None,
        };
        let mut row = lrow.clone();
        match matched {
            Some((id, rrow)) => {
                for &(ri, li) in &shared {
                    match (&row[li], &rrow[ri]) {
                        (_, Cell::Missing) => {}
                        (Cell::Missing, v) => row[li] = v.clone(),
                        (a, b) if a != b => {
                            if !conflicts.contains(id) {
                                conflicts.push(id.clone());
                            }
                        }
                        _ => {}
                    }
                }
                row.extend(appended.iter().map(|&ri| rrow[ri].clone()));
            }
            None => {
                if mode == JoinMode::Inner {
                    continue;
                }
                row.extend(appended.iter().map(|_| Cell::Missing));
            }
        }
        rows.push(row);
    }
    if !conflicts.is_empty() {
        return Err(TabularError::MergeConflict(conflicts));
    }
    Ok(Dataset::from_parts(schema, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "strategy", content = "threshold")]
pub enum Imputation {
    /// Replace missing feature cells by the column mode (ties to the smaller value).
    ModeFill,
    /// Remove rows with any missing feature or target cell.
    DropRows,
    /// Remove feature columns whose missing fraction exceeds the threshold.
    DropColumns(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Imputed {
    pub dataset: Dataset,
    pub dropped_missing_target: usize,
    pub dropped_rows: usize,
    pub dropped_columns: Vec<String>,
    /// (column, fill value, cells filled)
    pub filled: Vec<(String, String, usize)>,
}

/// Applies an imputation strategy. Rows with a missing target are removed
/// first under every strategy.
pub fn impute(ds: &Dataset, strategy: Imputation) -> Result<Imputed, TabularError> {
    let t = ds.schema().target_index();
    let labeled = ds.filter_rows(|r| !r[t].is_missing());
    let dropped_missing_target = ds.len() - labeled.len();
    let features = labeled.schema().feature_indices();

    let mut out = Imputed {
        dataset: labeled.clone(),
        dropped_missing_target,
        dropped_rows: 0,
        dropped_columns: Vec::new(),
        filled: Vec::new(),
    };
    match strategy {
        Imputation::ModeFill => {
            let (schema, mut rows) = labeled.into_parts();
            for &c in &features {
                let mut counts: BTreeMap<&Cell, usize> = BTreeMap::new();
                for row in &rows {
                    if !row[c].is_missing() {
                        *counts.entry(&row[c]).or_default() += 1;
                    }
                }
                // BTreeMap iterates ascending, so strict `>` keeps the smaller value on ties
                let mut mode: Option<(&Cell, usize)> = None;
                for (cell, n) in counts {
                    if mode.is_none_or(|(_, best)| n > best) {
                        mode = Some((cell, n));
                    }
                }
                let fill = match mode {
                    Some((cell, _)) => cell.clone(),
                    None if rows.is_empty() => continue,
                    None => {
                        return Err(TabularError::AllMissingColumn(schema.columns[c].name.clone()))
                    }
                };
                let mut n_filled = 0;
                for row in rows.iter_mut() {
                    if row[c].is_missing() {
                        row[c] = fill.clone();
                        n_filled += 1;
                    }
                }
                if n_filled > 0 {
                    out.filled.push((schema.columns[c].name.clone(), fill.to_string(), n_filled));
                }
            }
            out.dataset = Dataset::from_parts(schema, rows);
        }
        Imputation::DropRows => {
            let before = labeled.len();
            out.dataset = labeled.filter_rows(|r| features.iter().all(|&c| !r[c].is_missing()));
            out.dropped_rows = before - out.dataset.len();
        }
        Imputation::DropColumns(threshold) => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(TabularError::InvalidArgument(format!(
                    "drop-columns threshold {threshold} outside [0, 1]"
                )));
            }
            let n = labeled.len();
            let drop: Vec<usize> = features
                .iter()
                .copied()
                .filter(|&c| {
                    let missing = labeled.column(c).filter(|x| x.is_missing()).count();
                    n > 0 && missing as f64 / n as f64 > threshold
                })
                .collect();
            let (schema, rows) = labeled.into_parts();
            out.dropped_columns = drop.iter().map(|&c| schema.columns[c].name.clone()).collect();
            let keep = |i: &usize| !drop.contains(i);
            let columns = schema
                .columns
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(i))
                .map(|(_, c)| c.clone())
                .collect();
            let rows = rows
                .into_iter()
                .map(|r| r.into_iter().enumerate().filter(|(i, _)| keep(i)).map(|(_, c)| c).collect())
                .collect();
            out.dataset = Dataset::from_parts(Schema { columns, ..schema }, rows);
        }
    }
    Ok(out)
}

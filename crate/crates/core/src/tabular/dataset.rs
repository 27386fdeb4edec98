use std::fmt;

use super::schema::{ColumnKind, Schema};
use super::TabularError;

/// A single cell. Missing is explicit; no sentinel numbers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cell {
    Missing,
    Binary(bool),
    Count(u64),
    Text(String),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Numeric value used by the encoder; text and missing cells have none.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Binary(b) => Some(if *b { 1.0 } else { 0.0 }),
            Cell::Count(c) => Some(*c as f64),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Missing => Ok(()),
            Cell::Binary(b) => write!(f, "{}", u8::from(*b)),
            Cell::Count(c) => write!(f, "{c}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

pub type Row = Vec<Cell>;

/// Schema plus rows. Construction checks every row against the schema, and
/// the value is never mutated in place afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Row>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self, TabularError> {
        schema.validate()?;
        for (r, row) in rows.iter().enumerate() {
            check_row(&schema, r, row)?;
        }
        Ok(Dataset { schema, rows })
    }

    /// Internal constructor for rows already known to satisfy the schema.
    pub(crate) fn from_parts(schema: Schema, rows: Vec<Row>) -> Self {
        debug_assert!(rows.iter().enumerate().all(|(r, row)| check_row(&schema, r, row).is_ok()));
        Dataset { schema, rows }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_parts(self) -> (Schema, Vec<Row>) {
        (self.schema, self.rows)
    }

    pub fn column(&self, idx: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[idx])
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.schema.index_of(name)?;
        Some(self.column(idx).collect())
    }

    /// Target labels; `None` for rows whose target is missing.
    pub fn labels(&self) -> Vec<Option<bool>> {
        let t = self.schema.target_index();
        self.rows
            .iter()
            .map(|r| match r[t] {
                Cell::Binary(b) => Some(b),
                _ => None,
            })
            .collect()
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_missing()).count()
    }

    /// New dataset over the same schema holding the selected rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Dataset::from_parts(self.schema.clone(), rows)
    }

    /// New dataset holding rows for which `keep` is true.
    pub fn filter_rows(&self, mut keep: impl FnMut(&Row) -> bool) -> Dataset {
        let rows = self.rows.iter().filter(|r| keep(r)).cloned().collect();
        Dataset::from_parts(self.schema.clone(), rows)
    }
}

fn check_row(schema: &Schema, r: usize, row: &Row) -> Result<(), TabularError> {
    if row.len() != schema.arity() {
        return Err(TabularError::InvalidRow {
            row: r,
            reason: format!("has {} cells, schema arity is {}", row.len(), schema.arity()),
        });
    }
    for (cell, col) in row.iter().zip(&schema.columns) {
        let ok = match (col.kind, cell) {
            (_, Cell::Missing) => true,
            (ColumnKind::Binary | ColumnKind::Target, Cell::Binary(_)) => true,
            (ColumnKind::Count, Cell::Count(_)) => true,
            (ColumnKind::Categorical | ColumnKind::Identifier, Cell::Text(_)) => true,
            _ => false,
        };
        if !ok {
            return Err(TabularError::InvalidRow {
                row: r,
                reason: format!("cell {cell:?} does not fit {} column `{}`", col.kind, col.name),
            });
        }
    }
    Ok(())
}

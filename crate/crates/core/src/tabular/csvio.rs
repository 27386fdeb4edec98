use std::io::{Read, Write};
use std::path::Path;

use super::dataset::{Cell, Dataset};
use super::schema::{Column, ColumnKind, Schema};
use super::TabularError;

/// Parses header-first CSV against `schema`.
///
/// Header order need not match the schema; rows are stored in schema order.
/// A cell equal to the column's missing marker, or empty, becomes [`Cell::Missing`].
pub fn parse_csv<R: Read>(source: R, schema: &Schema) -> Result<Dataset, TabularError> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header = reader.headers().map_err(csv_error)?.clone();
    let header: Vec<&str> = header.iter().collect();
    // position of each schema column within the file
    let mut positions = Vec::with_capacity(schema.arity());
    let mut missing_cols = Vec::new();
    for col in &schema.columns {
        match header.iter().position(|h| *h == col.name) {
            Some(p) => positions.push(p),
            None => missing_cols.push(col.name.clone()),
        }
    }
    let unexpected: Vec<String> = header
        .iter()
        .filter(|h| schema.index_of(h).is_none())
        .map(|h| h.to_string())
        .collect();
    if !missing_cols.is_empty() || !unexpected.is_empty() || header.len() != schema.arity() {
        return Err(TabularError::HeaderMismatch { missing: missing_cols, unexpected });
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != schema.arity() {
            return Err(TabularError::RowArityMismatch {
                line,
                found: record.len(),
                expected: schema.arity(),
            });
        }
        let row = schema
            .columns
            .iter()
            .zip(&positions)
            .map(|(col, &p)| parse_cell(schema, col, &record[p], line))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Dataset::from_parts(schema.clone(), rows))
}

pub fn read_csv_file(path: &Path, schema: &Schema) -> Result<Dataset, TabularError> {
    let file = std::fs::File::open(path)
        .map_err(|e| TabularError::Io(format!("{}: {e}", path.display())))?;
    parse_csv(std::io::BufReader::new(file), schema).map_err(|e| e.in_file(path))
}

fn parse_cell(schema: &Schema, col: &Column, raw: &str, line: u64) -> Result<Cell, TabularError> {
    if raw.is_empty() || raw == col.missing {
        return Ok(Cell::Missing);
    }
    match col.kind {
        ColumnKind::Binary | ColumnKind::Target => match schema.parse_binary(raw) {
            Some(b) => Ok(Cell::Binary(b)),
            None => Err(TabularError::UnparseableValue {
                line,
                column: col.name.clone(),
                value: raw.to_string(),
            }),
        },
        ColumnKind::Count => raw.parse::<u64>().map(Cell::Count).map_err(|_| {
            TabularError::UnparseableValue { line, column: col.name.clone(), value: raw.to_string() }
        }),
        ColumnKind::Categorical | ColumnKind::Identifier => Ok(Cell::Text(raw.to_string())),
    }
}

/// Writes `ds` as RFC-4180 CSV in schema column order.
///
/// Missing cells are written as the column's missing marker, so a
/// write/parse cycle reproduces the dataset cell for cell.
pub fn write_csv<W: Write>(ds: &Dataset, sink: W) -> Result<(), TabularError> {
    let mut writer = csv::Writer::from_writer(sink);
    let schema = ds.schema();
    writer
        .write_record(schema.columns.iter().map(|c| c.name.as_str()))
        .map_err(csv_error)?;
    for row in ds.rows() {
        let fields: Vec<String> = row
            .iter()
            .zip(&schema.columns)
            .map(|(cell, col)| match cell {
                Cell::Missing => col.missing.clone(),
                other => other.to_string(),
            })
            .collect();
        writer.write_record(&fields).map_err(csv_error)?;
    }
    writer.flush().map_err(|e| TabularError::Io(e.to_string()))?;
    Ok(())
}

pub fn write_csv_file(ds: &Dataset, path: &Path) -> Result<(), TabularError> {
    let file = std::fs::File::create(path)
        .map_err(|e| TabularError::Io(format!("{}: {e}", path.display())))?;
    write_csv(ds, std::io::BufWriter::new(file))
}

fn csv_error(e: csv::Error) -> TabularError {
    TabularError::Csv(e.to_string())
}

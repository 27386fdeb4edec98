use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::evalkit::percent;
use crate::tabular::{read_csv_file, Cell, ColumnKind, Dataset, Schema};

use super::{write_file, CliError, Stage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BreakdownRow {
    pub category: String,
    pub count: u64,
    pub enrolled: u64,
}

impl BreakdownRow {
    pub fn new(category: impl Into<String>, count: u64, enrolled: u64) -> Self {
        BreakdownRow { category: category.into(), count, enrolled }
    }

    /// Enrolled share with one decimal, `—` for an empty category.
    pub fn percent(&self) -> String {
        percent(self.enrolled, self.count)
    }
}

/// Per-category counts for one column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Breakdown {
    pub column: String,
    pub rows: Vec<BreakdownRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub total: BreakdownRow,
    /// Rows left out because their target is missing.
    pub unlabeled: u64,
    pub breakdowns: Vec<Breakdown>,
}

/// Enrollment breakdown for every binary and categorical feature.
///
/// Binary columns always list both values (1 first), so an unobserved value
/// shows as an empty category. Missing cells form their own category.
pub fn profile(ds: &Dataset) -> Profile {
    let schema = ds.schema();
    let labels = ds.labels();
    let mut breakdowns = Vec::new();
    for (c, col) in schema.columns.iter().enumerate() {
        if !matches!(col.kind, ColumnKind::Binary | ColumnKind::Categorical) {
            continue;
        }
        let mut counts: BTreeMap<&Cell, (u64, u64)> = BTreeMap::new();
        if col.kind == ColumnKind::Binary {
            counts.insert(&Cell::Binary(true), (0, 0));
            counts.insert(&Cell::Binary(false), (0, 0));
        }
        for (row, label) in ds.rows().iter().zip(&labels) {
            if let Some(y) = label {
                let e = counts.entry(&row[c]).or_default();
                e.0 += 1;
                e.1 += u64::from(*y);
            }
        }
        let mut rows: Vec<BreakdownRow> = counts
            .iter()
            .filter(|(cell, _)| !cell.is_missing())
            .map(|(cell, &(n, e))| BreakdownRow::new(cell.to_string(), n, e))
            .collect();
        if col.kind == ColumnKind::Binary {
            rows.reverse();
        }
        if let Some(&(n, e)) = counts.get(&Cell::Missing) {
            rows.push(BreakdownRow::new("(missing)", n, e));
        }
        breakdowns.push(Breakdown { column: col.name.clone(), rows });
    }
    let labeled = labels.iter().flatten().count() as u64;
    let enrolled = labels.iter().flatten().filter(|&&y| y).count() as u64;
    Profile {
        total: BreakdownRow::new("Total", labeled, enrolled),
        unlabeled: ds.len() as u64 - labeled,
        breakdowns,
    }
}

impl Profile {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Overall: {} records, {} enrolled ({})",
            self.total.count,
            self.total.enrolled,
            self.total.percent()
        );
        if self.unlabeled > 0 {
            let _ = writeln!(s, "Excluded: {} records with missing target", self.unlabeled);
        }
        for b in &self.breakdowns {
            let width = b.rows.iter().map(|r| r.category.chars().count()).max().unwrap_or(0).max(b.column.len());
            let _ = writeln!(s);
            let _ = writeln!(s, "{:<width$}  {:>8}  {:>8}  {:>7}", b.column, "Count", "Enroll", "%");
            for r in &b.rows {
                let _ = writeln!(
                    s,
                    "{:<width$}  {:>8}  {:>8}  {:>7}",
                    r.category,
                    r.count,
                    r.enrolled,
                    r.percent()
                );
            }
        }
        s
    }

    /// Long-format CSV: one line per (column, category), plus the total.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["column", "category", "count", "enrolled", "enrolled_pct"]).unwrap();
        let pct = |r: &BreakdownRow| {
            if r.count == 0 {
                String::new()
            } else {
                format!("{:.1}", 100.0 * r.enrolled as f64 / r.count as f64)
            }
        };
        w.write_record(["(all)", "Total", &self.total.count.to_string(), &self.total.enrolled.to_string(), &pct(&self.total)])
            .unwrap();
        for b in &self.breakdowns {
            for r in &b.rows {
                w.write_record([&b.column, &r.category, &r.count.to_string(), &r.enrolled.to_string(), &pct(r)])
                    .unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Loads a CSV, prints the text profile and optionally writes the CSV form.
pub fn cmd_profile(input: &Path, schema: &Path, csv_out: Option<&Path>) -> Result<Profile, CliError> {
    let schema = Schema::load(schema).map_err(|e| CliError::tabular(Stage::Load, e))?;
    let ds = read_csv_file(input, &schema).map_err(|e| CliError::tabular(Stage::Load, e))?;
    let p = profile(&ds);
    if let Some(path) = csv_out {
        write_file(Stage::Report, path, &p.to_csv())?;
    }
    Ok(p)
}

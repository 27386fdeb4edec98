use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TabularError;

/// Role a column plays in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Binary,
    Count,
    Categorical,
    Identifier,
    Target,
}

impl ColumnKind {
    /// Binary, count and categorical columns are candidate predictors.
    pub fn is_feature(self) -> bool {
        matches!(self, ColumnKind::Binary | ColumnKind::Count | ColumnKind::Categorical)
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnKind::Binary => "binary",
            ColumnKind::Count => "count",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Identifier => "identifier",
            ColumnKind::Target => "target",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Cell text treated as missing. Empty cells are always missing.
    #[serde(default)]
    pub missing: String,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Column { name: name.into(), kind, missing: String::new() }
    }

    pub fn with_missing(mut self, marker: impl Into<String>) -> Self {
        self.missing = marker.into();
        self
    }
}

fn default_true_tokens() -> Vec<String> {
    ["1", "yes", "y", "true", "t"].iter().map(|s| s.to_string()).collect()
}

fn default_false_tokens() -> Vec<String> {
    ["0", "no", "n", "false", "f"].iter().map(|s| s.to_string()).collect()
}

/// Ordered column catalog for a dataset.
///
/// The on-disk form is TOML:
///
/// ```toml
/// binary_true = ["1", "yes"]     # optional, case-insensitive
/// binary_false = ["0", "no"]     # optional, case-insensitive
///
/// [[columns]]
/// name = "id"
/// kind = "identifier"
///
/// [[columns]]
/// name = "With_Honors"
/// kind = "binary"
/// missing = "NA"
///
/// [[columns]]
/// name = "enrolled"
/// kind = "target"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "default_true_tokens")]
    pub binary_true: Vec<String>,
    #[serde(default = "default_false_tokens")]
    pub binary_false: Vec<String>,
    pub columns: Vec<Column>,
}

impl Schema {
    /// Builds a schema with the default binary synonym sets and validates it.
    pub fn new(columns: Vec<Column>) -> Result<Self, TabularError> {
        let schema = Schema {
            binary_true: default_true_tokens(),
            binary_false: default_false_tokens(),
            columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), TabularError> {
        let mut seen = HashSet::new();
        for col in &self.columns {
            if col.name.trim().is_empty() {
                return Err(TabularError::InvalidSchema("empty column name".into()));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(TabularError::InvalidSchema(format!("duplicate column `{}`", col.name)));
            }
        }
        let targets = self.columns.iter().filter(|c| c.kind == ColumnKind::Target).count();
        if targets != 1 {
            return Err(TabularError::InvalidSchema(format!(
                "expected exactly one target column, found {targets}"
            )));
        }
        for t in &self.binary_true {
            if self.binary_false.iter().any(|f| f.eq_ignore_ascii_case(t)) {
                return Err(TabularError::InvalidSchema(format!(
                    "token `{t}` is both a true and a false synonym"
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, TabularError> {
        let schema: Schema =
            toml::from_str(text).map_err(|e| TabularError::InvalidSchema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self, TabularError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TabularError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn target_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Target)
            .expect("validated schema has a target")
    }

    pub fn target_name(&self) -> &str {
        &self.columns[self.target_index()].name
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind.is_feature())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn first_identifier(&self) -> Option<&str> {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::Identifier)
            .map(|c| c.name.as_str())
    }

    /// Resolves a binary token to 0/1, or `None` when it is not a known synonym.
    pub fn parse_binary(&self, token: &str) -> Option<bool> {
        if self.binary_true.iter().any(|t| t.eq_ignore_ascii_case(token)) {
            Some(true)
        } else if self.binary_false.iter().any(|t| t.eq_ignore_ascii_case(token)) {
            Some(false)
        } else {
            None
        }
    }
}

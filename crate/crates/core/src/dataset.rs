//! CSV ingestion and column role inference.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::DatasetConfig;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DatasetError {
    #[error("input has no header row")]
    EmptyInput,
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column name '{0}'")]
    DuplicateColumnName(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Categorical,
    Quantitative,
    Identifier,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Categorical => "categorical",
            Role::Quantitative => "quantitative",
            Role::Identifier => "identifier",
        })
    }
}

/// A single table cell. Serializes as JSON `null`, a number, or a string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Missing,
    Number(f64),
    Text(String),
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    /// Text form used for grouping and filtering.
    pub fn as_key(&self) -> Option<String> {
        match self {
            Value::Missing => None,
            Value::Number(x) => Some(number_key(*x)),
            Value::Text(s) => Some(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Column {
    pub name: String,
    pub role: Role,
    pub values: Vec<Value>,
}

impl Column {
    /// Non-missing numeric values paired with their row index.
    pub fn numbers(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_number().map(|x| (i, x)))
    }

    pub fn distinct_keys(&self) -> BTreeSet<String> {
        self.values.iter().filter_map(Value::as_key).collect()
    }
}

/// An immutable table with inferred column roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Table {
    pub name: String,
    pub row_count: usize,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn columns_with_role(&self, role: Role) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(move |c| c.role == role)
    }

    pub fn identifier(&self) -> Option<&Column> {
        self.columns_with_role(Role::Identifier).next()
    }

    /// Label of a row through the identifier column, if any.
    pub fn row_label(&self, row: usize) -> Option<String> {
        self.identifier()
            .and_then(|c| c.values.get(row))
            .and_then(Value::as_key)
    }
}

/// Parses CSV bytes and infers column roles.
pub fn load_table(bytes: &[u8], name: &str, config: &DatasetConfig) -> Result<Table, DatasetError> {
    let raw = parse_csv(bytes, name, config)?;
    Ok(infer_schema(raw, config))
}

/// Parses CSV bytes into an untyped table: every cell is text or missing and
/// every column is provisionally categorical.
pub fn parse_csv(bytes: &[u8], name: &str, config: &DatasetConfig) -> Result<Table, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(DatasetError::EmptyInput);
    }

    let mut seen = HashSet::new();
    for h in header.iter() {
        if !seen.insert(h) {
            return Err(DatasetError::DuplicateColumnName(h.to_string()));
        }
    }

    let missing: HashSet<&str> = config.missing_markers.iter().map(String::as_str).collect();
    let mut columns: Vec<Column> = header
        .iter()
        .map(|h| Column {
            name: h.to_string(),
            role: Role::Categorical,
            values: Vec::new(),
        })
        .collect();

    let mut row_count = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DatasetError::Csv(e.to_string()))?;
        if record.len() != header.len() {
            return Err(DatasetError::RaggedRows {
                row: i + 1,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let value = if missing.contains(field.trim()) {
                Value::Missing
            } else {
                Value::Text(field.to_string())
            };
            col.values.push(value);
        }
        row_count += 1;
    }

    Ok(Table {
        name: name.to_string(),
        row_count,
        columns,
    })
}

/// Shortest round-trip text of a number, used as a grouping key.
pub fn number_key(x: f64) -> String {
    format!("{x}")
}

fn parse_number(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn numeric_view(value: &Value) -> Option<f64> {
    match value {
        Value::Number(x) => Some(*x),
        Value::Text(s) => parse_number(s),
        Value::Missing => None,
    }
}

/// Summary of one column used by the role rules.
struct ColumnProfile {
    non_missing: usize,
    numeric: usize,
    numeric_distinct: usize,
    any_fractional: bool,
    text_distinct: usize,
}

fn profile(values: &[Value]) -> ColumnProfile {
    let mut non_missing = 0;
    let mut numeric = 0;
    let mut any_fractional = false;
    let mut numeric_seen = HashSet::new();
    let mut text_seen = HashSet::new();
    for v in values {
        let Some(key) = v.as_key() else { continue };
        non_missing += 1;
        text_seen.insert(key);
        if let Some(x) = numeric_view(v) {
            numeric += 1;
            any_fractional |= x.fract() != 0.0;
            // normalise -0.0 so it collapses with 0.0
            numeric_seen.insert((x + 0.0).to_bits());
        }
    }
    ColumnProfile {
        non_missing,
        numeric,
        numeric_distinct: numeric_seen.len(),
        any_fractional,
        text_distinct: text_seen.len(),
    }
}

/// Assigns a role to every column and normalises cell values to match.
///
/// A column is quantitative when at least `numeric_fraction` of its
/// non-missing cells parse as numbers and it does not look like a grouping
/// attribute: more than `max_categorical_distinct` distinct values, any
/// fractional value, or values that never repeat. Everything else is
/// categorical. The first non-numeric categorical column whose values are all
/// distinct, or that has more than `identifier_min_distinct` distinct values,
/// becomes the row identifier. Overrides in `config.roles` take precedence.
pub fn infer_schema(mut table: Table, config: &DatasetConfig) -> Table {
    let forced_identifier = table
        .columns
        .iter()
        .any(|c| config.roles.get(&c.name) == Some(&Role::Identifier));
    let mut have_identifier = false;

    for name in config.roles.keys() {
        if table.column(name).is_none() {
            tracing::warn!(column = %name, "role override names an unknown column");
        }
    }

    for column in &mut table.columns {
        let p = profile(&column.values);
        let numeric_ok = p.non_missing > 0
            && p.numeric as f64 >= config.numeric_fraction * p.non_missing as f64;

        let inferred = if numeric_ok
            && (p.numeric_distinct > config.max_categorical_distinct
                || p.any_fractional
                || (p.numeric_distinct >= 2 && p.numeric_distinct == p.numeric))
        {
            Role::Quantitative
        } else if !numeric_ok
            && p.text_distinct >= 2
            && (p.text_distinct == p.non_missing || p.text_distinct > config.identifier_min_distinct)
        {
            Role::Identifier
        } else {
            Role::Categorical
        };

        let mut role = config.roles.get(&column.name).copied().unwrap_or(inferred);
        if role == Role::Identifier {
            let explicit = config.roles.get(&column.name) == Some(&Role::Identifier);
            if have_identifier || (forced_identifier && !explicit) {
                role = Role::Categorical;
            } else {
                have_identifier = true;
            }
        }
        column.role = role;

        for v in &mut column.values {
            let normalised = match (role, &*v) {
                (_, Value::Missing) => Value::Missing,
                (Role::Quantitative, other) => numeric_view(other).map_or(Value::Missing, Value::Number),
                (_, Value::Number(x)) => Value::Text(number_key(*x)),
                (_, Value::Text(s)) => Value::Text(s.clone()),
            };
            *v = normalised;
        }
    }
    table
}

use std::fmt;

use thiserror::Error;

use super::schema::{self, ColumnType, SchemaCatalog, TableSchema, MAX_TEXT_BYTES};
use super::types::{SensorKind, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Arity,
    TypeMismatch,
    NullInNonNullable,
    TextTooLong,
    NonPositive,
    ExactlyOneMeasurement,
    UnitPairing,
    IntervalOrder,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::Arity => "arity",
            ViolationKind::TypeMismatch => "type-mismatch",
            ViolationKind::NullInNonNullable => "null-in-non-nullable",
            ViolationKind::TextTooLong => "text-too-long",
            ViolationKind::NonPositive => "non-positive",
            ViolationKind::ExactlyOneMeasurement => "exactly-one-measurement",
            ViolationKind::UnitPairing => "unit-pairing",
            ViolationKind::IntervalOrder => "interval-order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub column: Option<String>,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, column: Option<&str>, detail: impl Into<String>) -> Self {
        Self {
            kind,
            column: column.map(str::to_string),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.column {
            Some(c) => write!(f, "{} ({}): {}", self.kind.code(), c, self.detail),
            None => write!(f, "{}: {}", self.kind.code(), self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("{} violation(s): {}", .0.len(), join_violations(.0))]
    Violations(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Checks one untyped row against its table's column types and row-local
/// rules. Referential integrity needs the store and is checked on append.
pub fn validate_row(catalog: &SchemaCatalog, table: &str, row: &[Value]) -> Result<(), ValidationError> {
    let schema = catalog
        .get(table)
        .ok_or_else(|| ValidationError::UnknownTable(table.to_string()))?;
    let violations = row_violations(schema, row);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationError::Violations(violations))
    }
}

pub fn row_violations(schema: &TableSchema, row: &[Value]) -> Vec<Violation> {
    let mut out = Vec::new();
    if row.len() != schema.columns.len() {
        out.push(Violation::new(
            ViolationKind::Arity,
            None,
            format!("expected {} values, got {}", schema.columns.len(), row.len()),
        ));
        return out;
    }

    for (col, value) in schema.columns.iter().zip(row) {
        let name = Some(col.name.as_str());
        match (col.ty, value) {
            (_, Value::Null) => {
                if !col.nullable {
                    out.push(Violation::new(ViolationKind::NullInNonNullable, name, "value required"));
                }
            }
            (ColumnType::Int64, Value::Int(_))
            | (ColumnType::Decimal64, Value::Decimal(_))
            | (ColumnType::Timestamp, Value::Timestamp(_)) => {}
            (ColumnType::Text, Value::Text(s)) => {
                if s.len() > MAX_TEXT_BYTES {
                    out.push(Violation::new(
                        ViolationKind::TextTooLong,
                        name,
                        format!("{} bytes exceeds {MAX_TEXT_BYTES}", s.len()),
                    ));
                }
            }
            (ty, v) => out.push(Violation::new(
                ViolationKind::TypeMismatch,
                name,
                format!("expected {ty}, got {v:?}"),
            )),
        }
        if let Value::Int(v) = value {
            let must_be_positive = matches!(col.name.as_str(), "QUANTITY" | "SEQ_NO");
            if (must_be_positive && *v <= 0) || (col.name.ends_with("ID") && *v <= 0) {
                out.push(Violation::new(ViolationKind::NonPositive, name, format!("{v} must be positive")));
            }
        }
    }
    if !out.is_empty() {
        return out;
    }

    match schema.name.as_str() {
        schema::SENSOR_DATA => sensor_rules(schema, row, &mut out),
        schema::PRODUCTION_ORDER_POSITION => interval_rule(schema, row, "ENTERED_AT", "LEFT_AT", &mut out),
        schema::PRODUCTION_ORDER_HEAD => interval_rule(schema, row, "RELEASED_AT", "FINISHED_AT", &mut out),
        _ => {}
    }
    out
}

fn sensor_rules(schema: &TableSchema, row: &[Value], out: &mut Vec<Violation>) {
    let mut present = 0;
    for kind in SensorKind::ALL {
        let value = &row[schema.column_index(kind.value_column()).expect("sensor schema")];
        let unit = &row[schema.column_index(kind.unit_column()).expect("sensor schema")];
        if !value.is_null() {
            present += 1;
        }
        if value.is_null() != unit.is_null() {
            out.push(Violation::new(
                ViolationKind::UnitPairing,
                Some(kind.unit_column()),
                format!("{} and {} must be set together", kind.value_column(), kind.unit_column()),
            ));
        }
    }
    if present != 1 {
        out.push(Violation::new(
            ViolationKind::ExactlyOneMeasurement,
            None,
            format!("{present} measurements present"),
        ));
    }
}

fn interval_rule(schema: &TableSchema, row: &[Value], start: &str, end: &str, out: &mut Vec<Violation>) {
    let (Some(s), Some(e)) = (schema.column_index(start), schema.column_index(end)) else {
        return;
    };
    if let (Value::Timestamp(s), Value::Timestamp(e)) = (&row[s], &row[e]) {
        if e < s {
            out.push(Violation::new(
                ViolationKind::IntervalOrder,
                Some(end),
                format!("{end} {e} precedes {start} {s}"),
            ));
        }
    }
}

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{ColumnType, Value};

use super::column::Cell;

/// Comparison operators shared by scan pushdown and the query engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::NotEq => "<>",
            CmpOp::Lt => "<",
            CmpOp::LtEq => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtEq => ">=",
        }
    }

    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::NotEq => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::LtEq => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::GtEq => ord != Ordering::Less,
        }
    }

    /// The operator with its operands swapped (`a < b` ⇔ `b > a`).
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::LtEq => CmpOp::GtEq,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::GtEq => CmpOp::LtEq,
            other => other,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// SQL-style comparison of two values; `None` when either side is null or
/// the types are not comparable.
pub fn compare_values(a: &Value, b: &Value) -> Option<Ordering> {
    use Value::*;
    match (a, b) {
        (Null, _) | (_, Null) => None,
        (Int(x), Int(y)) => Some(x.cmp(y)),
        (Timestamp(x), Timestamp(y)) => Some(x.cmp(y)),
        (Int(x), Timestamp(y)) => Some((*x as i128).cmp(&(*y as i128))),
        (Timestamp(x), Int(y)) => Some((*x as i128).cmp(&(*y as i128))),
        (Text(x), Text(y)) => Some(x.as_bytes().cmp(y.as_bytes())),
        (Text(_), _) | (_, Text(_)) => None,
        (x, y) => x.as_f64()?.partial_cmp(&y.as_f64()?),
    }
}

pub(crate) fn compare_cell(a: Cell<'_>, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Cell::Null, _) | (_, Value::Null) => None,
        (Cell::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Cell::Timestamp(x), Value::Timestamp(y)) => Some(x.cmp(y)),
        (Cell::Timestamp(x), Value::Int(y)) => Some((x as i128).cmp(&(*y as i128))),
        (Cell::Int(x), Value::Timestamp(y)) => Some((x as i128).cmp(&(*y as i128))),
        (Cell::Text(x), Value::Text(y)) => Some(x.as_bytes().cmp(y.as_bytes())),
        (Cell::Text(_), _) | (_, Value::Text(_)) => None,
        (Cell::Int(x), y) => (x as f64).partial_cmp(&y.as_f64()?),
        (Cell::Decimal(x), y) => x.partial_cmp(&y.as_f64()?),
        (Cell::Timestamp(x), y) => (x as f64).partial_cmp(&y.as_f64()?),
    }
}

/// Whether a literal may be compared against a column of type `ty`.
pub fn literal_compatible(ty: ColumnType, literal: &Value) -> bool {
    matches!(
        (ty, literal),
        (ColumnType::Int64 | ColumnType::Decimal64, Value::Int(_) | Value::Decimal(_))
            | (ColumnType::Timestamp, Value::Int(_) | Value::Timestamp(_))
            | (ColumnType::Text, Value::Text(_))
    )
}

/// A single-column filter that can be evaluated inside a scan.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnFilter {
    Compare { column: String, op: CmpOp, value: Value },
    Between { column: String, low: Value, high: Value },
    IsNull { column: String, negated: bool },
}

impl ColumnFilter {
    pub fn column(&self) -> &str {
        match self {
            ColumnFilter::Compare { column, .. }
            | ColumnFilter::Between { column, .. }
            | ColumnFilter::IsNull { column, .. } => column,
        }
    }

    pub(crate) fn literals(&self) -> Vec<&Value> {
        match self {
            ColumnFilter::Compare { value, .. } => vec![value],
            ColumnFilter::Between { low, high, .. } => vec![low, high],
            ColumnFilter::IsNull { .. } => vec![],
        }
    }

    pub(crate) fn matches(&self, cell: Cell<'_>) -> bool {
        match self {
            ColumnFilter::Compare { op, value, .. } => compare_cell(cell, value).is_some_and(|o| op.holds(o)),
            ColumnFilter::Between { low, high, .. } => {
                compare_cell(cell, low).is_some_and(|o| o != Ordering::Less)
                    && compare_cell(cell, high).is_some_and(|o| o != Ordering::Greater)
            }
            ColumnFilter::IsNull { negated, .. } => (cell == Cell::Null) != *negated,
        }
    }
}

/// Conjunction of column filters pushed into a scan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanPredicate {
    pub conjuncts: Vec<ColumnFilter>,
}

impl ScanPredicate {
    pub fn new(conjuncts: Vec<ColumnFilter>) -> Self {
        Self { conjuncts }
    }

    pub fn and(mut self, filter: ColumnFilter) -> Self {
        self.conjuncts.push(filter);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Int(Vec<i64>),
    Decimal(Vec<f64>),
    Timestamp(Vec<u64>),
    Text { codes: Vec<u32>, dict: Arc<Vec<Arc<str>>> },
}

/// Materialized values of one column for the rows selected by a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnVector {
    pub name: String,
    pub ty: ColumnType,
    pub values: ColumnValues,
    pub validity: Vec<bool>,
}

impl ColumnVector {
    pub fn len(&self) -> usize {
        self.validity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.validity.is_empty()
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.validity[i]
    }

    pub fn get(&self, i: usize) -> Value {
        if !self.validity[i] {
            return Value::Null;
        }
        match &self.values {
            ColumnValues::Int(v) => Value::Int(v[i]),
            ColumnValues::Decimal(v) => Value::Decimal(v[i]),
            ColumnValues::Timestamp(v) => Value::Timestamp(v[i]),
            ColumnValues::Text { codes, dict } => Value::Text(dict[codes[i] as usize].to_string()),
        }
    }

    pub fn text(&self, i: usize) -> Option<&str> {
        match &self.values {
            ColumnValues::Text { codes, dict } if self.validity[i] => Some(&dict[codes[i] as usize]),
            _ => None,
        }
    }

    pub fn f64_at(&self, i: usize) -> Option<f64> {
        if !self.validity[i] {
            return None;
        }
        match &self.values {
            ColumnValues::Int(v) => Some(v[i] as f64),
            ColumnValues::Decimal(v) => Some(v[i]),
            ColumnValues::Timestamp(v) => Some(v[i] as f64),
            ColumnValues::Text { .. } => None,
        }
    }

    /// Integer view used for join keys and interval bounds.
    pub fn i64_at(&self, i: usize) -> Option<i64> {
        if !self.validity[i] {
            return None;
        }
        match &self.values {
            ColumnValues::Int(v) => Some(v[i]),
            ColumnValues::Timestamp(v) => i64::try_from(v[i]).ok(),
            _ => None,
        }
    }

    pub fn non_null_count(&self) -> usize {
        self.validity.iter().filter(|v| **v).count()
    }
}

/// Output of a scan: the positions of the selected rows plus one vector per
/// requested column, aligned with `row_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub row_ids: Vec<u32>,
    pub columns: Vec<ColumnVector>,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&ColumnVector> {
        self.columns.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

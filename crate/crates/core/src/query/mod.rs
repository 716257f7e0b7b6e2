//! SQL subset over store snapshots: equi-joins across business tables and
//! time-window joins between sensor readings and production positions.

mod ast;
mod exec;
mod interval;
mod lexer;
mod parser;
mod plan;
mod predefined;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::domain::Value;
use crate::store::{Snapshot, StoreError};

pub use ast::{
    AggArg, AggCall, AggFunc, ColumnRef, Comparison, Expr, Join, Literal, Operand, OrderItem, Predicate, Projection,
    Query, SelectItem, Span, TableRef,
};
pub use exec::execute;
pub use interval::{vertical_join, IntervalIndex, VerticalMatch};
pub use parser::parse;
pub use plan::{plan, JoinStrategy, Plan, ResultColumn};
pub use predefined::{predefined, PredefinedQuery, RECENT_PRODUCTS_CUTTING, VIBRATION_BY_SUPPLIER};

pub const DEFAULT_MAX_INTERMEDIATE_ROWS: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { message: String, offset: usize },
    #[error("{0}")]
    Semantic(String),
    #[error("query aborted: more than {limit} intermediate rows")]
    ResourceLimit { limit: u64 },
    #[error("query aborted: time limit exceeded")]
    Timeout,
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl QueryError {
    pub(crate) fn syntax(message: impl Into<String>, offset: usize) -> Self {
        QueryError::Syntax {
            message: message.into(),
            offset,
        }
    }

    pub fn offset(&self) -> Option<usize> {
        match self {
            QueryError::Syntax { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOptions {
    pub max_intermediate_rows: u64,
    pub timeout: Option<Duration>,
}

impl Default for QueryOptions {
    fn default() -> Self {
        Self {
            max_intermediate_rows: DEFAULT_MAX_INTERMEDIATE_ROWS,
            timeout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<ResultColumn>,
    pub rows: Vec<Vec<Value>>,
    pub elapsed_ms: f64,
}

impl ResultTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// RFC 4180 CSV with a header row; nulls are empty fields.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| if v.is_null() { String::new() } else { v.to_string() }))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 input")
    }
}

/// Parses, plans and executes `sql` against one snapshot.
pub fn run(sql: &str, snapshot: &Snapshot, options: &QueryOptions) -> Result<ResultTable, QueryError> {
    let query = parse(sql)?;
    let plan = plan(&query, &snapshot.catalog())?;
    execute(&plan, snapshot, options)
}

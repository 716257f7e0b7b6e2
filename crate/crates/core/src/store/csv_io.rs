//! CSV export and re-ingestion. One file per table, header row of column
//! names, RFC-4180 quoting, empty field for NULL, timestamps as integer ms.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::domain::{ColumnType, TableSchema, Value};

use super::{Batch, Snapshot, Store, StoreError};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{table} line {line}: {detail}")]
    Parse { table: String, line: usize, detail: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn format_cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::Decimal(v) => format!("{v}"),
        other => other.to_string(),
    }
}

/// Writes one table of `snapshot` as CSV.
pub fn export_table<W: Write>(snapshot: &Snapshot, table: &str, out: W) -> Result<usize, CsvError> {
    let schema = snapshot
        .schema(table)
        .ok_or_else(|| StoreError::UnknownTable(table.to_string()))?;
    let names: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    let scan = snapshot.scan(table, &names, None)?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(&names)?;
    let mut record = Vec::with_capacity(names.len());
    for i in 0..scan.len() {
        record.clear();
        record.extend(scan.columns.iter().map(|c| format_cell(&c.get(i))));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|source| CsvError::Io {
        path: PathBuf::from(table),
        source,
    })?;
    Ok(scan.len())
}

/// Exports every table to `<dir>/<TABLE>.csv`; returns (table, rows) pairs.
pub fn export_dir(snapshot: &Snapshot, dir: &Path) -> Result<Vec<(String, usize)>, CsvError> {
    fs::create_dir_all(dir).map_err(|source| CsvError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut counts = Vec::new();
    for (name, _) in snapshot.row_counts() {
        let path = dir.join(format!("{name}.csv"));
        let file = fs::File::create(&path).map_err(|source| CsvError::Io { path: path.clone(), source })?;
        let n = export_table(snapshot, &name, std::io::BufWriter::new(file))?;
        counts.push((name, n));
    }
    Ok(counts)
}

fn parse_field(schema: &TableSchema, col: usize, field: &str, line: usize) -> Result<Value, CsvError> {
    let def = &schema.columns[col];
    let err = |detail: String| CsvError::Parse {
        table: schema.name.clone(),
        line,
        detail,
    };
    if field.is_empty() && (def.nullable || def.ty != ColumnType::Text) {
        return Ok(Value::Null);
    }
    Ok(match def.ty {
        ColumnType::Int64 => Value::Int(field.parse().map_err(|e| err(format!("{}: {e}", def.name)))?),
        ColumnType::Decimal64 => Value::Decimal(field.parse().map_err(|e| err(format!("{}: {e}", def.name)))?),
        ColumnType::Timestamp => Value::Timestamp(field.parse().map_err(|e| err(format!("{}: {e}", def.name)))?),
        ColumnType::Text => Value::Text(field.to_string()),
    })
}

/// Parses CSV text for `schema` into rows. The header must name the
/// schema's columns in order.
pub fn parse_csv_rows<R: Read>(schema: &TableSchema, input: R) -> Result<Vec<Vec<Value>>, CsvError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    let expected: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CsvError::Parse {
            table: schema.name.clone(),
            line: 1,
            detail: format!("header {:?} does not match {:?}", header.iter().collect::<Vec<_>>(), expected),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| parse_field(schema, c, field, line))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Re-ingests a directory written by [`export_dir`] into `store` in one
/// commit. Tables without a file are left empty.
pub fn import_dir(store: &Store, dir: &Path) -> Result<Vec<(String, usize)>, CsvError> {
    let mut batch = Batch::default();
    let mut counts = Vec::new();
    for schema in store.catalog().tables {
        let path = dir.join(format!("{}.csv", schema.name));
        if !path.exists() {
            continue;
        }
        let file = fs::File::open(&path).map_err(|source| CsvError::Io { path: path.clone(), source })?;
        let rows = parse_csv_rows(&schema, std::io::BufReader::new(file))?;
        counts.push((schema.name.clone(), rows.len()));
        batch.push_rows(&schema.name, rows);
    }
    store.load(&batch)?;
    Ok(counts)
}

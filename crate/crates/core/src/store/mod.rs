//! Embedded in-memory columnar store.
//!
//! One writer at a time (serialized by an internal mutex) appends validated
//! batches; any number of readers take [`Snapshot`]s, which are per-table
//! high-water marks plus a commit epoch. Publishing a commit swaps a single
//! `Arc`, so a snapshot sees either none or all of a batch, across tables.

mod column;
mod csv_io;
mod meter;
mod scan;

use std::sync::Arc;
use std::time::Instant;

use parking_lot::{Mutex, RwLock};
use thiserror::Error;

use crate::domain::{row_violations, ColumnType, SchemaCatalog, TableSchema, Value, Violation};

use column::{decode, Table};

pub use csv_io::{export_dir, export_table, import_dir, parse_csv_rows, CsvError};
pub use meter::{RateMeter, RateMeters, StreamClass, DEFAULT_WINDOW_S};
pub use scan::{
    compare_values, literal_compatible, CmpOp, ColumnFilter, ColumnValues, ColumnVector, ScanPredicate, ScanResult,
};

pub const DEFAULT_MAX_ROWS: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("table {0} already exists")]
    DuplicateTable(String),
    #[error("table {0} has no columns")]
    EmptySchema(String),
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown column {column} in table {table}")]
    UnknownColumn { table: String, column: String },
    #[error("type mismatch on {column}: {detail}")]
    TypeMismatch { column: String, detail: String },
    #[error("{table} row {row}: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation {
        table: String,
        row: usize,
        violations: Vec<Violation>,
    },
    #[error("{table} row {row}: id {id} does not follow previous id {previous}")]
    IdentityOrder {
        table: String,
        row: usize,
        id: i64,
        previous: i64,
    },
    #[error("{table} row {row}: {column} = {value} has no matching row in {references}")]
    Referential {
        table: String,
        row: usize,
        column: String,
        value: i64,
        references: String,
    },
    #[error("fill-in on {table}: {detail}")]
    FillIn { table: String, detail: String },
    #[error("row cap of {max_rows} reached")]
    Full { max_rows: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct StoreOptions {
    pub max_rows: u64,
    pub rate_window_s: u32,
}

impl Default for StoreOptions {
    fn default() -> Self {
        Self {
            max_rows: DEFAULT_MAX_ROWS,
            rate_window_s: DEFAULT_WINDOW_S,
        }
    }
}

/// Rows to append to one table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableRows {
    pub table: String,
    pub rows: Vec<Vec<Value>>,
}

/// Sets a nullable fill-in column of an existing row, located by its ID.
#[derive(Debug, Clone, PartialEq)]
pub struct FillIn {
    pub table: String,
    pub id: i64,
    pub column: String,
    pub value: Value,
}

/// A multi-table unit of ingestion. Appends are applied in order, then
/// fill-ins; the whole batch commits atomically or not at all.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub appends: Vec<TableRows>,
    pub fill_ins: Vec<FillIn>,
}

impl Batch {
    pub fn is_empty(&self) -> bool {
        self.appends.iter().all(|t| t.rows.is_empty()) && self.fill_ins.is_empty()
    }

    pub fn row_count(&self) -> usize {
        self.appends.iter().map(|t| t.rows.len()).sum()
    }

    pub fn push_rows(&mut self, table: &str, rows: Vec<Vec<Value>>) {
        if rows.is_empty() {
            return;
        }
        match self.appends.iter_mut().find(|t| t.table == table) {
            Some(t) => t.rows.extend(rows),
            None => self.appends.push(TableRows {
                table: table.to_string(),
                rows,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommitReceipt {
    pub epoch: u64,
    /// First row position assigned per appended table.
    pub first_rows: Vec<(String, usize)>,
    pub business_rows: u64,
    pub sensor_rows: u64,
}

struct Published {
    epoch: u64,
    views: Vec<(Arc<Table>, usize)>,
}

struct WriterState {
    epoch: u64,
    total_rows: u64,
    /// Highest identity value per table id.
    last_ids: Vec<Option<i64>>,
}

struct StoreInner {
    tables: RwLock<Vec<Arc<Table>>>,
    published: RwLock<Arc<Published>>,
    writer: Mutex<WriterState>,
    meters: RateMeters,
    options: StoreOptions,
}

/// Cloneable handle to a shared store.
#[derive(Clone)]
pub struct Store {
    inner: Arc<StoreInner>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("options", &self.inner.options).finish_non_exhaustive()
    }
}

impl Store {
    pub fn new(options: StoreOptions) -> Self {
        Self {
            inner: Arc::new(StoreInner {
                tables: RwLock::new(Vec::new()),
                published: RwLock::new(Arc::new(Published {
                    epoch: 0,
                    views: Vec::new(),
                })),
                writer: Mutex::new(WriterState {
                    epoch: 0,
                    total_rows: 0,
                    last_ids: Vec::new(),
                }),
                meters: RateMeters::new(options.rate_window_s),
                options,
            }),
        }
    }

    /// A store with every table of `catalog` created.
    pub fn with_catalog(catalog: &SchemaCatalog, options: StoreOptions) -> Self {
        let store = Self::new(options);
        for schema in &catalog.tables {
            store.create_table(schema.clone()).expect("catalog tables are unique");
        }
        store
    }

    pub fn options(&self) -> StoreOptions {
        self.inner.options
    }

    pub fn meters(&self) -> &RateMeters {
        &self.inner.meters
    }

    pub fn ingest_rate(&self, class: StreamClass) -> f64 {
        self.inner.meters.rate(class)
    }

    pub fn ingest_total(&self, class: StreamClass) -> u64 {
        self.inner.meters.meter(class).total()
    }

    pub fn create_table(&self, schema: TableSchema) -> Result<(), StoreError> {
        if schema.columns.is_empty() {
            return Err(StoreError::EmptySchema(schema.name));
        }
        let mut writer = self.inner.writer.lock();
        let mut tables = self.inner.tables.write();
        if tables.iter().any(|t| t.schema.name.eq_ignore_ascii_case(&schema.name)) {
            return Err(StoreError::DuplicateTable(schema.name));
        }
        for fk in &schema.foreign_keys {
            if schema.column_index(&fk.column).is_none() {
                return Err(StoreError::UnknownColumn {
                    table: schema.name.clone(),
                    column: fk.column.clone(),
                });
            }
            if !tables.iter().any(|t| t.schema.name == fk.references) {
                return Err(StoreError::UnknownTable(fk.references.clone()));
            }
        }
        let id = tables.len();
        tables.push(Arc::new(Table::new(id, schema)));
        writer.last_ids.push(None);
        writer.epoch += 1;
        self.publish(&tables, writer.epoch);
        Ok(())
    }

    pub fn catalog(&self) -> SchemaCatalog {
        SchemaCatalog {
            tables: self.inner.tables.read().iter().map(|t| t.schema.clone()).collect(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            state: self.inner.published.read().clone(),
            acquired_at: Instant::now(),
        }
    }

    /// Appends rows to a single table; returns the first assigned row position.
    pub fn append(&self, table: &str, rows: Vec<Vec<Value>>) -> Result<usize, StoreError> {
        let mut batch = Batch::default();
        batch.appends.push(TableRows {
            table: table.to_string(),
            rows,
        });
        let receipt = self.commit(&batch)?;
        Ok(receipt.first_rows[0].1)
    }

    pub fn commit(&self, batch: &Batch) -> Result<CommitReceipt, StoreError> {
        let receipt = self.commit_unmetered(batch)?;
        self.inner.meters.credit(StreamClass::Business, receipt.business_rows);
        self.inner.meters.credit(StreamClass::Sensor, receipt.sensor_rows);
        Ok(receipt)
    }

    /// Commits like [`Store::commit`] without crediting the ingestion meters
    /// (master data, re-imported exports).
    pub fn load(&self, batch: &Batch) -> Result<CommitReceipt, StoreError> {
        self.commit_unmetered(batch)
    }

    fn commit_unmetered(&self, batch: &Batch) -> Result<CommitReceipt, StoreError> {
        let mut writer = self.inner.writer.lock();
        let tables = self.inner.tables.read().clone();
        let new_rows = batch.row_count() as u64;
        if writer.total_rows + new_rows > self.inner.options.max_rows {
            return Err(StoreError::Full {
                max_rows: self.inner.options.max_rows,
            });
        }

        let epoch = writer.epoch + 1;
        let mut undo: Vec<(Arc<Table>, usize, Option<i64>)> = Vec::new();
        let result = self.apply(&tables, &mut writer, batch, epoch, &mut undo);
        let receipt = match result {
            Ok(receipt) => receipt,
            Err(e) => {
                for (table, written, last_id) in undo.into_iter().rev() {
                    table.set_written(written);
                    writer.last_ids[table.id] = last_id;
                }
                return Err(e);
            }
        };

        writer.epoch = epoch;
        writer.total_rows += new_rows;
        self.publish(&tables, epoch);
        Ok(receipt)
    }

    fn publish(&self, tables: &[Arc<Table>], epoch: u64) {
        let views = tables.iter().map(|t| (t.clone(), t.written())).collect();
        *self.inner.published.write() = Arc::new(Published { epoch, views });
    }

    fn apply(
        &self,
        tables: &[Arc<Table>],
        writer: &mut WriterState,
        batch: &Batch,
        epoch: u64,
        undo: &mut Vec<(Arc<Table>, usize, Option<i64>)>,
    ) -> Result<CommitReceipt, StoreError> {
        let find = |name: &str| {
            tables
                .iter()
                .find(|t| t.schema.name.eq_ignore_ascii_case(name))
                .cloned()
                .ok_or_else(|| StoreError::UnknownTable(name.to_string()))
        };
        let mut receipt = CommitReceipt {
            epoch,
            first_rows: Vec::new(),
            business_rows: 0,
            sensor_rows: 0,
        };

        for append in &batch.appends {
            let table = find(&append.table)?;
            let start = table.written();
            undo.push((table.clone(), start, writer.last_ids[table.id]));
            self.check_rows(tables, &table, &append.rows, writer)?;
            table.write_rows(start, &append.rows, epoch);
            table.set_written(start + append.rows.len());
            receipt.first_rows.push((table.schema.name.clone(), start));
            match table.stream {
                StreamClass::Business => receipt.business_rows += append.rows.len() as u64,
                StreamClass::Sensor => receipt.sensor_rows += append.rows.len() as u64,
            }
        }

        // validate every fill-in before touching any cell
        let mut planned: Vec<(Arc<Table>, usize, usize, &Value)> = Vec::with_capacity(batch.fill_ins.len());
        for fill in &batch.fill_ins {
            let table = find(&fill.table)?;
            let err = |detail: String| StoreError::FillIn {
                table: table.schema.name.clone(),
                detail,
            };
            let column = table.schema.column_index(&fill.column).ok_or_else(|| StoreError::UnknownColumn {
                table: table.schema.name.clone(),
                column: fill.column.clone(),
            })?;
            if !table.schema.columns[column].fill_in {
                return Err(err(format!("{} is not a fill-in column", fill.column)));
            }
            if fill.value.is_null() {
                return Err(err(format!("{} cannot be filled with NULL", fill.column)));
            }
            if table.schema.id_column().is_none() {
                return Err(err("table has no identity column".into()));
            }
            let reader = table.reader(u64::MAX);
            let row = reader
                .find_id(fill.id, table.written())
                .ok_or_else(|| err(format!("no row with ID {}", fill.id)))?;
            let already = reader.raw(row, column).is_some()
                || planned.iter().any(|(t, r, c, _)| t.id == table.id && *r == row && *c == column);
            if already {
                return Err(err(format!("{} of ID {} is already set", fill.column, fill.id)));
            }
            let mut values = reader.row(row);
            values[column] = fill.value.clone();
            let violations = row_violations(&table.schema, &values);
            if !violations.is_empty() {
                return Err(StoreError::Validation {
                    table: table.schema.name.clone(),
                    row,
                    violations,
                });
            }
            RefChecker::new(tables, &table, Some(column)).check(row, &values)?;
            planned.push((table, row, column, &fill.value));
        }
        for (table, row, column, value) in planned {
            table.write_cell(row, column, value, epoch);
        }
        Ok(receipt)
    }

    fn check_rows(
        &self,
        tables: &[Arc<Table>],
        table: &Arc<Table>,
        rows: &[Vec<Value>],
        writer: &mut WriterState,
    ) -> Result<(), StoreError> {
        let has_id = table.schema.id_column().is_some();
        let mut refs = RefChecker::new(tables, table, None);
        for (i, row) in rows.iter().enumerate() {
            let violations = row_violations(&table.schema, row);
            if !violations.is_empty() {
                return Err(StoreError::Validation {
                    table: table.schema.name.clone(),
                    row: i,
                    violations,
                });
            }
            if has_id {
                let id = row[0].as_i64().expect("validated identity");
                if let Some(previous) = writer.last_ids[table.id] {
                    if id <= previous {
                        return Err(StoreError::IdentityOrder {
                            table: table.schema.name.clone(),
                            row: i,
                            id,
                            previous,
                        });
                    }
                }
                writer.last_ids[table.id] = Some(id);
            }
            refs.check(i, row)?;
        }
        Ok(())
    }

    /// Bytes held by a table's column segments and dictionaries.
    pub fn table_heap_bytes(&self, table: &str) -> Option<usize> {
        self.inner
            .tables
            .read()
            .iter()
            .find(|t| t.schema.name.eq_ignore_ascii_case(table))
            .map(|t| t.heap_bytes())
    }

    pub fn total_rows(&self) -> u64 {
        self.inner.writer.lock().total_rows
    }
}

/// Foreign-key existence checks for rows of one table against the writer's
/// view (published rows plus rows written earlier in the same commit).
struct RefChecker<'a> {
    table: &'a Table,
    targets: Vec<(usize, &'a Table, column::TableReader<'a>, usize, Option<i64>)>,
}

impl<'a> RefChecker<'a> {
    fn new(tables: &'a [Arc<Table>], table: &'a Table, only_column: Option<usize>) -> Self {
        let targets = table
            .schema
            .foreign_keys
            .iter()
            .filter_map(|fk| {
                let col = table.schema.column_index(&fk.column).expect("fk column");
                if only_column.is_some_and(|c| c != col) {
                    return None;
                }
                let target = tables
                    .iter()
                    .find(|t| t.schema.name == fk.references)
                    .expect("fk target exists");
                Some((col, &**target, target.reader(u64::MAX), target.written(), None))
            })
            .collect();
        Self { table, targets }
    }

    fn check(&mut self, row_no: usize, row: &[Value]) -> Result<(), StoreError> {
        for (col, target, reader, len, last_hit) in &mut self.targets {
            let Some(value) = row[*col].as_i64() else { continue };
            if *last_hit == Some(value) {
                continue;
            }
            if reader.find_id(value, *len).is_none() {
                return Err(StoreError::Referential {
                    table: self.table.schema.name.clone(),
                    row: row_no,
                    column: self.table.schema.columns[*col].name.clone(),
                    value,
                    references: target.schema.name.clone(),
                });
            }
            *last_hit = Some(value);
        }
        Ok(())
    }
}

/// Immutable, consistent cut of every table.
#[derive(Clone)]
pub struct Snapshot {
    state: Arc<Published>,
    acquired_at: Instant,
}

impl std::fmt::Debug for Snapshot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let counts: Vec<_> = self.state.views.iter().map(|(t, n)| (t.schema.name.as_str(), *n)).collect();
        f.debug_struct("Snapshot")
            .field("epoch", &self.state.epoch)
            .field("rows", &counts)
            .finish()
    }
}

impl Snapshot {
    pub fn epoch(&self) -> u64 {
        self.state.epoch
    }

    pub fn acquired_at(&self) -> Instant {
        self.acquired_at
    }

    fn view(&self, table: &str) -> Result<(&Arc<Table>, usize), StoreError> {
        self.state
            .views
            .iter()
            .find(|(t, _)| t.schema.name.eq_ignore_ascii_case(table))
            .map(|(t, n)| (t, *n))
            .ok_or_else(|| StoreError::UnknownTable(table.to_string()))
    }

    pub fn row_count(&self, table: &str) -> Option<usize> {
        self.view(table).ok().map(|(_, n)| n)
    }

    /// (table name, visible rows) for every table, in catalog order.
    pub fn row_counts(&self) -> Vec<(String, usize)> {
        self.state.views.iter().map(|(t, n)| (t.schema.name.clone(), *n)).collect()
    }

    pub fn schema(&self, table: &str) -> Option<&TableSchema> {
        self.view(table).ok().map(|(t, _)| &t.schema)
    }

    pub fn catalog(&self) -> SchemaCatalog {
        SchemaCatalog {
            tables: self.state.views.iter().map(|(t, _)| t.schema.clone()).collect(),
        }
    }

    /// Reads a whole row as values; `None` past the visible count.
    pub fn row(&self, table: &str, row: usize) -> Option<Vec<Value>> {
        let (t, n) = self.view(table).ok()?;
        (row < n).then(|| t.reader(self.state.epoch).row(row))
    }

    /// Returns the selected columns for the visible rows that satisfy
    /// `predicate`, in insertion order.
    pub fn scan(
        &self,
        table: &str,
        columns: &[&str],
        predicate: Option<&ScanPredicate>,
    ) -> Result<ScanResult, StoreError> {
        let (tbl, count) = self.view(table)?;
        let schema = &tbl.schema;
        let resolve = |name: &str| {
            schema.column_index(name).ok_or_else(|| StoreError::UnknownColumn {
                table: schema.name.clone(),
                column: name.to_string(),
            })
        };
        let out_cols = columns.iter().map(|c| resolve(c)).collect::<Result<Vec<_>, _>>()?;

        let mut filters = Vec::new();
        for f in predicate.map(|p| p.conjuncts.as_slice()).unwrap_or_default() {
            let c = resolve(f.column())?;
            let ty = schema.columns[c].ty;
            for lit in f.literals() {
                if !literal_compatible(ty, lit) {
                    return Err(StoreError::TypeMismatch {
                        column: schema.columns[c].name.clone(),
                        detail: format!("cannot compare {ty} with {lit:?}"),
                    });
                }
            }
            filters.push((c, ty, f));
        }

        let reader = tbl.reader(self.state.epoch);
        let dict_of = |c: usize| {
            tbl.dictionary(c)
                .map(|d| d.entries())
                .unwrap_or_else(|| Arc::new(Vec::new()))
        };

        let row_ids: Vec<u32> = if filters.is_empty() {
            (0..count as u32).collect()
        } else {
            let dicts: Vec<_> = filters.iter().map(|(c, _, _)| dict_of(*c)).collect();
            (0..count)
                .filter(|&r| {
                    filters
                        .iter()
                        .zip(&dicts)
                        .all(|((c, ty, f), dict)| f.matches(decode(*ty, reader.raw(r, *c), dict)))
                })
                .map(|r| r as u32)
                .collect()
        };

        let columns = out_cols
            .iter()
            .map(|&c| {
                let def = &schema.columns[c];
                let mut validity = Vec::with_capacity(row_ids.len());
                let mut raw = Vec::with_capacity(row_ids.len());
                for &r in &row_ids {
                    let bits = reader.raw(r as usize, c);
                    validity.push(bits.is_some());
                    raw.push(bits.unwrap_or(0));
                }
                let values = match def.ty {
                    ColumnType::Int64 => ColumnValues::Int(raw.into_iter().map(|b| b as i64).collect()),
                    ColumnType::Decimal64 => ColumnValues::Decimal(raw.into_iter().map(f64::from_bits).collect()),
                    ColumnType::Timestamp => ColumnValues::Timestamp(raw),
                    ColumnType::Text => ColumnValues::Text {
                        codes: raw.into_iter().map(|b| b as u32).collect(),
                        dict: dict_of(c),
                    },
                };
                ColumnVector {
                    name: def.name.clone(),
                    ty: def.ty,
                    values,
                    validity,
                }
            })
            .collect();
        Ok(ScanResult { row_ids, columns })
    }
}

#[cfg(test)]
mod tests;

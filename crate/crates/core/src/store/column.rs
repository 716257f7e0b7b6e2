//! Physical table layout.
//!
//! Rows live in geometrically growing row groups (1024, 2048, 4096, ...
//! rows). Every fixed-width cell is an `AtomicU64`, so the single writer can
//! fill slots past the published row count while readers scan below it
//! without locks. Text is dictionary encoded. Fill-in columns additionally
//! carry a per-row commit epoch so that a snapshot never sees a value that
//! was set after it was taken.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};

use crate::domain::{ColumnType, TableSchema, Value};

use super::meter::StreamClass;

const BASE_ROWS: usize = 1024;

#[inline]
pub(crate) fn locate(row: usize) -> (usize, usize) {
    let x = row / BASE_ROWS + 1;
    let group = (usize::BITS - 1 - x.leading_zeros()) as usize;
    let start = BASE_ROWS * ((1usize << group) - 1);
    (group, row - start)
}

fn atomic_vec(len: usize) -> Box<[AtomicU64]> {
    (0..len).map(|_| AtomicU64::new(0)).collect()
}

pub(crate) struct ColumnSegment {
    data: Box<[AtomicU64]>,
    validity: Box<[AtomicU64]>,
    /// Commit epoch at which the cell became non-null; 0 while null.
    stamps: Option<Box<[AtomicU64]>>,
}

impl ColumnSegment {
    fn new(capacity: usize, fill_in: bool) -> Self {
        Self {
            data: atomic_vec(capacity),
            validity: atomic_vec(capacity.div_ceil(64)),
            stamps: fill_in.then(|| atomic_vec(capacity)),
        }
    }

    fn heap_bytes(&self) -> usize {
        let cells = self.data.len() + self.validity.len() + self.stamps.as_ref().map_or(0, |s| s.len());
        cells * std::mem::size_of::<AtomicU64>()
    }

    #[inline]
    fn write(&self, offset: usize, bits: Option<u64>, epoch: u64) {
        let mask = 1u64 << (offset % 64);
        let word = &self.validity[offset / 64];
        match bits {
            Some(b) => {
                self.data[offset].store(b, Ordering::Relaxed);
                word.fetch_or(mask, Ordering::Release);
            }
            None => {
                word.fetch_and(!mask, Ordering::Release);
            }
        }
        if let Some(stamps) = &self.stamps {
            stamps[offset].store(if bits.is_some() { epoch } else { 0 }, Ordering::Release);
        }
    }

    #[inline]
    fn read(&self, offset: usize, epoch: u64) -> Option<u64> {
        match &self.stamps {
            Some(stamps) => {
                let stamp = stamps[offset].load(Ordering::Acquire);
                if stamp == 0 || stamp > epoch {
                    return None;
                }
            }
            None => {
                let word = self.validity[offset / 64].load(Ordering::Acquire);
                if word & (1u64 << (offset % 64)) == 0 {
                    return None;
                }
            }
        }
        Some(self.data[offset].load(Ordering::Relaxed))
    }
}

pub(crate) struct RowGroup {
    columns: Vec<ColumnSegment>,
}

/// Append-only string dictionary for one text column.
#[derive(Default)]
pub(crate) struct Dictionary {
    values: RwLock<Arc<Vec<Arc<str>>>>,
    index: Mutex<HashMap<Arc<str>, u32>>,
}

impl Dictionary {
    fn intern(&self, s: &str) -> u32 {
        let mut index = self.index.lock();
        if let Some(&code) = index.get(s) {
            return code;
        }
        let entry: Arc<str> = Arc::from(s);
        let mut values = self.values.write();
        let code = values.len() as u32;
        Arc::make_mut(&mut values).push(entry.clone());
        index.insert(entry, code);
        code
    }

    pub(crate) fn entries(&self) -> Arc<Vec<Arc<str>>> {
        self.values.read().clone()
    }

    fn heap_bytes(&self) -> usize {
        self.values.read().iter().map(|s| s.len() + 16).sum()
    }
}

/// Borrowed view of a decoded cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Cell<'a> {
    Null,
    Int(i64),
    Decimal(f64),
    Timestamp(u64),
    Text(&'a str),
}

impl Cell<'_> {
    pub(crate) fn to_value(self) -> Value {
        match self {
            Cell::Null => Value::Null,
            Cell::Int(v) => Value::Int(v),
            Cell::Decimal(v) => Value::Decimal(v),
            Cell::Timestamp(v) => Value::Timestamp(v),
            Cell::Text(s) => Value::Text(s.to_string()),
        }
    }
}

pub(crate) fn decode<'a>(ty: ColumnType, bits: Option<u64>, dict: &'a [Arc<str>]) -> Cell<'a> {
    match bits {
        None => Cell::Null,
        Some(b) => match ty {
            ColumnType::Int64 => Cell::Int(b as i64),
            ColumnType::Decimal64 => Cell::Decimal(f64::from_bits(b)),
            ColumnType::Timestamp => Cell::Timestamp(b),
            ColumnType::Text => Cell::Text(&dict[b as usize]),
        },
    }
}

pub(crate) struct Table {
    pub(crate) id: usize,
    pub(crate) schema: TableSchema,
    pub(crate) stream: StreamClass,
    groups: RwLock<Vec<Arc<RowGroup>>>,
    dicts: Vec<Option<Dictionary>>,
    /// Rows written by the writer, including ones not yet published.
    written: AtomicUsize,
}

impl Table {
    pub(crate) fn new(id: usize, schema: TableSchema) -> Self {
        let dicts = schema
            .columns
            .iter()
            .map(|c| (c.ty == ColumnType::Text).then(Dictionary::default))
            .collect();
        let stream = StreamClass::for_table(&schema.name);
        Self {
            id,
            schema,
            stream,
            groups: RwLock::new(Vec::new()),
            dicts,
            written: AtomicUsize::new(0),
        }
    }

    pub(crate) fn written(&self) -> usize {
        self.written.load(Ordering::Acquire)
    }

    pub(crate) fn set_written(&self, n: usize) {
        self.written.store(n, Ordering::Release);
    }

    pub(crate) fn groups(&self) -> Vec<Arc<RowGroup>> {
        self.groups.read().clone()
    }

    pub(crate) fn dictionary(&self, column: usize) -> Option<&Dictionary> {
        self.dicts[column].as_ref()
    }

    fn ensure_capacity(&self, rows: usize) {
        if rows == 0 {
            return;
        }
        let (last_group, _) = locate(rows - 1);
        let have = self.groups.read().len();
        if have > last_group {
            return;
        }
        let mut groups = self.groups.write();
        while groups.len() <= last_group {
            let capacity = BASE_ROWS << groups.len();
            let columns = self
                .schema
                .columns
                .iter()
                .map(|c| ColumnSegment::new(capacity, c.fill_in))
                .collect();
            groups.push(Arc::new(RowGroup { columns }));
        }
    }

    fn encode(&self, column: usize, value: &Value) -> Option<u64> {
        match value {
            Value::Null => None,
            Value::Int(v) => Some(*v as u64),
            Value::Decimal(v) => Some(v.to_bits()),
            Value::Timestamp(v) => Some(*v),
            Value::Text(s) => Some(self.dicts[column].as_ref().expect("text column").intern(s) as u64),
        }
    }

    /// Writes already validated rows starting at slot `start`.
    pub(crate) fn write_rows(&self, start: usize, rows: &[Vec<Value>], epoch: u64) {
        self.ensure_capacity(start + rows.len());
        let groups = self.groups();
        for (i, row) in rows.iter().enumerate() {
            let (g, off) = locate(start + i);
            let group = &groups[g];
            for (c, value) in row.iter().enumerate() {
                let bits = self.encode(c, value);
                group.columns[c].write(off, bits, epoch);
            }
        }
    }

    pub(crate) fn write_cell(&self, row: usize, column: usize, value: &Value, epoch: u64) {
        let bits = self.encode(column, value);
        let groups = self.groups();
        let (g, off) = locate(row);
        groups[g].columns[column].write(off, bits, epoch);
    }

    pub(crate) fn heap_bytes(&self) -> usize {
        let groups: usize = self
            .groups
            .read()
            .iter()
            .map(|g| g.columns.iter().map(ColumnSegment::heap_bytes).sum::<usize>())
            .sum();
        let dicts: usize = self.dicts.iter().flatten().map(Dictionary::heap_bytes).sum();
        groups + dicts
    }

    pub(crate) fn reader(&self, epoch: u64) -> TableReader<'_> {
        TableReader {
            table: self,
            groups: self.groups(),
            epoch,
        }
    }
}

/// Point-in-time accessor over one table; holds the row-group list so reads
/// need no further locking.
pub(crate) struct TableReader<'t> {
    table: &'t Table,
    groups: Vec<Arc<RowGroup>>,
    epoch: u64,
}

impl<'t> TableReader<'t> {
    #[inline]
    pub(crate) fn raw(&self, row: usize, column: usize) -> Option<u64> {
        let (g, off) = locate(row);
        self.groups[g].columns[column].read(off, self.epoch)
    }

    pub(crate) fn value(&self, row: usize, column: usize) -> Value {
        let ty = self.table.schema.columns[column].ty;
        match self.raw(row, column) {
            None => Value::Null,
            Some(bits) if ty == ColumnType::Text => {
                let dict = self.table.dicts[column].as_ref().expect("text column").entries();
                Value::Text(dict[bits as usize].to_string())
            }
            bits => decode(ty, bits, &[]).to_value(),
        }
    }

    pub(crate) fn row(&self, row: usize) -> Vec<Value> {
        (0..self.table.schema.columns.len()).map(|c| self.value(row, c)).collect()
    }

    /// Binary search over the identity column, which is strictly increasing.
    pub(crate) fn find_id(&self, id: i64, len: usize) -> Option<usize> {
        let (mut lo, mut hi) = (0usize, len);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let v = self.raw(mid, 0).map(|b| b as i64)?;
            match v.cmp(&id) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }
}

use std::borrow::Borrow;
use std::collections::HashMap;
use std::hash::Hash;

use crate::domain::{schema, EntityId, SensorKind};
use crate::store::{ColumnFilter, ScanPredicate, Snapshot};

use super::QueryError;

#[derive(Debug, Default)]
struct Partition {
    /// (start, end, id) sorted by start.
    entries: Vec<(i64, i64, u32)>,
    max_len: i64,
}

/// Closed intervals partitioned by key. A probe finds every interval of its
/// partition containing a point by binary-searching the start positions
/// within the longest interval length.
#[derive(Debug)]
pub struct IntervalIndex<K> {
    partitions: HashMap<K, Partition>,
}

impl<K: Hash + Eq> IntervalIndex<K> {
    pub fn build(items: impl IntoIterator<Item = (K, i64, i64, u32)>) -> Self {
        let mut partitions: HashMap<K, Partition> = HashMap::new();
        for (key, start, end, id) in items {
            if end < start {
                continue;
            }
            let p = partitions.entry(key).or_default();
            p.entries.push((start, end, id));
            p.max_len = p.max_len.max(end - start);
        }
        for p in partitions.values_mut() {
            p.entries.sort_unstable();
        }
        Self { partitions }
    }

    /// Appends the ids of intervals with `start <= point <= end`.
    pub fn probe<Q>(&self, key: &Q, point: i64, out: &mut Vec<u32>)
    where
        K: Borrow<Q>,
        Q: Hash + Eq + ?Sized,
    {
        let Some(p) = self.partitions.get(key) else { return };
        let lowest = point.saturating_sub(p.max_len);
        let lo = p.entries.partition_point(|e| e.0 < lowest);
        let hi = p.entries.partition_point(|e| e.0 <= point);
        out.extend(p.entries[lo..hi].iter().filter(|e| e.1 >= point).map(|e| e.2));
    }

    pub fn len(&self) -> usize {
        self.partitions.values().map(|p| p.entries.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A sensor reading matched to the production position active at its
/// workplace when it was taken. Rows are positions in the snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VerticalMatch {
    pub reading_row: u32,
    pub position_row: u32,
}

/// Matches readings that carry a `kind` measurement to positions with
/// `entered_at <= date <= left_at` at the same workplace, optionally
/// restricted to one workplace. Open positions match nothing. Result is
/// sorted by reading, then position.
pub fn vertical_join(
    snapshot: &Snapshot,
    workplace: Option<EntityId>,
    kind: SensorKind,
) -> Result<Vec<VerticalMatch>, QueryError> {
    let wp_filter = |p: ScanPredicate| match workplace {
        Some(id) => p.and(ColumnFilter::Compare {
            column: "WORKPLACE_ID".into(),
            op: crate::store::CmpOp::Eq,
            value: crate::domain::Value::id(id),
        }),
        None => p,
    };
    let positions = snapshot.scan(
        schema::PRODUCTION_ORDER_POSITION,
        &["WORKPLACE_ID", "ENTERED_AT", "LEFT_AT"],
        Some(&wp_filter(ScanPredicate::default().and(ColumnFilter::IsNull {
            column: "LEFT_AT".into(),
            negated: true,
        }))),
    )?;
    let readings = snapshot.scan(
        schema::SENSOR_DATA,
        &["WORKPLACE_ID", "DATE"],
        Some(&wp_filter(ScanPredicate::default().and(ColumnFilter::IsNull {
            column: kind.value_column().into(),
            negated: true,
        }))),
    )?;

    let (p_wp, p_in, p_out) = (&positions.columns[0], &positions.columns[1], &positions.columns[2]);
    let index = IntervalIndex::build((0..positions.len()).filter_map(|i| {
        Some((
            p_wp.i64_at(i)?,
            p_in.i64_at(i)?,
            p_out.i64_at(i)?,
            positions.row_ids[i],
        ))
    }));

    let (r_wp, r_date) = (&readings.columns[0], &readings.columns[1]);
    let mut out = Vec::new();
    let mut hits = Vec::new();
    for i in 0..readings.len() {
        let (Some(wp), Some(date)) = (r_wp.i64_at(i), r_date.i64_at(i)) else {
            continue;
        };
        hits.clear();
        index.probe(&wp, date, &mut hits);
        hits.sort_unstable();
        out.extend(hits.iter().map(|&p| VerticalMatch {
            reading_row: readings.row_ids[i],
            position_row: p,
        }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_respects_inclusive_bounds() {
        let idx = IntervalIndex::build(vec![(1, 100, 200, 0), (1, 150, 400, 1), (2, 0, 1000, 2)]);
        let probe = |k: i64, t: i64| {
            let mut v = Vec::new();
            idx.probe(&k, t, &mut v);
            v.sort();
            v
        };
        assert_eq!(probe(1, 99), Vec::<u32>::new());
        assert_eq!(probe(1, 100), vec![0]);
        assert_eq!(probe(1, 200), vec![0, 1]);
        assert_eq!(probe(1, 201), vec![1]);
        assert_eq!(probe(1, 401), Vec::<u32>::new());
        assert_eq!(probe(3, 150), Vec::<u32>::new());
    }

    #[test]
    fn long_interval_is_not_missed_behind_short_ones() {
        let mut items = vec![(0, 0, 10_000, 0)];
        items.extend((1..100).map(|i| (0, i * 10, i * 10 + 1, i as u32)));
        let idx = IntervalIndex::build(items);
        let mut v = Vec::new();
        idx.probe(&0, 5_000, &mut v);
        assert_eq!(v, vec![0]);
    }
}

use std::cmp::Ordering;
use std::collections::HashMap;
use std::hash::Hash;
use std::time::Instant;

use crate::domain::Value;
use crate::store::{compare_values, ColumnValues, ColumnVector, ScanResult, Snapshot};

use super::ast::AggFunc;
use super::interval::IntervalIndex;
use super::plan::{BoundOperand, BoundPred, JoinStep, KeyKind, OutExpr, Plan, Slot};
use super::{QueryError, QueryOptions, ResultTable};

/// Borrowed view of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Datum<'a> {
    Null,
    Int(i64),
    Decimal(f64),
    Timestamp(u64),
    Text(&'a str),
}

impl<'a> Datum<'a> {
    pub(crate) fn of(col: &'a ColumnVector, i: usize) -> Datum<'a> {
        if !col.validity[i] {
            return Datum::Null;
        }
        match &col.values {
            ColumnValues::Int(v) => Datum::Int(v[i]),
            ColumnValues::Decimal(v) => Datum::Decimal(v[i]),
            ColumnValues::Timestamp(v) => Datum::Timestamp(v[i]),
            ColumnValues::Text { codes, dict } => Datum::Text(&dict[codes[i] as usize]),
        }
    }

    fn of_value(v: &'a Value) -> Datum<'a> {
        match v {
            Value::Null => Datum::Null,
            Value::Int(i) => Datum::Int(*i),
            Value::Decimal(d) => Datum::Decimal(*d),
            Value::Timestamp(t) => Datum::Timestamp(*t),
            Value::Text(s) => Datum::Text(s),
        }
    }

    fn to_value(self) -> Value {
        match self {
            Datum::Null => Value::Null,
            Datum::Int(i) => Value::Int(i),
            Datum::Decimal(d) => Value::Decimal(d),
            Datum::Timestamp(t) => Value::Timestamp(t),
            Datum::Text(s) => Value::Text(s.to_string()),
        }
    }

    fn as_f64(self) -> Option<f64> {
        match self {
            Datum::Int(i) => Some(i as f64),
            Datum::Decimal(d) => Some(d),
            Datum::Timestamp(t) => Some(t as f64),
            _ => None,
        }
    }

    fn as_i64(self) -> Option<i64> {
        match self {
            Datum::Int(i) => Some(i),
            Datum::Timestamp(t) => i64::try_from(t).ok(),
            _ => None,
        }
    }

    /// SQL comparison; `None` if either side is null.
    fn compare(self, other: Datum<'_>) -> Option<Ordering> {
        use Datum::*;
        match (self, other) {
            (Null, _) | (_, Null) => None,
            (Int(a), Int(b)) => Some(a.cmp(&b)),
            (Timestamp(a), Timestamp(b)) => Some(a.cmp(&b)),
            (Int(a), Timestamp(b)) => Some((a as i128).cmp(&(b as i128))),
            (Timestamp(a), Int(b)) => Some((a as i128).cmp(&(b as i128))),
            (Text(a), Text(b)) => Some(a.as_bytes().cmp(b.as_bytes())),
            (Text(_), _) | (_, Text(_)) => None,
            (a, b) => a.as_f64()?.partial_cmp(&b.as_f64()?),
        }
    }
}

/// Hashable form of a join or grouping key component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum KeyPart<'a> {
    Null,
    Int(i64),
    Float(u64),
    Text(&'a str),
}

fn float_bits(f: f64) -> u64 {
    if f == 0.0 {
        0f64.to_bits()
    } else {
        f.to_bits()
    }
}

fn join_key(d: Datum<'_>, kind: KeyKind) -> Option<KeyPart<'_>> {
    match (kind, d) {
        (_, Datum::Null) => None,
        (KeyKind::Int, d) => d.as_i64().map(KeyPart::Int),
        (KeyKind::Float, d) => d.as_f64().map(|f| KeyPart::Float(float_bits(f))),
        (KeyKind::Text, Datum::Text(s)) => Some(KeyPart::Text(s)),
        (KeyKind::Text, _) => None,
    }
}

fn group_key(d: Datum<'_>) -> KeyPart<'_> {
    match d {
        Datum::Null => KeyPart::Null,
        Datum::Int(i) => KeyPart::Int(i),
        Datum::Timestamp(t) => KeyPart::Int(t as i64),
        Datum::Decimal(f) => KeyPart::Float(float_bits(f)),
        Datum::Text(s) => KeyPart::Text(s),
    }
}

/// Row-limit and deadline enforcement.
pub(crate) struct Guard {
    deadline: Option<Instant>,
    max_rows: u64,
    ticks: u32,
}

impl Guard {
    pub(crate) fn new(options: &QueryOptions, started: Instant) -> Self {
        Self {
            deadline: options.timeout.map(|t| started + t),
            max_rows: options.max_intermediate_rows,
            ticks: 0,
        }
    }

    #[inline]
    pub(crate) fn tick(&mut self) -> Result<(), QueryError> {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks.is_multiple_of(8192) {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    return Err(QueryError::Timeout);
                }
            }
        }
        Ok(())
    }

    pub(crate) fn rows(&self, n: usize) -> Result<(), QueryError> {
        if n as u64 > self.max_rows {
            Err(QueryError::ResourceLimit { limit: self.max_rows })
        } else {
            Ok(())
        }
    }
}

/// Per-source materialized columns plus the rows that passed local filters.
struct Source {
    scan: ScanResult,
}

impl Source {
    #[inline]
    fn datum(&self, column: usize, row: u32) -> Datum<'_> {
        Datum::of(&self.scan.columns[column], row as usize)
    }
}

/// Column accessor over a tuple of source rows.
trait Row {
    fn get(&self, slot: Slot) -> u32;
}

impl Row for [u32] {
    #[inline]
    fn get(&self, slot: Slot) -> u32 {
        self[slot.source]
    }
}

/// A prefix tuple extended by one row of the source being joined.
struct Extended<'a> {
    prefix: &'a [u32],
    source: usize,
    row: u32,
}

impl Row for Extended<'_> {
    #[inline]
    fn get(&self, slot: Slot) -> u32 {
        if slot.source == self.source {
            self.row
        } else {
            self.prefix[slot.source]
        }
    }
}

struct Ctx<'a> {
    sources: &'a [Source],
}

impl<'a> Ctx<'a> {
    #[inline]
    fn datum<R: Row + ?Sized>(&self, row: &R, slot: Slot) -> Datum<'a> {
        self.sources[slot.source].datum(slot.column, row.get(slot))
    }

    fn operand<R: Row + ?Sized>(&self, row: &R, o: &'a BoundOperand) -> Datum<'a> {
        match o {
            BoundOperand::Column(s) => self.datum(row, *s),
            BoundOperand::Literal(v) => Datum::of_value(v),
        }
    }

    fn eval<R: Row + ?Sized>(&self, row: &R, p: &'a BoundPred) -> bool {
        match p {
            BoundPred::Compare { left, op, right } => self
                .datum(row, *left)
                .compare(self.operand(row, right))
                .is_some_and(|o| op.holds(o)),
            BoundPred::Between { column, low, high } => {
                let v = self.datum(row, *column);
                v.compare(self.operand(row, low)).is_some_and(|o| o != Ordering::Less)
                    && v.compare(self.operand(row, high)).is_some_and(|o| o != Ordering::Greater)
            }
            BoundPred::IsNull { column, negated } => (self.datum(row, *column) == Datum::Null) != *negated,
            BoundPred::And(parts) => parts.iter().all(|x| self.eval(row, x)),
            BoundPred::Or(parts) => parts.iter().any(|x| self.eval(row, x)),
        }
    }

    fn key<R: Row + ?Sized>(&self, row: &R, slots: &[(Slot, KeyKind)], out: &mut Vec<KeyPart<'a>>) -> bool {
        out.clear();
        for &(slot, kind) in slots {
            match join_key(self.datum(row, slot), kind) {
                Some(k) => out.push(k),
                None => return false,
            }
        }
        true
    }
}

/// Runs a plan against a snapshot.
pub fn execute(plan: &Plan, snapshot: &Snapshot, options: &QueryOptions) -> Result<ResultTable, QueryError> {
    let started = Instant::now();
    let mut guard = Guard::new(options, started);

    let mut sources = Vec::with_capacity(plan.sources.len());
    for s in &plan.sources {
        let cols: Vec<&str> = s.columns.iter().map(String::as_str).collect();
        let predicate = (!s.pushdown.conjuncts.is_empty()).then_some(&s.pushdown);
        let scan = snapshot.scan(&s.table, &cols, predicate)?;
        sources.push(Source { scan });
    }

    let ctx = Ctx { sources: &sources };
    let mut candidates: Vec<Vec<u32>> = Vec::with_capacity(sources.len());
    for (i, s) in plan.sources.iter().enumerate() {
        let n = sources[i].scan.len() as u32;
        let mut rows = Vec::with_capacity(n as usize);
        let mut probe = vec![0u32; plan.sources.len()];
        for r in 0..n {
            guard.tick()?;
            probe[i] = r;
            if s.filters.iter().all(|f| ctx.eval(probe.as_slice(), f)) {
                rows.push(r);
            }
        }
        candidates.push(rows);
    }

    // Joined tuples, stored flat with `width` rows per tuple.
    let mut width = 1;
    let mut tuples: Vec<u32> = candidates[0].clone();
    for step in &plan.joins {
        tuples = join_step(&ctx, step, &tuples, width, &candidates[step.source], &mut guard)?;
        width += 1;
    }
    let count = tuples.len() / width;
    let tuple = |i: usize| &tuples[i * width..(i + 1) * width];

    let mut rows: Vec<Vec<Value>> = if plan.grouped {
        aggregate(plan, &ctx, count, &tuple, &mut guard)?
    } else {
        let take = match (plan.order_by.is_empty(), plan.limit) {
            (true, Some(n)) => count.min(n as usize),
            _ => count,
        };
        (0..take)
            .map(|i| {
                let t = tuple(i);
                plan.exprs
                    .iter()
                    .map(|e| match e {
                        OutExpr::Column(s) => ctx.datum(t, *s).to_value(),
                        OutExpr::Agg { .. } => unreachable!("ungrouped plans have no aggregates"),
                    })
                    .collect()
            })
            .collect()
    };

    if !plan.order_by.is_empty() {
        rows.sort_by(|a, b| {
            for &(idx, desc) in &plan.order_by {
                let ord = nulls_first(&a[idx], &b[idx]);
                let ord = if desc { ord.reverse() } else { ord };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        });
    }
    if let Some(n) = plan.limit {
        rows.truncate(n as usize);
    }
    let visible = plan.columns.len();
    for r in &mut rows {
        r.truncate(visible);
    }
    Ok(ResultTable {
        columns: plan.columns.clone(),
        rows,
        elapsed_ms: started.elapsed().as_secs_f64() * 1000.0,
    })
}

fn nulls_first(a: &Value, b: &Value) -> Ordering {
    match (a.is_null(), b.is_null()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => compare_values(a, b).unwrap_or(Ordering::Equal),
    }
}

fn join_step(
    ctx: &Ctx<'_>,
    step: &JoinStep,
    tuples: &[u32],
    width: usize,
    right: &[u32],
    guard: &mut Guard,
) -> Result<Vec<u32>, QueryError> {
    let left_count = tuples.len() / width;
    let tuple = |i: usize| &tuples[i * width..(i + 1) * width];
    let left_keys: Vec<(Slot, KeyKind)> = step.keys.iter().map(|k| (k.left, k.kind)).collect();
    let right_keys: Vec<(Slot, KeyKind)> = step.keys.iter().map(|k| (k.right, k.kind)).collect();
    let probe_row = |prefix, row| Extended {
        prefix,
        source: step.source,
        row,
    };
    let mut out: Vec<u32> = Vec::new();
    let mut emitted = 0usize;
    let mut emit = |out: &mut Vec<u32>, l: usize, r: u32, guard: &mut Guard| -> Result<(), QueryError> {
        let prefix = tuple(l);
        if step.residual.iter().all(|p| ctx.eval(&probe_row(prefix, r), p)) {
            emitted += 1;
            guard.rows(emitted)?;
            out.extend_from_slice(prefix);
            out.push(r);
        }
        Ok(())
    };
    let mut key = Vec::new();

    match step.interval {
        Some(iv) if iv.point_on_new => {
            let mut items = Vec::new();
            for l in 0..left_count {
                guard.tick()?;
                let t = tuple(l);
                let (Some(start), Some(end)) = (ctx.datum(t, iv.start).as_i64(), ctx.datum(t, iv.end).as_i64()) else {
                    continue;
                };
                if ctx.key(t, &left_keys, &mut key) {
                    items.push((key.clone(), start, end, l as u32));
                }
            }
            let index = IntervalIndex::build(items);
            let mut pairs: Vec<(u32, u32)> = Vec::new();
            let mut hits = Vec::new();
            for &r in right {
                guard.tick()?;
                let row = probe_row(&[], r);
                let Some(point) = ctx.datum(&row, iv.point).as_i64() else { continue };
                if !ctx.key(&row, &right_keys, &mut key) {
                    continue;
                }
                hits.clear();
                index.probe(key.as_slice(), point, &mut hits);
                pairs.extend(hits.iter().map(|&l| (l, r)));
                guard.rows(pairs.len())?;
            }
            pairs.sort_unstable();
            for (l, r) in pairs {
                guard.tick()?;
                emit(&mut out, l as usize, r, guard)?;
            }
        }
        Some(iv) => {
            let mut items = Vec::new();
            for &r in right {
                guard.tick()?;
                let row = probe_row(&[], r);
                let (Some(start), Some(end)) = (ctx.datum(&row, iv.start).as_i64(), ctx.datum(&row, iv.end).as_i64())
                else {
                    continue;
                };
                if ctx.key(&row, &right_keys, &mut key) {
                    items.push((key.clone(), start, end, r));
                }
            }
            let index = IntervalIndex::build(items);
            let mut hits = Vec::new();
            for l in 0..left_count {
                guard.tick()?;
                let t = tuple(l);
                let Some(point) = ctx.datum(t, iv.point).as_i64() else { continue };
                if !ctx.key(t, &left_keys, &mut key) {
                    continue;
                }
                hits.clear();
                index.probe(key.as_slice(), point, &mut hits);
                hits.sort_unstable();
                for &r in &hits {
                    emit(&mut out, l, r, guard)?;
                }
            }
        }
        None if !step.keys.is_empty() => {
            let mut table: HashMap<Vec<KeyPart<'_>>, Vec<u32>> = HashMap::new();
            for &r in right {
                guard.tick()?;
                if ctx.key(&probe_row(&[], r), &right_keys, &mut key) {
                    table.entry(key.clone()).or_default().push(r);
                }
            }
            for l in 0..left_count {
                guard.tick()?;
                if !ctx.key(tuple(l), &left_keys, &mut key) {
                    continue;
                }
                if let Some(rows) = table.get(key.as_slice()) {
                    for &r in rows {
                        emit(&mut out, l, r, guard)?;
                    }
                }
            }
        }
        None => {
            for l in 0..left_count {
                for &r in right {
                    guard.tick()?;
                    emit(&mut out, l, r, guard)?;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Acc {
    Count(i64),
    /// Compensated (Neumaier) sum of the non-null inputs.
    Sum { sum: f64, comp: f64, n: u64, int: Option<i128> },
    Extreme(Option<Value>),
}

impl Acc {
    fn new(func: AggFunc, integer_sum: bool) -> Acc {
        match func {
            AggFunc::Count => Acc::Count(0),
            AggFunc::Avg | AggFunc::Sum => Acc::Sum {
                sum: 0.0,
                comp: 0.0,
                n: 0,
                int: integer_sum.then_some(0),
            },
            AggFunc::Min | AggFunc::Max => Acc::Extreme(None),
        }
    }

    fn update(&mut self, func: AggFunc, d: Option<Datum<'_>>) {
        match self {
            Acc::Count(c) => {
                if d.is_none_or(|d| d != Datum::Null) {
                    *c += 1;
                }
            }
            Acc::Sum { sum, comp, n, int } => {
                let Some(d) = d else { return };
                let Some(x) = d.as_f64() else { return };
                let t = *sum + x;
                if sum.abs() >= x.abs() {
                    *comp += (*sum - t) + x;
                } else {
                    *comp += (x - t) + *sum;
                }
                *sum = t;
                *n += 1;
                if let (Some(acc), Datum::Int(i)) = (int.as_mut(), d) {
                    *acc += i as i128;
                }
            }
            Acc::Extreme(cur) => {
                let Some(d) = d.filter(|d| *d != Datum::Null) else { return };
                let replace = match cur {
                    None => true,
                    Some(v) => {
                        let ord = d.compare(Datum::of_value(v)).unwrap_or(Ordering::Equal);
                        if func == AggFunc::Min {
                            ord == Ordering::Less
                        } else {
                            ord == Ordering::Greater
                        }
                    }
                };
                if replace {
                    *cur = Some(d.to_value());
                }
            }
        }
    }

    fn finish(&self, func: AggFunc) -> Value {
        match self {
            Acc::Count(c) => Value::Int(*c),
            Acc::Sum { n: 0, .. } => Value::Null,
            Acc::Sum { sum, comp, n, int } => match (func, int) {
                (AggFunc::Sum, Some(i)) => Value::Int((*i).clamp(i64::MIN as i128, i64::MAX as i128) as i64),
                (AggFunc::Sum, None) => Value::Decimal(sum + comp),
                _ => Value::Decimal((sum + comp) / *n as f64),
            },
            Acc::Extreme(v) => v.clone().unwrap_or(Value::Null),
        }
    }
}

/// Accumulator of one output column; `None` for plain columns.
type AggSlot = Option<(AggFunc, Acc)>;

fn aggregate<'t>(
    plan: &Plan,
    ctx: &Ctx<'_>,
    count: usize,
    tuple: &dyn Fn(usize) -> &'t [u32],
    guard: &mut Guard,
) -> Result<Vec<Vec<Value>>, QueryError> {
    let fresh: Vec<Option<(AggFunc, Acc)>> = plan
        .exprs
        .iter()
        .map(|e| match e {
            OutExpr::Agg { func, arg } => {
                let integer_sum = arg.is_some_and(|s| {
                    let src = &ctx.sources[s.source].scan.columns[s.column];
                    matches!(src.values, ColumnValues::Int(_))
                });
                Some((*func, Acc::new(*func, integer_sum)))
            }
            OutExpr::Column(_) => None,
        })
        .collect();

    let mut index: HashMap<Vec<KeyPart<'_>>, usize> = HashMap::new();
    let mut groups: Vec<(usize, Vec<AggSlot>)> = Vec::new();
    let mut key = Vec::with_capacity(plan.group_by.len());
    if plan.group_by.is_empty() {
        groups.push((usize::MAX, fresh.clone()));
    }
    for i in 0..count {
        guard.tick()?;
        let t = tuple(i);
        let g = if plan.group_by.is_empty() {
            0
        } else {
            key.clear();
            key.extend(plan.group_by.iter().map(|s| group_key(ctx.datum(t, *s))));
            match index.get(key.as_slice()) {
                Some(&g) => g,
                None => {
                    groups.push((i, fresh.clone()));
                    index.insert(key.clone(), groups.len() - 1);
                    groups.len() - 1
                }
            }
        };
        for (expr, acc) in plan.exprs.iter().zip(groups[g].1.iter_mut()) {
            if let (OutExpr::Agg { arg, .. }, Some((func, acc))) = (expr, acc) {
                acc.update(*func, arg.map(|s| ctx.datum(t, s)));
            }
        }
    }

    Ok(groups
        .into_iter()
        .map(|(first, accs)| {
            plan.exprs
                .iter()
                .zip(accs)
                .map(|(e, acc)| match (e, acc) {
                    (OutExpr::Column(s), _) if first != usize::MAX => ctx.datum(tuple(first), *s).to_value(),
                    (OutExpr::Column(_), _) => Value::Null,
                    (_, Some((func, acc))) => acc.finish(func),
                    (OutExpr::Agg { .. }, None) => unreachable!("aggregate slot has an accumulator"),
                })
                .collect()
        })
        .collect())
}

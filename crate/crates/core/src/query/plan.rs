use std::collections::BTreeSet;

use serde::Serialize;

use crate::domain::{ColumnType, SchemaCatalog, TableSchema, Value};
use crate::store::{literal_compatible, CmpOp, ColumnFilter, ScanPredicate};

use super::ast::*;
use super::QueryError;

/// A column of one source, addressed by its position in that source's scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Slot {
    pub source: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum BoundOperand {
    Column(Slot),
    Literal(Value),
}

#[derive(Debug, Clone)]
pub(crate) enum BoundPred {
    Compare { left: Slot, op: CmpOp, right: BoundOperand },
    Between { column: Slot, low: BoundOperand, high: BoundOperand },
    IsNull { column: Slot, negated: bool },
    And(Vec<BoundPred>),
    Or(Vec<BoundPred>),
}

impl BoundPred {
    fn sources(&self, out: &mut BTreeSet<usize>) {
        let operand = |o: &BoundOperand, out: &mut BTreeSet<usize>| {
            if let BoundOperand::Column(s) = o {
                out.insert(s.source);
            }
        };
        match self {
            BoundPred::Compare { left, right, .. } => {
                out.insert(left.source);
                operand(right, out);
            }
            BoundPred::Between { column, low, high } => {
                out.insert(column.source);
                operand(low, out);
                operand(high, out);
            }
            BoundPred::IsNull { column, .. } => {
                out.insert(column.source);
            }
            BoundPred::And(parts) | BoundPred::Or(parts) => parts.iter().for_each(|p| p.sources(out)),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SourcePlan {
    pub table: String,
    pub binding: String,
    pub schema: TableSchema,
    /// Columns to materialize, in slot order.
    pub columns: Vec<String>,
    pub pushdown: ScanPredicate,
    /// Predicates on this source alone that cannot run inside the scan.
    pub filters: Vec<BoundPred>,
}

/// How equality keys are hashed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum KeyKind {
    Int,
    Float,
    Text,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EqKey {
    /// Column of an already joined source.
    pub left: Slot,
    /// Column of the source being joined.
    pub right: Slot,
    pub kind: KeyKind,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IntervalKey {
    pub point: Slot,
    pub start: Slot,
    pub end: Slot,
    /// True when the point comes from the source being joined and the
    /// interval from the joined prefix.
    pub point_on_new: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct JoinStep {
    pub source: usize,
    pub keys: Vec<EqKey>,
    pub interval: Option<IntervalKey>,
    pub residual: Vec<BoundPred>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum OutExpr {
    Column(Slot),
    Agg { func: AggFunc, arg: Option<Slot> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultColumn {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

/// Join algorithm chosen for one JOIN clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinStrategy {
    Hash,
    Interval,
    NestedLoop,
}

/// A resolved, type-checked query ready to run against any snapshot with
/// the same catalog.
#[derive(Debug, Clone)]
pub struct Plan {
    pub(crate) sources: Vec<SourcePlan>,
    pub(crate) joins: Vec<JoinStep>,
    pub(crate) columns: Vec<ResultColumn>,
    /// Visible output expressions followed by hidden ORDER BY expressions.
    pub(crate) exprs: Vec<OutExpr>,
    pub(crate) grouped: bool,
    pub(crate) group_by: Vec<Slot>,
    pub(crate) order_by: Vec<(usize, bool)>,
    pub(crate) limit: Option<u64>,
}

impl Plan {
    pub fn columns(&self) -> &[ResultColumn] {
        &self.columns
    }

    pub fn join_strategies(&self) -> Vec<JoinStrategy> {
        self.joins
            .iter()
            .map(|j| {
                if j.interval.is_some() {
                    JoinStrategy::Interval
                } else if !j.keys.is_empty() {
                    JoinStrategy::Hash
                } else {
                    JoinStrategy::NestedLoop
                }
            })
            .collect()
    }

    /// Scan pushdowns per table binding, for diagnostics.
    pub fn pushdowns(&self) -> Vec<(String, ScanPredicate)> {
        self.sources
            .iter()
            .map(|s| (s.binding.clone(), s.pushdown.clone()))
            .collect()
    }
}

fn semantic<T>(msg: impl Into<String>) -> Result<T, QueryError> {
    Err(QueryError::Semantic(msg.into()))
}

struct Binder {
    sources: Vec<SourcePlan>,
}

impl Binder {
    fn slot_for(&mut self, source: usize, column: &str) -> Slot {
        let src = &mut self.sources[source];
        let canonical = src.schema.column(column).expect("checked column").name.clone();
        let idx = match src.columns.iter().position(|c| *c == canonical) {
            Some(i) => i,
            None => {
                src.columns.push(canonical);
                src.columns.len() - 1
            }
        };
        Slot { source, column: idx }
    }

    /// Resolves a column among the first `visible` sources.
    fn resolve(&mut self, col: &ColumnRef, visible: usize) -> Result<(Slot, ColumnType), QueryError> {
        let source = match &col.qualifier {
            Some(q) => {
                let Some(i) = self.sources.iter().position(|s| s.binding == *q) else {
                    return semantic(format!("unknown table or alias {q}"));
                };
                if i >= visible {
                    return semantic(format!("{q} is not joined yet at {col}"));
                }
                if self.sources[i].schema.column(&col.name).is_none() {
                    return semantic(format!("unknown column {col}"));
                }
                i
            }
            None => {
                let hits: Vec<usize> = (0..visible)
                    .filter(|&i| self.sources[i].schema.column(&col.name).is_some())
                    .collect();
                match hits.as_slice() {
                    [] => return semantic(format!("unknown column {}", col.name)),
                    [one] => *one,
                    _ => return semantic(format!("ambiguous column {}", col.name)),
                }
            }
        };
        let ty = self.sources[source].schema.column(&col.name).expect("checked").ty;
        Ok((self.slot_for(source, &col.name), ty))
    }

    fn operand(
        &mut self,
        o: &Operand,
        visible: usize,
        against: (ColumnType, &ColumnRef),
    ) -> Result<BoundOperand, QueryError> {
        let (ty, col) = against;
        match o {
            Operand::Column(c) => {
                let (slot, other) = self.resolve(c, visible)?;
                if !comparable(ty, other) {
                    return semantic(format!("type mismatch: cannot compare {col} ({ty}) with {c} ({other})"));
                }
                Ok(BoundOperand::Column(slot))
            }
            Operand::Literal(lit, _) => {
                let value = match lit {
                    Literal::Int(i) => Value::Int(*i),
                    Literal::Decimal(d) => Value::Decimal(*d),
                    Literal::Text(s) => Value::Text(s.clone()),
                };
                if !literal_compatible(ty, &value) {
                    return semantic(format!("type mismatch: cannot compare {col} ({ty}) with {lit}"));
                }
                Ok(BoundOperand::Literal(value))
            }
        }
    }

    fn comparison(&mut self, c: &Comparison, visible: usize) -> Result<BoundPred, QueryError> {
        Ok(match c {
            Comparison::Compare { left, op, right } => {
                let (slot, ty) = self.resolve(left, visible)?;
                BoundPred::Compare {
                    left: slot,
                    op: *op,
                    right: self.operand(right, visible, (ty, left))?,
                }
            }
            Comparison::Between { column, low, high } => {
                let (slot, ty) = self.resolve(column, visible)?;
                BoundPred::Between {
                    column: slot,
                    low: self.operand(low, visible, (ty, column))?,
                    high: self.operand(high, visible, (ty, column))?,
                }
            }
            Comparison::IsNull { column, negated } => BoundPred::IsNull {
                column: self.resolve(column, visible)?.0,
                negated: *negated,
            },
        })
    }

    fn predicate(&mut self, p: &Predicate, visible: usize) -> Result<BoundPred, QueryError> {
        Ok(match p {
            Predicate::Cmp(c) => self.comparison(c, visible)?,
            Predicate::And(parts) => BoundPred::And(
                parts
                    .iter()
                    .map(|x| self.predicate(x, visible))
                    .collect::<Result<_, _>>()?,
            ),
            Predicate::Or(parts) => BoundPred::Or(
                parts
                    .iter()
                    .map(|x| self.predicate(x, visible))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    /// Routes a single-source predicate into the scan when it has a
    /// column-versus-literal form, otherwise into the source's filters.
    fn attach_local(&mut self, source: usize, pred: BoundPred) {
        let src = &mut self.sources[source];
        let lit = |o: &BoundOperand| match o {
            BoundOperand::Literal(v) => Some(v.clone()),
            BoundOperand::Column(_) => None,
        };
        let filter = match &pred {
            BoundPred::Compare { left, op, right } => lit(right).map(|value| ColumnFilter::Compare {
                column: src.columns[left.column].clone(),
                op: *op,
                value,
            }),
            BoundPred::Between { column, low, high } => match (lit(low), lit(high)) {
                (Some(low), Some(high)) => Some(ColumnFilter::Between {
                    column: src.columns[column.column].clone(),
                    low,
                    high,
                }),
                _ => None,
            },
            BoundPred::IsNull { column, negated } => Some(ColumnFilter::IsNull {
                column: src.columns[column.column].clone(),
                negated: *negated,
            }),
            _ => None,
        };
        match filter {
            Some(f) => src.pushdown.conjuncts.push(f),
            None => src.filters.push(pred),
        }
    }
}

fn comparable(a: ColumnType, b: ColumnType) -> bool {
    (a == ColumnType::Text) == (b == ColumnType::Text)
}

fn is_integral(ty: ColumnType) -> bool {
    matches!(ty, ColumnType::Int64 | ColumnType::Timestamp)
}

fn key_kind(a: ColumnType, b: ColumnType) -> KeyKind {
    if a == ColumnType::Text {
        KeyKind::Text
    } else if a == ColumnType::Decimal64 || b == ColumnType::Decimal64 {
        KeyKind::Float
    } else {
        KeyKind::Int
    }
}

/// Resolves names and types and chooses join strategies.
pub fn plan(query: &Query, catalog: &SchemaCatalog) -> Result<Plan, QueryError> {
    let mut binder = Binder { sources: Vec::new() };
    for t in std::iter::once(&query.from).chain(query.joins.iter().map(|j| &j.table)) {
        let Some(schema) = catalog.get(&t.table) else {
            return semantic(format!("unknown table {}", t.table));
        };
        let binding = t.binding().to_string();
        if binder.sources.iter().any(|s| s.binding == binding) {
            return semantic(format!("duplicate table alias {binding}"));
        }
        binder.sources.push(SourcePlan {
            table: schema.name.clone(),
            binding,
            schema: schema.clone(),
            columns: Vec::new(),
            pushdown: ScanPredicate::default(),
            filters: Vec::new(),
        });
    }

    let mut joins = Vec::new();
    for (i, j) in query.joins.iter().enumerate() {
        let new = i + 1;
        let mut step = JoinStep {
            source: new,
            keys: Vec::new(),
            interval: None,
            residual: Vec::new(),
        };
        for c in &j.on {
            classify_on(&mut binder, c, new, &mut step)?;
        }
        joins.push(step);
    }

    if let Some(filter) = &query.filter {
        for conjunct in filter.conjuncts() {
            let bound = binder.predicate(conjunct, binder.sources.len())?;
            let mut sources = BTreeSet::new();
            bound.sources(&mut sources);
            let last = *sources.last().expect("predicates reference a column");
            if sources.len() == 1 {
                binder.attach_local(last, bound);
            } else {
                joins[last - 1].residual.push(bound);
            }
        }
    }

    let grouped = query.has_aggregates() || !query.group_by.is_empty();
    let visible_all = binder.sources.len();
    let mut group_by = Vec::new();
    for c in &query.group_by {
        group_by.push(binder.resolve(c, visible_all)?.0);
    }

    let mut columns = Vec::new();
    let mut exprs = Vec::new();
    let mut select_exprs: Vec<Option<&Expr>> = Vec::new();
    let mut aliases: Vec<Option<String>> = Vec::new();
    match &query.projection {
        Projection::All(_) => {
            for s in 0..visible_all {
                let names: Vec<String> = binder.sources[s].schema.columns.iter().map(|c| c.name.clone()).collect();
                for name in names {
                    let col = ColumnRef {
                        qualifier: Some(binder.sources[s].binding.clone()),
                        name: name.clone(),
                        span: Span::default(),
                    };
                    let (slot, ty) = binder.resolve(&col, visible_all)?;
                    if grouped && !group_by.contains(&slot) {
                        return semantic(format!("column {col} must appear in GROUP BY"));
                    }
                    columns.push(ResultColumn { name, ty });
                    exprs.push(OutExpr::Column(slot));
                    select_exprs.push(None);
                    aliases.push(None);
                }
            }
        }
        Projection::Items(items) => {
            for item in items {
                let (expr, ty) = bind_expr(&mut binder, &item.expr, grouped, &group_by)?;
                let name = item.alias.clone().unwrap_or_else(|| match &item.expr {
                    Expr::Column(c) => c.name.clone(),
                    Expr::Agg(a) => a.to_string(),
                });
                columns.push(ResultColumn { name, ty });
                exprs.push(expr);
                select_exprs.push(Some(&item.expr));
                aliases.push(item.alias.clone());
            }
        }
    }

    let mut order_by = Vec::new();
    for o in &query.order_by {
        let by_alias = match &o.expr {
            Expr::Column(ColumnRef {
                qualifier: None, name, ..
            }) => aliases.iter().position(|a| a.as_deref() == Some(name.as_str())),
            _ => None,
        };
        let idx = match by_alias.or_else(|| select_exprs.iter().position(|e| *e == Some(&o.expr))) {
            Some(i) => i,
            None => {
                let (expr, _) = bind_expr(&mut binder, &o.expr, grouped, &group_by)?;
                exprs.push(expr);
                exprs.len() - 1
            }
        };
        order_by.push((idx, o.descending));
    }

    Ok(Plan {
        sources: binder.sources,
        joins,
        columns,
        exprs,
        grouped,
        group_by,
        order_by,
        limit: query.limit,
    })
}

fn bind_expr(
    binder: &mut Binder,
    expr: &Expr,
    grouped: bool,
    group_by: &[Slot],
) -> Result<(OutExpr, ColumnType), QueryError> {
    let visible = binder.sources.len();
    match expr {
        Expr::Column(c) => {
            let (slot, ty) = binder.resolve(c, visible)?;
            if grouped && !group_by.contains(&slot) {
                return semantic(format!("column {c} must appear in GROUP BY or inside an aggregate"));
            }
            Ok((OutExpr::Column(slot), ty))
        }
        Expr::Agg(a) => {
            let arg = match &a.arg {
                AggArg::Star if a.func == AggFunc::Count => None,
                AggArg::Star => return semantic(format!("{}(*) is not supported", a.func.as_str())),
                AggArg::Column(c) => Some(binder.resolve(c, visible)?),
            };
            let ty = match (a.func, arg) {
                (AggFunc::Count, _) => ColumnType::Int64,
                (AggFunc::Avg, Some((_, ty))) if ty.is_numeric() => ColumnType::Decimal64,
                (AggFunc::Sum, Some((_, ty))) if ty.is_numeric() => ty,
                (AggFunc::Min | AggFunc::Max, Some((_, ty))) => ty,
                (f, Some((_, ty))) => {
                    return semantic(format!("type mismatch: {} requires a numeric column, got {ty}", f.as_str()))
                }
                (_, None) => unreachable!("star handled above"),
            };
            Ok((
                OutExpr::Agg {
                    func: a.func,
                    arg: arg.map(|(s, _)| s),
                },
                ty,
            ))
        }
    }
}

fn classify_on(binder: &mut Binder, c: &Comparison, new: usize, step: &mut JoinStep) -> Result<(), QueryError> {
    let visible = new + 1;
    let bound = binder.comparison(c, visible)?;
    let mut sources = BTreeSet::new();
    bound.sources(&mut sources);
    if sources.len() == 1 && sources.contains(&new) {
        binder.attach_local(new, bound);
        return Ok(());
    }
    let ty_of = |b: &Binder, s: Slot| {
        let src = &b.sources[s.source];
        src.schema.column(&src.columns[s.column]).expect("bound").ty
    };
    match &bound {
        BoundPred::Compare {
            left,
            op: CmpOp::Eq,
            right: BoundOperand::Column(right),
        } if (left.source == new) != (right.source == new) => {
            let (old, fresh) = if left.source == new { (*right, *left) } else { (*left, *right) };
            let kind = key_kind(ty_of(binder, old), ty_of(binder, fresh));
            step.keys.push(EqKey {
                left: old,
                right: fresh,
                kind,
            });
            return Ok(());
        }
        BoundPred::Between {
            column,
            low: BoundOperand::Column(start),
            high: BoundOperand::Column(end),
        } if step.interval.is_none()
            && [*column, *start, *end].iter().all(|s| is_integral(ty_of(binder, *s))) =>
        {
            let point_new = column.source == new;
            let bounds_new = (start.source == new, end.source == new);
            let usable = matches!((point_new, bounds_new), (true, (false, false)) | (false, (true, true)));
            if usable {
                step.interval = Some(IntervalKey {
                    point: *column,
                    start: *start,
                    end: *end,
                    point_on_new: point_new,
                });
                return Ok(());
            }
        }
        _ => {}
    }
    step.residual.push(bound);
    Ok(())
}

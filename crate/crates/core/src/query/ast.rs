use std::fmt;

use serde::Serialize;

use crate::store::CmpOp;

/// Byte offset of a node in the source text. Offsets are diagnostics only,
/// so two spans always compare equal; this keeps structural AST equality
/// independent of formatting.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Span(pub usize);

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
    pub span: Span,
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AggFunc {
    Avg,
    Sum,
    Min,
    Max,
    Count,
}

impl AggFunc {
    pub fn from_name(name: &str) -> Option<AggFunc> {
        Some(match name {
            "AVG" => AggFunc::Avg,
            "SUM" => AggFunc::Sum,
            "MIN" => AggFunc::Min,
            "MAX" => AggFunc::Max,
            "COUNT" => AggFunc::Count,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AggFunc::Avg => "AVG",
            AggFunc::Sum => "SUM",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::Count => "COUNT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AggArg {
    Star,
    Column(ColumnRef),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggCall {
    pub func: AggFunc,
    pub arg: AggArg,
    pub span: Span,
}

impl fmt::Display for AggCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.arg {
            AggArg::Star => write!(f, "{}(*)", self.func.as_str()),
            AggArg::Column(c) => write!(f, "{}({c})", self.func.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Column(ColumnRef),
    Agg(AggCall),
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Column(c) => c.span,
            Expr::Agg(a) => a.span,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => c.fmt(f),
            Expr::Agg(a) => a.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Projection {
    /// `SELECT *`: every column of every table, in join order.
    All(Span),
    Items(Vec<SelectItem>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRef {
    pub table: String,
    pub alias: Option<String>,
    pub span: Span,
}

impl TableRef {
    /// Name by which columns of this table are qualified.
    pub fn binding(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.table)
    }
}

impl fmt::Display for TableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.alias {
            Some(a) => write!(f, "{} {a}", self.table),
            None => f.write_str(&self.table),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Literal {
    Int(i64),
    Decimal(f64),
    Text(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Decimal(d) if d.fract() == 0.0 => write!(f, "{d:.1}"),
            Literal::Decimal(d) => write!(f, "{d}"),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Operand {
    Column(ColumnRef),
    Literal(Literal, Span),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column(c) => c.fmt(f),
            Operand::Literal(l, _) => l.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Comparison {
    Compare {
        left: ColumnRef,
        op: CmpOp,
        right: Operand,
    },
    Between {
        column: ColumnRef,
        low: Operand,
        high: Operand,
    },
    IsNull {
        column: ColumnRef,
        negated: bool,
    },
}

impl Comparison {
    pub fn columns(&self) -> Vec<&ColumnRef> {
        fn operand(o: &Operand) -> Option<&ColumnRef> {
            match o {
                Operand::Column(c) => Some(c),
                Operand::Literal(..) => None,
            }
        }
        match self {
            Comparison::Compare { left, right, .. } => std::iter::once(left).chain(operand(right)).collect(),
            Comparison::Between { column, low, high } => std::iter::once(column)
                .chain(operand(low))
                .chain(operand(high))
                .collect(),
            Comparison::IsNull { column, .. } => vec![column],
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparison::Compare { left, op, right } => write!(f, "{left} {op} {right}"),
            Comparison::Between { column, low, high } => write!(f, "{column} BETWEEN {low} AND {high}"),
            Comparison::IsNull { column, negated: false } => write!(f, "{column} IS NULL"),
            Comparison::IsNull { column, negated: true } => write!(f, "{column} IS NOT NULL"),
        }
    }
}

/// Boolean predicate tree. `And`/`Or` hold two or more children.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Predicate {
    Cmp(Comparison),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&Predicate> {
        match self {
            Predicate::And(parts) => parts.iter().collect(),
            other => vec![other],
        }
    }

    pub fn columns(&self) -> Vec<&ColumnRef> {
        match self {
            Predicate::Cmp(c) => c.columns(),
            Predicate::And(parts) | Predicate::Or(parts) => parts.iter().flat_map(Predicate::columns).collect(),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (parts, sep) = match self {
            Predicate::Cmp(c) => return c.fmt(f),
            Predicate::And(parts) => (parts, " AND "),
            Predicate::Or(parts) => (parts, " OR "),
        };
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            match p {
                Predicate::Cmp(c) => c.fmt(f)?,
                nested => write!(f, "({nested})")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Join {
    pub table: TableRef,
    /// Conjunction of comparisons.
    pub on: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderItem {
    pub expr: Expr,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Query {
    pub projection: Projection,
    pub from: TableRef,
    pub joins: Vec<Join>,
    pub filter: Option<Predicate>,
    pub group_by: Vec<ColumnRef>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
}

impl Query {
    pub fn has_aggregates(&self) -> bool {
        let in_select = match &self.projection {
            Projection::All(_) => false,
            Projection::Items(items) => items.iter().any(|i| matches!(i.expr, Expr::Agg(_))),
        };
        in_select || self.order_by.iter().any(|o| matches!(o.expr, Expr::Agg(_)))
    }
}

/// Canonical SQL text; parsing it yields a structurally equal query.
impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        match &self.projection {
            Projection::All(_) => f.write_str("*")?,
            Projection::Items(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", item.expr)?;
                    if let Some(a) = &item.alias {
                        write!(f, " AS {a}")?;
                    }
                }
            }
        }
        write!(f, " FROM {}", self.from)?;
        for j in &self.joins {
            write!(f, " JOIN {} ON ", j.table)?;
            for (i, c) in j.on.iter().enumerate() {
                if i > 0 {
                    f.write_str(" AND ")?;
                }
                c.fmt(f)?;
            }
        }
        if let Some(p) = &self.filter {
            write!(f, " WHERE {p}")?;
        }
        if !self.group_by.is_empty() {
            f.write_str(" GROUP BY ")?;
            for (i, c) in self.group_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                c.fmt(f)?;
            }
        }
        if !self.order_by.is_empty() {
            f.write_str(" ORDER BY ")?;
            for (i, o) in self.order_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}{}", o.expr, if o.descending { " DESC" } else { "" })?;
            }
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}

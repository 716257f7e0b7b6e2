use super::ast::*;
use super::lexer::{tokenize, Keyword, Token, TokenKind};
use super::QueryError;

/// Parses one SELECT statement. Keywords and identifiers are
/// case-insensitive; identifiers come back upper-cased.
pub fn parse(sql: &str) -> Result<Query, QueryError> {
    let tokens = tokenize(sql)?;
    let mut p = Parser { tokens, pos: 0 };
    let query = p.query()?;
    if p.peek() == &TokenKind::Semicolon {
        p.pos += 1;
    }
    p.expect_eof()?;
    Ok(query)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, ahead: usize) -> &TokenKind {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, QueryError> {
        Err(QueryError::syntax(
            format!("expected {expected}, found {}", self.peek().describe()),
            self.offset(),
        ))
    }

    fn at_keyword(&self, k: Keyword) -> bool {
        self.peek() == &TokenKind::Keyword(k)
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        if self.at_keyword(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, k: Keyword) -> Result<(), QueryError> {
        if self.eat_keyword(k) {
            Ok(())
        } else {
            self.error(k.as_str())
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), QueryError> {
        if self.peek() == &kind {
            self.pos += 1;
            Ok(())
        } else {
            self.error(&kind.describe())
        }
    }

    fn expect_eof(&self) -> Result<(), QueryError> {
        if self.peek() == &TokenKind::Eof {
            Ok(())
        } else {
            self.error("end of input")
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), QueryError> {
        match self.peek().clone() {
            TokenKind::Ident(s) => {
                let span = Span(self.offset());
                self.pos += 1;
                Ok((s, span))
            }
            _ => self.error(what),
        }
    }

    fn query(&mut self) -> Result<Query, QueryError> {
        self.expect_keyword(Keyword::Select)?;
        let projection = if self.peek() == &TokenKind::Star {
            let span = Span(self.offset());
            self.pos += 1;
            Projection::All(span)
        } else {
            let mut items = vec![self.select_item()?];
            while self.peek() == &TokenKind::Comma {
                self.pos += 1;
                items.push(self.select_item()?);
            }
            Projection::Items(items)
        };
        self.expect_keyword(Keyword::From)?;
        let from = self.table_ref()?;
        let mut joins = Vec::new();
        while self.eat_keyword(Keyword::Join) {
            let table = self.table_ref()?;
            self.expect_keyword(Keyword::On)?;
            let mut on = vec![self.comparison()?];
            while self.eat_keyword(Keyword::And) {
                on.push(self.comparison()?);
            }
            joins.push(Join { table, on });
        }
        let filter = if self.eat_keyword(Keyword::Where) {
            Some(self.disjunction()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword(Keyword::Group) {
            self.expect_keyword(Keyword::By)?;
            group_by.push(self.column()?);
            while self.peek() == &TokenKind::Comma {
                self.pos += 1;
                group_by.push(self.column()?);
            }
        }
        let mut order_by = Vec::new();
        if self.eat_keyword(Keyword::Order) {
            self.expect_keyword(Keyword::By)?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_keyword(Keyword::Desc) {
                    true
                } else {
                    self.eat_keyword(Keyword::Asc);
                    false
                };
                order_by.push(OrderItem { expr, descending });
                if self.peek() != &TokenKind::Comma {
                    break;
                }
                self.pos += 1;
            }
        }
        let limit = if self.eat_keyword(Keyword::Limit) {
            match self.peek().clone() {
                TokenKind::Number(n) if !n.contains('.') => {
                    let at = self.offset();
                    self.pos += 1;
                    Some(
                        n.parse::<u64>()
                            .map_err(|_| QueryError::syntax("LIMIT out of range", at))?,
                    )
                }
                _ => return self.error("non-negative integer"),
            }
        } else {
            None
        };
        Ok(Query {
            projection,
            from,
            joins,
            filter,
            group_by,
            order_by,
            limit,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, QueryError> {
        let expr = self.expr()?;
        let alias = if self.eat_keyword(Keyword::As) {
            Some(self.ident("alias")?.0)
        } else {
            None
        };
        Ok(SelectItem { expr, alias })
    }

    /// Aggregate call or column reference.
    fn expr(&mut self) -> Result<Expr, QueryError> {
        if let TokenKind::Ident(name) = self.peek() {
            if let (Some(func), TokenKind::LParen) = (AggFunc::from_name(name), self.peek_at(1)) {
                let span = Span(self.offset());
                self.pos += 2;
                let arg = if self.peek() == &TokenKind::Star {
                    self.pos += 1;
                    AggArg::Star
                } else {
                    AggArg::Column(self.column()?)
                };
                self.expect(TokenKind::RParen)?;
                return Ok(Expr::Agg(AggCall { func, arg, span }));
            }
        }
        Ok(Expr::Column(self.column()?))
    }

    fn column(&mut self) -> Result<ColumnRef, QueryError> {
        let (first, span) = self.ident("column name")?;
        if self.peek() == &TokenKind::Dot {
            self.pos += 1;
            let (name, _) = self.ident("column name")?;
            Ok(ColumnRef {
                qualifier: Some(first),
                name,
                span,
            })
        } else {
            Ok(ColumnRef {
                qualifier: None,
                name: first,
                span,
            })
        }
    }

    fn table_ref(&mut self) -> Result<TableRef, QueryError> {
        let (table, span) = self.ident("table name")?;
        let alias = if self.eat_keyword(Keyword::As) {
            Some(self.ident("table alias")?.0)
        } else if let TokenKind::Ident(a) = self.peek().clone() {
            self.pos += 1;
            Some(a)
        } else {
            None
        };
        Ok(TableRef { table, alias, span })
    }

    fn disjunction(&mut self) -> Result<Predicate, QueryError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat_keyword(Keyword::Or) {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Predicate::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<Predicate, QueryError> {
        let mut parts = vec![self.term()?];
        while self.eat_keyword(Keyword::And) {
            parts.push(self.term()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Predicate::And(parts)
        })
    }

    fn term(&mut self) -> Result<Predicate, QueryError> {
        if self.peek() == &TokenKind::LParen {
            self.pos += 1;
            let inner = self.disjunction()?;
            self.expect(TokenKind::RParen)?;
            Ok(inner)
        } else {
            Ok(Predicate::Cmp(self.comparison()?))
        }
    }

    fn comparison(&mut self) -> Result<Comparison, QueryError> {
        let column = self.column()?;
        match self.peek().clone() {
            TokenKind::Op(op) => {
                self.pos += 1;
                let right = self.operand()?;
                Ok(Comparison::Compare {
                    left: column,
                    op,
                    right,
                })
            }
            TokenKind::Keyword(Keyword::Between) => {
                self.pos += 1;
                let low = self.operand()?;
                self.expect_keyword(Keyword::And)?;
                let high = self.operand()?;
                Ok(Comparison::Between { column, low, high })
            }
            TokenKind::Keyword(Keyword::Is) => {
                self.pos += 1;
                let negated = self.eat_keyword(Keyword::Not);
                self.expect_keyword(Keyword::Null)?;
                Ok(Comparison::IsNull { column, negated })
            }
            _ => self.error("comparison operator, BETWEEN or IS"),
        }
    }

    fn operand(&mut self) -> Result<Operand, QueryError> {
        let start = self.offset();
        match self.peek().clone() {
            TokenKind::Str(s) => {
                self.pos += 1;
                Ok(Operand::Literal(Literal::Text(s), Span(start)))
            }
            TokenKind::Number(_) => Ok(Operand::Literal(self.number(false)?, Span(start))),
            TokenKind::Minus => {
                self.pos += 1;
                if !matches!(self.peek(), TokenKind::Number(_)) {
                    return self.error("number");
                }
                Ok(Operand::Literal(self.number(true)?, Span(start)))
            }
            TokenKind::Ident(_) => Ok(Operand::Column(self.column()?)),
            _ => self.error("literal or column"),
        }
    }

    fn number(&mut self, negative: bool) -> Result<Literal, QueryError> {
        let at = self.offset();
        let TokenKind::Number(text) = self.advance().kind else {
            unreachable!("caller checked for a number");
        };
        let signed = if negative { format!("-{text}") } else { text };
        if signed.contains('.') {
            signed
                .parse::<f64>()
                .map(Literal::Decimal)
                .map_err(|_| QueryError::syntax("invalid decimal literal", at))
        } else {
            signed
                .parse::<i64>()
                .map(Literal::Int)
                .map_err(|_| QueryError::syntax("integer literal out of range", at))
        }
    }
}

use crate::store::CmpOp;

use super::QueryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Select,
    From,
    Join,
    On,
    Where,
    Group,
    Order,
    By,
    Limit,
    As,
    And,
    Or,
    Between,
    Is,
    Not,
    Null,
    Asc,
    Desc,
}

impl Keyword {
    fn from_upper(word: &str) -> Option<Keyword> {
        Some(match word {
            "SELECT" => Keyword::Select,
            "FROM" => Keyword::From,
            "JOIN" => Keyword::Join,
            "ON" => Keyword::On,
            "WHERE" => Keyword::Where,
            "GROUP" => Keyword::Group,
            "ORDER" => Keyword::Order,
            "BY" => Keyword::By,
            "LIMIT" => Keyword::Limit,
            "AS" => Keyword::As,
            "AND" => Keyword::And,
            "OR" => Keyword::Or,
            "BETWEEN" => Keyword::Between,
            "IS" => Keyword::Is,
            "NOT" => Keyword::Not,
            "NULL" => Keyword::Null,
            "ASC" => Keyword::Asc,
            "DESC" => Keyword::Desc,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Select => "SELECT",
            Keyword::From => "FROM",
            Keyword::Join => "JOIN",
            Keyword::On => "ON",
            Keyword::Where => "WHERE",
            Keyword::Group => "GROUP",
            Keyword::Order => "ORDER",
            Keyword::By => "BY",
            Keyword::Limit => "LIMIT",
            Keyword::As => "AS",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Between => "BETWEEN",
            Keyword::Is => "IS",
            Keyword::Not => "NOT",
            Keyword::Null => "NULL",
            Keyword::Asc => "ASC",
            Keyword::Desc => "DESC",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    /// Upper-cased identifier.
    Ident(String),
    /// Unsigned numeric literal as written.
    Number(String),
    Str(String),
    Op(CmpOp),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Minus,
    Semicolon,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => k.as_str().to_string(),
            TokenKind::Ident(s) => format!("identifier {s}"),
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::Op(op) => format!("'{op}'"),
            TokenKind::Comma => "','".to_string(),
            TokenKind::Dot => "'.'".to_string(),
            TokenKind::LParen => "'('".to_string(),
            TokenKind::RParen => "')'".to_string(),
            TokenKind::Star => "'*'".to_string(),
            TokenKind::Minus => "'-'".to_string(),
            TokenKind::Semicolon => "';'".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the token's first character.
    pub offset: usize,
}

pub fn tokenize(sql: &str) -> Result<Vec<Token>, QueryError> {
    let bytes = sql.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let kind = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = sql[start..i].to_ascii_uppercase();
            match Keyword::from_upper(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word),
            }
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if bytes.get(i) == Some(&b'.') {
                i += 1;
                let frac = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == frac {
                    return Err(QueryError::syntax("expected digits after decimal point", i));
                }
            }
            if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                return Err(QueryError::syntax("malformed number", start));
            }
            TokenKind::Number(sql[start..i].to_string())
        } else if c == b'\'' {
            let mut text = String::new();
            i += 1;
            loop {
                match sql[i..].find('\'') {
                    None => return Err(QueryError::syntax("unterminated string literal", start)),
                    Some(rel) => {
                        text.push_str(&sql[i..i + rel]);
                        i += rel + 1;
                        if bytes.get(i) == Some(&b'\'') {
                            text.push('\'');
                            i += 1;
                        } else {
                            break;
                        }
                    }
                }
            }
            TokenKind::Str(text)
        } else {
            i += 1;
            match c {
                b',' => TokenKind::Comma,
                b'.' => TokenKind::Dot,
                b'(' => TokenKind::LParen,
                b')' => TokenKind::RParen,
                b'*' => TokenKind::Star,
                b'-' => TokenKind::Minus,
                b';' => TokenKind::Semicolon,
                b'=' => TokenKind::Op(CmpOp::Eq),
                b'<' => match bytes.get(i) {
                    Some(b'=') => {
                        i += 1;
                        TokenKind::Op(CmpOp::LtEq)
                    }
                    Some(b'>') => {
                        i += 1;
                        TokenKind::Op(CmpOp::NotEq)
                    }
                    _ => TokenKind::Op(CmpOp::Lt),
                },
                b'>' => {
                    if bytes.get(i) == Some(&b'=') {
                        i += 1;
                        TokenKind::Op(CmpOp::GtEq)
                    } else {
                        TokenKind::Op(CmpOp::Gt)
                    }
                }
                b'!' if bytes.get(i) == Some(&b'=') => {
                    i += 1;
                    TokenKind::Op(CmpOp::NotEq)
                }
                _ => {
                    let ch = sql[start..].chars().next().expect("non-empty");
                    return Err(QueryError::syntax(format!("unexpected character {ch:?}"), start));
                }
            }
        };
        tokens.push(Token { kind, offset: start });
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        offset: sql.len(),
    });
    Ok(tokens)
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{QueryError, QueryErrorKind, RecordType};
use crate::nerlab::{ASSEMBLY_CATEGORIES, SYNTHESIS_CATEGORIES};

/// One `((v1 OR v2). FIELD)` clause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldClause {
    /// Upper-case field name as written (`METHOD` and `METH` are kept apart).
    pub field: String,
    pub values: Vec<String>,
}

/// Clauses joined by AND.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryAst {
    pub clauses: Vec<FieldClause>,
}

/// Every accepted field name, sorted.
pub fn valid_fields() -> Vec<&'static str> {
    let mut v: Vec<&str> = SYNTHESIS_CATEGORIES.iter().chain(ASSEMBLY_CATEGORIES.iter()).copied().collect();
    v.extend(["METHOD", "TYPE"]);
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Dot,
    Quoted(String),
    Word(String),
}

fn quote_family(c: char) -> Option<u8> {
    match c {
        '\'' | '‘' | '’' => Some(1),
        '"' | '“' | '”' => Some(2),
        _ => None,
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, QueryError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some((at, c)) = it.next() {
        match c {
            c if c.is_whitespace() => {}
            '(' => out.push((at, Tok::Open)),
            ')' => out.push((at, Tok::Close)),
            '.' => out.push((at, Tok::Dot)),
            c if quote_family(c).is_some() => {
                let family = quote_family(c);
                let mut value = String::new();
                let mut closed = false;
                for (_, d) in it.by_ref() {
                    if quote_family(d) == family {
                        closed = true;
                        break;
                    }
                    value.push(d);
                }
                if !closed {
                    return Err(QueryError::new(QueryErrorKind::UnterminatedQuote, at, "unterminated quoted value"));
                }
                out.push((at, Tok::Quoted(value)));
            }
            c if c.is_alphanumeric() || c == '_' || c == '-' => {
                let mut word = String::from(c);
                while let Some(&(_, d)) = it.peek() {
                    if d.is_alphanumeric() || d == '_' || d == '-' {
                        word.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((at, Tok::Word(word)));
            }
            other => {
                return Err(QueryError::new(QueryErrorKind::Syntax, at, format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.text.len(), |t| t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn error(&self, kind: QueryErrorKind, msg: impl Into<String>) -> QueryError {
        QueryError::new(kind, self.offset(), msg)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), QueryError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            None if matches!(want, Tok::Close) => Err(self.error(QueryErrorKind::Unbalanced, format!("missing {what}"))),
            None => Err(self.error(QueryErrorKind::Syntax, format!("expected {what}, found end of query"))),
            Some(Tok::Close) if matches!(want, Tok::Open | Tok::Dot) => {
                Err(self.error(QueryErrorKind::Unbalanced, format!("unexpected `)`, expected {what}")))
            }
            Some(t) => Err(self.error(QueryErrorKind::Syntax, format!("expected {what}, found {}", describe(t)))),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn value(&mut self) -> Result<(usize, String), QueryError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Quoted(v)) => {
                self.pos += 1;
                let v = v.split_whitespace().collect::<Vec<_>>().join(" ");
                if v.is_empty() {
                    return Err(QueryError::new(QueryErrorKind::EmptyValue, at, "empty value"));
                }
                Ok((at, v))
            }
            Some(t) => Err(self.error(QueryErrorKind::Syntax, format!("expected a quoted value, found {}", describe(&t)))),
            None => Err(self.error(QueryErrorKind::Syntax, "expected a quoted value, found end of query")),
        }
    }

    fn clause(&mut self) -> Result<FieldClause, QueryError> {
        self.expect(Tok::Open, "`((`")?;
        self.expect(Tok::Open, "`((`")?;
        let mut values = vec![self.value()?];
        while self.keyword("OR") {
            values.push(self.value()?);
        }
        self.expect(Tok::Close, "`)` after the value list")?;
        self.expect(Tok::Dot, "`.` before the field name")?;
        let field_at = self.offset();
        let field = match self.peek().cloned() {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                w.to_ascii_uppercase()
            }
            Some(t) => return Err(self.error(QueryErrorKind::Syntax, format!("expected a field name, found {}", describe(&t)))),
            None => return Err(self.error(QueryErrorKind::Syntax, "expected a field name, found end of query")),
        };
        let fields = valid_fields();
        if !fields.contains(&field.as_str()) {
            return Err(QueryError::new(
                QueryErrorKind::UnknownField,
                field_at,
                format!("unknown field `{field}`; valid fields: {}", fields.join(", ")),
            ));
        }
        if field == "TYPE" {
            for (at, v) in &values {
                if v.parse::<RecordType>().is_err() {
                    return Err(QueryError::new(
                        QueryErrorKind::InvalidType,
                        *at,
                        format!("unknown TYPE `{v}`; expected one of {}", RecordType::ALL.map(|t| t.as_str()).join(", ")),
                    ));
                }
            }
        }
        if matches!(self.peek(), Some(Tok::Dot)) {
            self.pos += 1;
        }
        self.expect(Tok::Close, "`)` closing the clause")?;
        Ok(FieldClause { field, values: values.into_iter().map(|(_, v)| v).collect() })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Open => "`(`".into(),
        Tok::Close => "`)`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Quoted(v) => format!("value `{v}`"),
        Tok::Word(w) => format!("`{w}`"),
    }
}

/// Parses `((‘v’ OR ‘w’). FIELD.) AND ...`. Field names and keywords are
/// case-insensitive, typographic quotes are accepted, and the dot after the
/// field name is optional. Error offsets are byte offsets into `text`.
pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, text };
    if p.peek().is_none() {
        return Err(p.error(QueryErrorKind::Syntax, "empty query"));
    }
    let mut clauses = vec![p.clause()?];
    while p.peek().is_some() {
        if matches!(p.peek(), Some(Tok::Close)) {
            return Err(p.error(QueryErrorKind::Unbalanced, "unmatched `)`"));
        }
        if !p.keyword("AND") {
            let found = describe(p.peek().expect("checked above"));
            return Err(p.error(QueryErrorKind::Syntax, format!("expected AND between clauses, found {found}")));
        }
        clauses.push(p.clause()?);
    }
    Ok(QueryAst { clauses })
}

fn quote(v: &str) -> String {
    if v.chars().any(|c| quote_family(c) == Some(1)) {
        format!("\"{v}\"")
    } else {
        format!("'{v}'")
    }
}

impl fmt::Display for FieldClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<String> = self.values.iter().map(|v| quote(v)).collect();
        write!(f, "(({}). {})", values.join(" OR "), self.field)
    }
}

/// Canonical ASCII serialization; parses back to the same AST.
pub fn unparse(ast: &QueryAst) -> String {
    ast.clauses.iter().map(ToString::to_string).collect::<Vec<_>>().join(" AND ")
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&unparse(self))
    }
}

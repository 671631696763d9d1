//! Field query language and the recipe index it runs against.

mod index;
mod parse;

use std::fmt;

use serde::Serialize;

pub use index::{build_index, field_key, IndexedRecord, QueryHit, QueryResults, RecipeIndex, RecordBody, RecordType};
pub use parse::{parse_query, unparse, valid_fields, FieldClause, QueryAst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryErrorKind {
    Syntax,
    Unbalanced,
    UnterminatedQuote,
    EmptyValue,
    UnknownField,
    InvalidType,
}

/// A parse failure at a byte offset into the query text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryError {
    pub kind: QueryErrorKind,
    pub offset: usize,
    pub message: String,
}

impl QueryError {
    fn new(kind: QueryErrorKind, offset: usize, message: impl Into<String>) -> Self {
        QueryError { kind, offset, message: message.into() }
    }
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "query error at byte {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for QueryError {}

/// Parses and runs a query in one step.
pub fn search(index: &RecipeIndex, text: &str) -> Result<QueryResults, QueryError> {
    Ok(index.execute(&parse_query(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG7: &str = "((‘sucrose’). PREC.) AND ((‘solid state’). METHOD) AND ((‘end-to-end’). TYPE)";

    #[test]
    fn reference_query_has_three_clauses() {
        let ast = parse_query(FIG7).unwrap();
        let got: Vec<(&str, Vec<&str>)> =
            ast.clauses.iter().map(|c| (c.field.as_str(), c.values.iter().map(String::as_str).collect())).collect();
        assert_eq!(
            got,
            [("PREC", vec!["sucrose"]), ("METHOD", vec!["solid state"]), ("TYPE", vec!["end-to-end"])]
        );
    }

    #[test]
    fn or_values() {
        let ast = parse_query("((‘LiOH’ OR ‘Li2CO3’). PREC)").unwrap();
        assert_eq!(ast.clauses.len(), 1);
        assert_eq!(ast.clauses[0].values, ["LiOH", "Li2CO3"]);
    }

    #[test]
    fn unknown_field_lists_valid_ones() {
        let e = parse_query("((‘x’). BOGUS)").unwrap_err();
        assert_eq!(e.kind, QueryErrorKind::UnknownField);
        assert_eq!(e.offset, "((‘x’). ".len());
        assert!(e.message.contains("PREC") && e.message.contains("METHOD"));
    }

    #[test]
    fn offsets_are_bytes() {
        let e = parse_query("((‘x). PREC)").unwrap_err();
        assert_eq!(e.kind, QueryErrorKind::UnterminatedQuote);
        assert_eq!(e.offset, 2);
        let e = parse_query("((''). PREC)").unwrap_err();
        assert_eq!(e.kind, QueryErrorKind::EmptyValue);
        let e = parse_query("(('x'). PREC").unwrap_err();
        assert_eq!((e.kind, e.offset), (QueryErrorKind::Unbalanced, 12));
        let e = parse_query("(('x'). PREC))").unwrap_err();
        assert_eq!((e.kind, e.offset), (QueryErrorKind::Unbalanced, 13));
        let e = parse_query("(('x'). TYPE)").unwrap_err();
        assert_eq!((e.kind, e.offset), (QueryErrorKind::InvalidType, 2));
    }

    #[test]
    fn unparse_is_canonical() {
        let ast = parse_query(FIG7).unwrap();
        let text = unparse(&ast);
        assert_eq!(text, "(('sucrose'). PREC) AND (('solid state'). METHOD) AND (('end-to-end'). TYPE)");
        assert_eq!(parse_query(&text).unwrap(), ast);
    }
}

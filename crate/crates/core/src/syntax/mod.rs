//! Lexing, parsing and the JSON codec.

mod json;
mod lexer;
mod parser;

use std::fmt;

use crate::ast::Span;

pub use json::{
    decode_json, encode_json, encode_json_pretty, expr_to_value, program_to_value, type_to_value,
    value_to_expr, value_to_type, SCHEMA_VERSION,
};
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use parser::{parse_expr, parse_program, parse_program_in, parse_type, Mode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub message: String,
    pub span: Span,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: Span) -> ParseError {
        ParseError {
            message: message.into(),
            span,
            expected: Vec::new(),
        }
    }

    pub fn expecting(mut self, expected: &[&str]) -> ParseError {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Same shape as a type error object, with rule `"Parse"`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rule": "Parse",
            "message": self.message,
            "span": {
                "line": self.span.line,
                "column": self.span.column,
                "start": self.span.start,
                "end": self.span.end,
            },
        })
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

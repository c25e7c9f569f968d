use std::fmt;

use super::ParseError;
use crate::ast::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Def,
    Operator,
    Let,
    In,
    If,
    Then,
    Else,
    True,
    False,
    Zero,
    Grad,
    Ref,
    Forall,
    Tensor,
    Shape,
    IntType,
    UIntType,
    FloatType,
    BoolType,
    RefType,
    Fn,
    Sq,
    BaseType,
    Type,
}

impl Keyword {
    const ALL: [(Keyword, &'static str); 24] = [
        (Keyword::Def, "def"),
        (Keyword::Operator, "operator"),
        (Keyword::Let, "let"),
        (Keyword::In, "in"),
        (Keyword::If, "if"),
        (Keyword::Then, "then"),
        (Keyword::Else, "else"),
        (Keyword::True, "True"),
        (Keyword::False, "False"),
        (Keyword::Zero, "Zero"),
        (Keyword::Grad, "Grad"),
        (Keyword::Ref, "Ref"),
        (Keyword::Forall, "forall"),
        (Keyword::Tensor, "Tensor"),
        (Keyword::Shape, "Shape"),
        (Keyword::IntType, "IntType"),
        (Keyword::UIntType, "UIntType"),
        (Keyword::FloatType, "FloatType"),
        (Keyword::BoolType, "BoolType"),
        (Keyword::RefType, "RefType"),
        (Keyword::Fn, "fn"),
        (Keyword::Sq, "sq"),
        (Keyword::BaseType, "BaseType"),
        (Keyword::Type, "Type"),
    ];

    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL
            .iter()
            .find(|(_, text)| *text == word)
            .map(|(kw, _)| *kw)
    }

    pub fn text(self) -> &'static str {
        Keyword::ALL
            .iter()
            .find(|(kw, _)| *kw == self)
            .map(|(_, text)| *text)
            .expect("every keyword has text")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    /// Punctuation and operators, e.g. `(`, `->`, `:=`.
    Symbol(&'static str),
    Int(i64),
    Float(f64),
    Ident(String),
    /// `@name`; the text excludes the sigil.
    Global(String),
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "`{}`", k.text()),
            TokenKind::Symbol(s) => write!(f, "`{s}`"),
            TokenKind::Int(v) => write!(f, "integer {v}"),
            TokenKind::Float(v) => write!(f, "float {v}"),
            TokenKind::Ident(x) => write!(f, "identifier `{x}`"),
            TokenKind::Global(g) => write!(f, "global `@{g}`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

// Longest first so `->` wins over `-`.
const SYMBOLS: [&str; 21] = [
    ":=", "->", "!=", "<=", ">=", "(", ")", "[", "]", "{", "}", ",", ":", "+", "-", "*", "/",
    "=", "<", ">", "!",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
    }

    fn span_from(&self, start: (usize, u32, u32)) -> Span {
        Span::new(start.1, start.2, start.0, self.pos)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens, ending with a single `Eof`.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    loop {
        // whitespace and `//` comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') if cur.peek_at(1) == Some('/') => cur.eat_while(|c| c != '\n'),
                _ => break,
            }
        }
        let start = (cur.pos, cur.line, cur.column);
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                text: String::new(),
                span: cur.span_from(start),
            });
            return Ok(tokens);
        };

        let kind = if c.is_ascii_digit() {
            lex_number(&mut cur, start)?
        } else if is_ident_start(c) {
            cur.eat_while(is_ident_char);
            let word = &source[start.0..cur.pos];
            match Keyword::lookup(word) {
                Some(kw) => TokenKind::Keyword(kw),
                None => TokenKind::Ident(word.to_string()),
            }
        } else if c == '@' {
            cur.bump();
            if !cur.peek().is_some_and(is_ident_start) {
                return Err(ParseError::new(
                    "expected a name after `@`",
                    cur.span_from(start),
                ));
            }
            cur.eat_while(is_ident_char);
            TokenKind::Global(source[start.0 + 1..cur.pos].to_string())
        } else if let Some(sym) = SYMBOLS.iter().find(|s| source[cur.pos..].starts_with(**s)) {
            for _ in 0..sym.chars().count() {
                cur.bump();
            }
            TokenKind::Symbol(sym)
        } else {
            cur.bump();
            return Err(ParseError::new(
                format!("unknown character {c:?}"),
                cur.span_from(start),
            ));
        };
        tokens.push(Token {
            kind,
            text: source[start.0..cur.pos].to_string(),
            span: cur.span_from(start),
        });
    }
}

fn lex_number(cur: &mut Cursor<'_>, start: (usize, u32, u32)) -> Result<TokenKind, ParseError> {
    cur.eat_while(|c| c.is_ascii_digit());
    let mut is_float = false;
    if cur.peek() == Some('.') {
        is_float = true;
        cur.bump();
        if !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(ParseError::new(
                "unterminated float literal: digits expected after `.`",
                cur.span_from(start),
            ));
        }
        cur.eat_while(|c| c.is_ascii_digit());
        if matches!(cur.peek(), Some('e' | 'E')) {
            cur.bump();
            if matches!(cur.peek(), Some('+' | '-')) {
                cur.bump();
            }
            if !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                return Err(ParseError::new(
                    "unterminated float literal: exponent digits expected",
                    cur.span_from(start),
                ));
            }
            cur.eat_while(|c| c.is_ascii_digit());
        }
    }
    if cur.peek().is_some_and(is_ident_start) {
        cur.eat_while(is_ident_char);
        return Err(ParseError::new(
            "malformed numeric literal",
            cur.span_from(start),
        ));
    }
    let text = &cur.src[start.0..cur.pos];
    let span = cur.span_from(start);
    if is_float {
        text.parse::<f64>()
            .map(TokenKind::Float)
            .map_err(|_| ParseError::new("malformed float literal", span))
    } else {
        text.parse::<i64>()
            .map(TokenKind::Int)
            .map_err(|_| ParseError::new("integer literal out of range", span))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        let mut toks: Vec<_> = tokenize(src).unwrap().into_iter().map(|t| t.kind).collect();
        assert_eq!(toks.pop(), Some(TokenKind::Eof));
        toks
    }

    #[test]
    fn let_then_ident() {
        assert_eq!(
            kinds("let x"),
            vec![TokenKind::Keyword(Keyword::Let), TokenKind::Ident("x".into())]
        );
    }

    #[test]
    fn literal_classes() {
        assert_eq!(kinds("1.5"), vec![TokenKind::Float(1.5)]);
        assert_eq!(kinds("15"), vec![TokenKind::Int(15)]);
        assert_eq!(kinds("2.5e-3"), vec![TokenKind::Float(2.5e-3)]);
    }

    #[test]
    fn global_call() {
        assert_eq!(
            kinds("@f(3)"),
            vec![
                TokenKind::Global("f".into()),
                TokenKind::Symbol("("),
                TokenKind::Int(3),
                TokenKind::Symbol(")"),
            ]
        );
    }

    #[test]
    fn multi_char_symbols() {
        assert_eq!(
            kinds("a := !b -> c != d"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Symbol(":="),
                TokenKind::Symbol("!"),
                TokenKind::Ident("b".into()),
                TokenKind::Symbol("->"),
                TokenKind::Ident("c".into()),
                TokenKind::Symbol("!="),
                TokenKind::Ident("d".into()),
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(kinds("1 // two\n3"), vec![TokenKind::Int(1), TokenKind::Int(3)]);
    }

    #[test]
    fn spans_track_lines() {
        let toks = tokenize("a\n  bb").unwrap();
        assert_eq!(toks[1].span, Span::new(2, 3, 4, 6));
    }

    #[test]
    fn unknown_character() {
        let err = tokenize("x # y").unwrap_err();
        assert!(err.message.contains("unknown character"));
        assert_eq!(err.span.start, 2);
    }

    #[test]
    fn unterminated_float() {
        assert!(tokenize("1.").unwrap_err().message.contains("unterminated"));
        assert!(tokenize("1.0e").unwrap_err().message.contains("unterminated"));
    }

    #[test]
    fn integer_overflow() {
        assert!(tokenize("99999999999999999999").is_err());
    }
}

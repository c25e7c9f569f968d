use std::collections::BTreeSet;

use super::lexer::{tokenize, Keyword, Token, TokenKind};
use super::ParseError;
use crate::ast::{
    free_type_vars, fresh_type_var, subst_type, BaseType, BinOp, Definition, Expr, ExprKind, Item,
    Kind, OperatorDecl, Param, Program, Shape, Span, Type, UnaryOp,
};

/// Which constructs the parser admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Frontend source: no reference forms, no `RefType`, no `fn` literals.
    #[default]
    User,
    /// Generated code, e.g. the output of gradient elaboration.
    Internal,
}

pub fn parse_program(source: &str) -> Result<Program, Vec<ParseError>> {
    parse_program_in(source, Mode::User)
}

pub fn parse_program_in(source: &str, mode: Mode) -> Result<Program, Vec<ParseError>> {
    let tokens = tokenize(source).map_err(|e| vec![e])?;
    let mut parser = Parser::new(tokens, mode);
    let mut program = Program::default();
    let mut errors = Vec::new();
    while !parser.at_eof() {
        match parser.item() {
            Ok(item) => {
                let span = item.span();
                if let Err(name) = program.push(item) {
                    errors.push(ParseError::new(format!("duplicate global name `@{name}`"), span));
                }
            }
            Err(err) => {
                errors.push(err);
                parser.recover_to_item();
            }
        }
    }
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(errors)
    }
}

pub fn parse_expr(source: &str, internal_mode: bool) -> Result<Expr, ParseError> {
    let mode = if internal_mode {
        Mode::Internal
    } else {
        Mode::User
    };
    let mut parser = Parser::new(tokenize(source)?, mode);
    let e = parser.expr()?;
    parser.expect_eof()?;
    Ok(e)
}

pub fn parse_type(source: &str, internal_mode: bool) -> Result<Type, ParseError> {
    let mode = if internal_mode {
        Mode::Internal
    } else {
        Mode::User
    };
    let mut parser = Parser::new(tokenize(source)?, mode);
    let t = parser.ty()?;
    parser.expect_eof()?;
    Ok(t)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    mode: Mode,
    // forall binders enclosing the type being parsed
    type_scope: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(tokens: Vec<Token>, mode: Mode) -> Parser {
        Parser {
            tokens,
            pos: 0,
            mode,
            type_scope: Vec::new(),
        }
    }

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }


    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), TokenKind::Eof)
    }

    fn bump(&mut self) -> &Token {
        let tok = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn is_symbol(&self, sym: &str) -> bool {
        matches!(self.peek(), TokenKind::Symbol(s) if *s == sym)
    }

    fn is_keyword(&self, kw: Keyword) -> bool {
        matches!(self.peek(), TokenKind::Keyword(k) if *k == kw)
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.is_symbol(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: Keyword) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().to_string();
        let msg = match expected {
            [] => format!("unexpected {found}"),
            [one] => format!("expected {one}, found {found}"),
            many => format!("expected one of {}, found {found}", many.join(", ")),
        };
        ParseError::new(msg, self.span()).expecting(expected)
    }

    fn expect_symbol(&mut self, sym: &str) -> PResult<Span> {
        if self.is_symbol(sym) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&format!("`{sym}`")]))
        }
    }

    fn expect_keyword(&mut self, kw: Keyword) -> PResult<Span> {
        if self.is_keyword(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&format!("`{}`", kw.text())]))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn expect_nat(&mut self) -> PResult<u64> {
        match *self.peek() {
            TokenKind::Int(v) if v >= 0 => {
                self.bump();
                Ok(v as u64)
            }
            _ => Err(self.unexpected(&["a natural number"])),
        }
    }

    fn internal_only(&self, what: &str, span: Span) -> PResult<()> {
        if self.mode == Mode::Internal {
            Ok(())
        } else {
            Err(ParseError::new(
                format!("{what} are internal and cannot appear in frontend code"),
                span,
            ))
        }
    }

    fn local_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            TokenKind::Ident(x) if !starts_upper(&x) => {
                self.bump();
                Ok(x)
            }
            TokenKind::Ident(x) => Err(ParseError::new(
                format!("`{x}` is a type identifier; local names start with a lowercase letter or `_`"),
                self.span(),
            )),
            _ => Err(self.unexpected(&["a local identifier"])),
        }
    }

    fn global_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            TokenKind::Global(g) => {
                self.bump();
                Ok(g)
            }
            _ => Err(self.unexpected(&["a global identifier"])),
        }
    }

    /// Skips to the next `def` or `operator` keyword.
    fn recover_to_item(&mut self) {
        if !self.at_eof() {
            self.bump();
        }
        while !self.at_eof()
            && !self.is_keyword(Keyword::Def)
            && !self.is_keyword(Keyword::Operator)
        {
            self.bump();
        }
    }

    // ----- items -----

    fn item(&mut self) -> PResult<Item> {
        let start = self.span();
        if self.eat_keyword(Keyword::Operator) {
            let name = self.global_name()?;
            self.expect_symbol(":")?;
            let ty = self.ty()?;
            return Ok(Item::Operator(OperatorDecl {
                name,
                ty,
                span: start.to(self.prev_span()),
            }));
        }
        if self.eat_keyword(Keyword::Def) {
            let name = self.global_name()?;
            let params = self.params()?;
            self.expect_symbol("->")?;
            let ret = self.ty()?;
            self.expect_symbol("{")?;
            let body = self.expr()?;
            self.expect_symbol("}")?;
            return Ok(Item::Definition(Definition {
                name,
                params,
                ret,
                body,
                span: start.to(self.prev_span()),
            }));
        }
        Err(self.unexpected(&["`def`", "`operator`"]))
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_symbol("(")?;
        let mut params = Vec::new();
        if !self.is_symbol(")") {
            loop {
                let name = self.local_name()?;
                self.expect_symbol(":")?;
                let ty = self.ty()?;
                params.push(Param { name, ty });
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        self.expect_symbol(")")?;
        Ok(params)
    }

    // ----- types -----

    fn ty(&mut self) -> PResult<Type> {
        if self.eat_keyword(Keyword::Forall) {
            self.expect_symbol("(")?;
            let var = match self.peek().clone() {
                TokenKind::Ident(v) if starts_upper(&v) => {
                    self.bump();
                    v
                }
                _ => return Err(self.unexpected(&["a type identifier"])),
            };
            self.expect_symbol(":")?;
            let kind = self.kind()?;
            self.expect_symbol(")")?;
            self.expect_symbol(",")?;
            self.type_scope.push(var.clone());
            let body = self.ty();
            self.type_scope.pop();
            let body = body?;
            // keep binders unique within one type
            if self.type_scope.contains(&var) {
                let mut avoid: BTreeSet<String> = self.type_scope.iter().cloned().collect();
                avoid.extend(free_type_vars(&body));
                avoid.extend(bound_type_vars(&body));
                let fresh = fresh_type_var(&var, &avoid);
                let renamed = subst_type(&body, &var, &Type::Var(fresh.clone()));
                return Ok(Type::Forall(fresh, kind, Box::new(renamed)));
            }
            return Ok(Type::Forall(var, kind, Box::new(body)));
        }
        let (atom, paren_list) = self.type_atom()?;
        if self.eat_symbol("->") {
            let domain = paren_list.unwrap_or_else(|| vec![atom]);
            let codomain = self.ty()?;
            return Ok(Type::Arrow(domain, Box::new(codomain)));
        }
        Ok(atom)
    }

    fn kind(&mut self) -> PResult<Kind> {
        let kind = match self.peek() {
            TokenKind::Keyword(Keyword::BaseType) => Kind::BaseType,
            TokenKind::Keyword(Keyword::Shape) => Kind::Shape,
            TokenKind::Keyword(Keyword::Type) => Kind::Type,
            _ => return Err(self.unexpected(&["`BaseType`", "`Shape`", "`Type`"])),
        };
        self.bump();
        Ok(kind)
    }

    fn width(&mut self) -> PResult<u32> {
        self.expect_symbol("(")?;
        let span = self.span();
        let w = self.expect_nat()?;
        self.expect_symbol(")")?;
        u32::try_from(w).map_err(|_| ParseError::new("bit width out of range", span))
    }

    /// A type without a trailing arrow. The second component lists the
    /// elements when the type was written as a parenthesized list.
    fn type_atom(&mut self) -> PResult<(Type, Option<Vec<Type>>)> {
        let start = self.span();
        let t = match self.peek().clone() {
            TokenKind::Keyword(Keyword::IntType) => {
                self.bump();
                Type::Base(BaseType::Int(self.width()?))
            }
            TokenKind::Keyword(Keyword::UIntType) => {
                self.bump();
                Type::Base(BaseType::UInt(self.width()?))
            }
            TokenKind::Keyword(Keyword::FloatType) => {
                self.bump();
                Type::Base(BaseType::Float(self.width()?))
            }
            TokenKind::Keyword(Keyword::BoolType) => {
                self.bump();
                Type::Base(BaseType::Bool)
            }
            TokenKind::Keyword(Keyword::Shape) => {
                self.bump();
                self.expect_symbol("(")?;
                let mut dims = Vec::new();
                if !self.is_symbol(")") {
                    loop {
                        let span = self.span();
                        let d = self.expect_nat()?;
                        if d == 0 {
                            return Err(ParseError::new(
                                "shape dimensions must be at least 1",
                                span,
                            ));
                        }
                        dims.push(d);
                        if !self.eat_symbol(",") {
                            break;
                        }
                    }
                }
                self.expect_symbol(")")?;
                Type::ShapeLit(Shape(dims))
            }
            TokenKind::Keyword(Keyword::Tensor) => {
                self.bump();
                self.expect_symbol("(")?;
                let base = self.ty()?;
                self.expect_symbol(",")?;
                let shape = self.ty()?;
                self.expect_symbol(")")?;
                Type::Tensor(Box::new(base), Box::new(shape))
            }
            TokenKind::Keyword(Keyword::RefType) => {
                self.bump();
                self.internal_only("reference types", start)?;
                self.expect_symbol("(")?;
                let inner = self.ty()?;
                self.expect_symbol(")")?;
                Type::Ref(Box::new(inner))
            }
            TokenKind::Ident(v) if starts_upper(&v) => {
                self.bump();
                Type::Var(v)
            }
            TokenKind::Symbol("(") => {
                self.bump();
                let mut elems = Vec::new();
                let mut trailing_comma = false;
                while !self.is_symbol(")") {
                    elems.push(self.ty()?);
                    trailing_comma = self.eat_symbol(",");
                    if !trailing_comma {
                        break;
                    }
                }
                self.expect_symbol(")")?;
                let t = if elems.len() == 1 && !trailing_comma {
                    elems[0].clone()
                } else {
                    Type::Product(elems.clone())
                };
                return Ok((t, Some(elems)));
            }
            _ => return Err(self.unexpected(&["a type"])),
        };
        Ok((t, None))
    }

    fn starts_type(&self) -> bool {
        match self.peek() {
            TokenKind::Keyword(k) => matches!(
                k,
                Keyword::IntType
                    | Keyword::UIntType
                    | Keyword::FloatType
                    | Keyword::BoolType
                    | Keyword::Shape
                    | Keyword::Tensor
                    | Keyword::Forall
                    | Keyword::RefType
            ),
            TokenKind::Ident(x) => starts_upper(x),
            _ => false,
        }
    }

    // ----- expressions -----

    fn expr(&mut self) -> PResult<Expr> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || {
            if self.is_keyword(Keyword::Let) || self.is_keyword(Keyword::If) {
                self.open_form()
            } else {
                self.assign()
            }
        })
    }

    fn open_form(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.eat_keyword(Keyword::Let) {
            let binder = self.local_name()?;
            let annotation = if self.eat_symbol(":") {
                Some(self.ty()?)
            } else {
                None
            };
            self.expect_symbol("=")?;
            let value = self.expr()?;
            self.expect_keyword(Keyword::In)?;
            let body = self.expr()?;
            let kind = ExprKind::Let {
                binder,
                annotation,
                value: Box::new(value),
                body: Box::new(body),
            };
            return Ok(Expr::new(kind, start.to(self.prev_span())));
        }
        self.expect_keyword(Keyword::If)?;
        let cond = self.expr()?;
        self.expect_keyword(Keyword::Then)?;
        let then = self.expr()?;
        self.expect_keyword(Keyword::Else)?;
        let otherwise = self.expr()?;
        Ok(Expr::new(
            ExprKind::If(Box::new(cond), Box::new(then), Box::new(otherwise)),
            start.to(self.prev_span()),
        ))
    }

    fn assign(&mut self) -> PResult<Expr> {
        let lhs = self.compare()?;
        if self.is_symbol(":=") {
            let span = self.span();
            self.internal_only("reference operations", span)?;
            self.bump();
            let rhs = self.compare()?;
            let span = lhs.span.to(rhs.span);
            return Ok(Expr::new(
                ExprKind::RefWrite(Box::new(lhs), Box::new(rhs)),
                span,
            ));
        }
        Ok(lhs)
    }

    fn binop_here(&self) -> Option<BinOp> {
        match self.peek() {
            TokenKind::Symbol(s) => BinOp::from_symbol(s),
            _ => None,
        }
    }

    fn compare(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        match self.binop_here() {
            Some(op) if op.is_comparison() => {
                self.bump();
                let rhs = self.additive()?;
                if self.binop_here().is_some_and(BinOp::is_comparison) {
                    return Err(ParseError::new(
                        "comparison operators are non-associative; add parentheses",
                        self.span(),
                    ));
                }
                let span = lhs.span.to(rhs.span);
                Ok(Expr::new(
                    ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                    span,
                ))
            }
            _ => Ok(lhs),
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        while let Some(op @ (BinOp::Add | BinOp::Sub)) = self.binop_here() {
            self.bump();
            let rhs = self.multiplicative()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.prefix()?;
        while let Some(op @ (BinOp::Mul | BinOp::Div)) = self.binop_here() {
            self.bump();
            let rhs = self.prefix()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> PResult<Expr> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.prefix_inner())
    }

    fn prefix_inner(&mut self) -> PResult<Expr> {
        let start = self.span();
        let finish = |p: &Parser, kind: ExprKind| Expr::new(kind, start.to(p.prev_span()));
        if self.eat_symbol("-") {
            let e = self.prefix()?;
            return Ok(finish(self, ExprKind::Unary(UnaryOp::Neg, Box::new(e))));
        }
        if self.eat_keyword(Keyword::Sq) {
            let e = self.prefix()?;
            return Ok(finish(self, ExprKind::Unary(UnaryOp::Sq, Box::new(e))));
        }
        if self.is_symbol("!") {
            self.internal_only("reference operations", start)?;
            self.bump();
            let e = self.prefix()?;
            return Ok(finish(self, ExprKind::RefRead(Box::new(e))));
        }
        if self.is_keyword(Keyword::Ref) {
            self.internal_only("reference operations", start)?;
            self.bump();
            let e = self.prefix()?;
            return Ok(finish(self, ExprKind::RefNew(Box::new(e))));
        }
        if self.is_symbol("(") {
            self.bump();
            if self.starts_type() {
                let t = self.ty()?;
                self.expect_symbol(")")?;
                let e = self.prefix()?;
                return Ok(finish(self, ExprKind::Cast(t, Box::new(e))));
            }
            self.pos -= 1;
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.eat_symbol("(") {
                let args = self.expr_list(")")?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::Call(Box::new(e), args), span);
            } else if self.eat_symbol("[") {
                let index = self.expect_nat()? as usize;
                self.expect_symbol("]")?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::Proj(Box::new(e), index), span);
            } else {
                return Ok(e);
            }
        }
    }

    /// Comma-separated expressions up to and including `close`.
    fn expr_list(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut items = Vec::new();
        while !self.is_symbol(close) {
            items.push(self.expr()?);
            if !self.eat_symbol(",") {
                break;
            }
        }
        self.expect_symbol(close)?;
        Ok(items)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            TokenKind::Ident(_) => ExprKind::Local(self.local_name()?),
            TokenKind::Global(g) => {
                self.bump();
                ExprKind::Global(g)
            }
            TokenKind::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            TokenKind::Float(v) => {
                self.bump();
                ExprKind::Float(v)
            }
            TokenKind::Keyword(Keyword::True) => {
                self.bump();
                ExprKind::Bool(true)
            }
            TokenKind::Keyword(Keyword::False) => {
                self.bump();
                ExprKind::Bool(false)
            }
            TokenKind::Keyword(Keyword::Let | Keyword::If) => return self.open_form(),
            TokenKind::Symbol("(") => {
                self.bump();
                let mut elems = Vec::new();
                let mut trailing_comma = false;
                while !self.is_symbol(")") {
                    elems.push(self.expr()?);
                    trailing_comma = self.eat_symbol(",");
                    if !trailing_comma {
                        break;
                    }
                }
                self.expect_symbol(")")?;
                if elems.len() == 1 && !trailing_comma {
                    // parenthesized expression keeps its own span
                    return Ok(elems.pop().expect("one element"));
                }
                ExprKind::Tuple(elems)
            }
            TokenKind::Symbol("[") => {
                self.bump();
                let elems = self.expr_list("]")?;
                if elems.is_empty() {
                    return Err(ParseError::new(
                        "tensor literals need at least one element",
                        start.to(self.prev_span()),
                    ));
                }
                ExprKind::TensorLit(elems)
            }
            TokenKind::Keyword(Keyword::Zero) => {
                self.bump();
                ExprKind::Zero(self.ty()?)
            }
            TokenKind::Keyword(Keyword::Grad) => {
                self.bump();
                ExprKind::Grad(Box::new(self.primary()?))
            }
            TokenKind::Keyword(Keyword::Fn) => {
                self.internal_only("anonymous function literals", start)?;
                self.bump();
                let params = self.params()?;
                self.expect_symbol("->")?;
                let ret = self.ty()?;
                self.expect_symbol("{")?;
                let body = self.expr()?;
                self.expect_symbol("}")?;
                ExprKind::Function {
                    params,
                    ret,
                    body: Box::new(body),
                }
            }
            _ => return Err(self.unexpected(&["an expression"])),
        };
        Ok(Expr::new(kind, start.to(self.prev_span())))
    }
}

fn starts_upper(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn bound_type_vars(t: &Type) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn walk(t: &Type, out: &mut BTreeSet<String>) {
        match t {
            Type::Forall(v, _, body) => {
                out.insert(v.clone());
                walk(body, out);
            }
            Type::Tensor(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            Type::Arrow(d, c) => {
                d.iter().for_each(|t| walk(t, out));
                walk(c, out);
            }
            Type::Ref(t) => walk(t, out),
            Type::Product(ts) => ts.iter().for_each(|t| walk(t, out)),
            Type::Base(_) | Type::ShapeLit(_) | Type::Var(_) => {}
        }
    }
    walk(t, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::alpha_equal;

    fn f32s() -> Type {
        Type::scalar(BaseType::F32)
    }

    #[test]
    fn operator_declaration() {
        let p = parse_program(
            "operator @sum : forall (S : Shape), Tensor(FloatType(32), S) -> Tensor(FloatType(32), Shape())",
        )
        .unwrap();
        let op = p.operator("sum").expect("declared");
        let expected = Type::Forall(
            "S".into(),
            Kind::Shape,
            Box::new(Type::arrow(
                vec![Type::Tensor(
                    Box::new(Type::Base(BaseType::F32)),
                    Box::new(Type::Var("S".into())),
                )],
                f32s(),
            )),
        );
        assert_eq!(op.ty, expected);
    }

    #[test]
    fn identity_definition() {
        let p = parse_program(
            "def @id(x : Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()) { x }",
        )
        .unwrap();
        let d = p.definition("id").unwrap();
        assert_eq!(d.params, vec![Param::new("x", f32s())]);
        assert_eq!(d.body, Expr::local("x"));
    }

    #[test]
    fn reference_read_rejected_in_user_mode() {
        let errs = parse_program("def @bad() -> () { !r }").unwrap_err();
        assert!(errs[0].message.contains("reference operations are internal"));
        assert!(parse_program_in("def @ok() -> () { !r }", Mode::Internal).is_ok());
    }

    #[test]
    fn arithmetic_precedence() {
        let e = parse_expr("1 + 2 * 3", false).unwrap();
        let expected = Expr::binary(
            BinOp::Add,
            Expr::int(1),
            Expr::binary(BinOp::Mul, Expr::int(2), Expr::int(3)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn if_with_negated_else() {
        let e = parse_expr("if x > 0.0 then x else - x", false).unwrap();
        let expected = Expr::if_(
            Expr::binary(BinOp::Gt, Expr::local("x"), Expr::float(0.0)),
            Expr::local("x"),
            Expr::unary(UnaryOp::Neg, Expr::local("x")),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn reference_update() {
        let e = parse_expr("r := !r + 1.0", true).unwrap();
        let expected = Expr::ref_write(
            Expr::local("r"),
            Expr::binary(BinOp::Add, Expr::ref_read(Expr::local("r")), Expr::float(1.0)),
        );
        assert_eq!(e, expected);
        assert!(parse_expr("r := 1.0", false).is_err());
    }

    #[test]
    fn comparisons_do_not_chain() {
        let err = parse_expr("a < b < c", false).unwrap_err();
        assert!(err.message.contains("non-associative"));
    }

    #[test]
    fn subtraction_is_left_associative() {
        let e = parse_expr("a - b - c", false).unwrap();
        let expected = Expr::binary(
            BinOp::Sub,
            Expr::binary(BinOp::Sub, Expr::local("a"), Expr::local("b")),
            Expr::local("c"),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn cast_versus_parenthesized_expression() {
        let cast = parse_expr("(Tensor(FloatType(32), Shape())) x", false).unwrap();
        assert_eq!(cast, Expr::cast(f32s(), Expr::local("x")));
        let paren = parse_expr("(x)", false).unwrap();
        assert_eq!(paren, Expr::local("x"));
    }

    #[test]
    fn tuples_and_projection() {
        assert_eq!(parse_expr("()", false).unwrap(), Expr::unit());
        assert_eq!(
            parse_expr("(1.0, True)[1]", false).unwrap(),
            Expr::proj(Expr::tuple(vec![Expr::float(1.0), Expr::bool(true)]), 1)
        );
        assert_eq!(
            parse_expr("(1,)", false).unwrap(),
            Expr::tuple(vec![Expr::int(1)])
        );
    }

    #[test]
    fn grad_binds_to_primary() {
        let e = parse_expr("Grad @f(3.0)", false).unwrap();
        assert_eq!(
            e,
            Expr::call(Expr::grad(Expr::global("f")), vec![Expr::float(3.0)])
        );
    }

    #[test]
    fn arrow_domains_are_lists() {
        let t = parse_type("(Tensor(BoolType, Shape()), BoolType) -> BoolType", false).unwrap();
        assert!(matches!(&t, Type::Arrow(d, _) if d.len() == 2));
        let single = parse_type("BoolType -> BoolType", false).unwrap();
        let parened = parse_type("(BoolType) -> BoolType", false).unwrap();
        assert_eq!(single, parened);
        let nested = parse_type("((BoolType, BoolType)) -> BoolType", false).unwrap();
        assert!(matches!(&nested, Type::Arrow(d, _) if d.len() == 1));
    }

    #[test]
    fn zero_extent_shape_rejected() {
        assert!(parse_type("Shape(2, 0)", false).is_err());
    }

    #[test]
    fn shadowed_forall_is_renamed() {
        let t = parse_type("forall (S : Shape), forall (S : Shape), Tensor(BoolType, S)", false)
            .unwrap();
        let expected = parse_type(
            "forall (A : Shape), forall (B : Shape), Tensor(BoolType, B)",
            false,
        )
        .unwrap();
        assert!(alpha_equal(&t, &expected));
        match t {
            Type::Forall(outer, _, body) => match *body {
                Type::Forall(inner, _, _) => assert_ne!(outer, inner),
                _ => panic!(),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn duplicate_globals_reported() {
        let src = "def @f() -> () { () }\ndef @f() -> () { () }";
        let errs = parse_program(src).unwrap_err();
        assert!(errs[0].message.contains("duplicate"));
        assert_eq!(errs[0].span.line, 2);
    }

    #[test]
    fn one_error_per_item() {
        let src = "def @a() -> () { + }\ndef @b() -> () { () }\ndef @c() -> () { ) }";
        let errs = parse_program(src).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().all(|e| e.span.end <= src.len()));
    }

    #[test]
    fn fn_literal_is_internal() {
        let src = "fn(x : Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()) { x }";
        assert!(parse_expr(src, false).is_err());
        assert!(parse_expr(src, true).is_ok());
    }
}

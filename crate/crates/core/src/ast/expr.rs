use std::fmt;

use super::types::Type;

/// Source region: 1-based line/column of the first character plus byte offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub line: u32,
    pub column: u32,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(line: u32, column: u32, start: usize, end: usize) -> Span {
        Span {
            line,
            column,
            start,
            end,
        }
    }

    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        if self == Span::default() {
            return other;
        }
        Span {
            line: self.line,
            column: self.column,
            start: self.start,
            end: other.end.max(self.end),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Ne,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub const ALL: [BinOp; 10] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Ne,
        BinOp::Eq,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Ne => "!=",
            BinOp::Eq => "=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.symbol() == s)
    }

    pub fn is_comparison(self) -> bool {
        !matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sq,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sq => "sq",
        }
    }

    pub fn from_symbol(s: &str) -> Option<UnaryOp> {
        match s {
            "-" => Some(UnaryOp::Neg),
            "sq" => Some(UnaryOp::Sq),
            _ => None,
        }
    }
}

/// A typed parameter of a definition or function literal.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: Type) -> Param {
        Param {
            name: name.into(),
            ty,
        }
    }
}

/// Expression node. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Local(String),
    Global(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Call(Box<Expr>, Vec<Expr>),
    Let {
        binder: String,
        annotation: Option<Type>,
        value: Box<Expr>,
        body: Box<Expr>,
    },
    Cast(Type, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Tuple(Vec<Expr>),
    Proj(Box<Expr>, usize),
    TensorLit(Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Zero(Type),
    Grad(Box<Expr>),
    RefNew(Box<Expr>),
    RefRead(Box<Expr>),
    RefWrite(Box<Expr>, Box<Expr>),
    Function {
        params: Vec<Param>,
        ret: Type,
        body: Box<Expr>,
    },
}

impl From<ExprKind> for Expr {
    fn from(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }
}

// Builders used by the parser, the AD transformation and tests.
impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn local(name: impl Into<String>) -> Expr {
        ExprKind::Local(name.into()).into()
    }

    pub fn global(name: impl Into<String>) -> Expr {
        ExprKind::Global(name.into()).into()
    }

    pub fn int(v: i64) -> Expr {
        ExprKind::Int(v).into()
    }

    pub fn float(v: f64) -> Expr {
        ExprKind::Float(v).into()
    }

    pub fn bool(v: bool) -> Expr {
        ExprKind::Bool(v).into()
    }

    pub fn unit() -> Expr {
        ExprKind::Tuple(Vec::new()).into()
    }

    pub fn call(callee: Expr, args: Vec<Expr>) -> Expr {
        ExprKind::Call(Box::new(callee), args).into()
    }

    pub fn let_(binder: impl Into<String>, annotation: Option<Type>, value: Expr, body: Expr) -> Expr {
        ExprKind::Let {
            binder: binder.into(),
            annotation,
            value: Box::new(value),
            body: Box::new(body),
        }
        .into()
    }

    pub fn cast(ty: Type, inner: Expr) -> Expr {
        ExprKind::Cast(ty, Box::new(inner)).into()
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)).into()
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Expr {
        ExprKind::Unary(op, Box::new(operand)).into()
    }

    pub fn tuple(elements: Vec<Expr>) -> Expr {
        ExprKind::Tuple(elements).into()
    }

    pub fn proj(tuple: Expr, index: usize) -> Expr {
        ExprKind::Proj(Box::new(tuple), index).into()
    }

    pub fn tensor(elements: Vec<Expr>) -> Expr {
        ExprKind::TensorLit(elements).into()
    }

    pub fn if_(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
        ExprKind::If(Box::new(cond), Box::new(then), Box::new(otherwise)).into()
    }

    pub fn zero(ty: Type) -> Expr {
        ExprKind::Zero(ty).into()
    }

    pub fn grad(f: Expr) -> Expr {
        ExprKind::Grad(Box::new(f)).into()
    }

    pub fn ref_new(init: Expr) -> Expr {
        ExprKind::RefNew(Box::new(init)).into()
    }

    pub fn ref_read(r: Expr) -> Expr {
        ExprKind::RefRead(Box::new(r)).into()
    }

    pub fn ref_write(r: Expr, value: Expr) -> Expr {
        ExprKind::RefWrite(Box::new(r), Box::new(value)).into()
    }

    pub fn function(params: Vec<Param>, ret: Type, body: Expr) -> Expr {
        ExprKind::Function {
            params,
            ret,
            body: Box::new(body),
        }
        .into()
    }

    pub fn with_span(mut self, span: Span) -> Expr {
        self.span = span;
        self
    }

    /// Immediate subexpressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            Local(_) | Global(_) | Int(_) | Float(_) | Bool(_) | Zero(_) => Vec::new(),
            Call(callee, args) => std::iter::once(callee.as_ref()).chain(args).collect(),
            Let { value, body, .. } => vec![value, body],
            Cast(_, e) | Unary(_, e) | Proj(e, _) | Grad(e) | RefNew(e) | RefRead(e) => vec![e],
            Binary(_, a, b) | RefWrite(a, b) => vec![a, b],
            Tuple(es) | TensorLit(es) => es.iter().collect(),
            If(c, t, e) => vec![c, t, e],
            Function { body, .. } => vec![body],
        }
    }

    /// Pre-order traversal of this node and all descendants.
    pub fn preorder(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            let kids = e.children();
            stack.extend(kids.into_iter().rev());
        }
        out
    }

    pub fn contains_ref_forms(&self) -> bool {
        self.preorder().into_iter().any(|e| {
            matches!(
                e.kind,
                ExprKind::RefNew(_) | ExprKind::RefRead(_) | ExprKind::RefWrite(..)
            )
        })
    }

    pub fn contains_grad(&self) -> bool {
        self.preorder()
            .into_iter()
            .any(|e| matches!(e.kind, ExprKind::Grad(_)))
    }

    pub fn contains_function(&self) -> bool {
        self.preorder()
            .into_iter()
            .any(|e| matches!(e.kind, ExprKind::Function { .. }))
    }
}

/// Equality ignores spans.
#[derive(Debug, Clone)]
pub struct OperatorDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

/// Equality ignores spans.
#[derive(Debug, Clone)]
pub struct Definition {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Expr,
    pub span: Span,
}

impl PartialEq for OperatorDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.ty == other.ty
    }
}

impl PartialEq for Definition {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.ret == other.ret
            && self.body == other.body
    }
}

impl Definition {
    /// `(T1 x ... x Tn) -> T'`
    pub fn ty(&self) -> Type {
        Type::arrow(
            self.params.iter().map(|p| p.ty.clone()).collect(),
            self.ret.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Operator(OperatorDecl),
    Definition(Definition),
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::Operator(o) => &o.name,
            Item::Definition(d) => &d.name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Item::Operator(o) => o.span,
            Item::Definition(d) => d.span,
        }
    }

    pub fn ty(&self) -> Type {
        match self {
            Item::Operator(o) => o.ty.clone(),
            Item::Definition(d) => d.ty(),
        }
    }
}

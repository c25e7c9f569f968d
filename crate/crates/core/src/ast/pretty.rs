//! Concrete-syntax printer. Output re-parses to an alpha-equal node; programs
//! containing reference forms or `fn` literals need the parser's internal mode.

use std::fmt::{self, Write as _};

use super::expr::{BinOp, Definition, Expr, ExprKind, Item, Param, UnaryOp};
use super::program::Program;
use super::types::{BaseType, Type};

// Binding levels, loosest first.
const OPEN: u8 = 0; // let, if
const ASSIGN: u8 = 1;
const COMPARE: u8 = 2;
const ADD: u8 = 3;
const MUL: u8 = 4;
const PREFIX: u8 = 5;
const POSTFIX: u8 = 6;
const ATOM: u8 = 7;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Let { .. } | ExprKind::If(..) => OPEN,
        ExprKind::RefWrite(..) => ASSIGN,
        ExprKind::Binary(op, ..) if op.is_comparison() => COMPARE,
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
        ExprKind::Binary(..) => MUL,
        ExprKind::Unary(..) | ExprKind::Cast(..) | ExprKind::RefNew(_) | ExprKind::RefRead(_) => {
            PREFIX
        }
        ExprKind::Call(..) | ExprKind::Proj(..) => POSTFIX,
        ExprKind::Int(v) if *v < 0 => PREFIX,
        ExprKind::Float(v) if v.is_sign_negative() => PREFIX,
        _ => ATOM,
    }
}

pub fn base_type_text(b: BaseType) -> String {
    match b {
        BaseType::Int(w) => format!("IntType({w})"),
        BaseType::UInt(w) => format!("UIntType({w})"),
        BaseType::Float(w) => format!("FloatType({w})"),
        BaseType::Bool => "BoolType".to_string(),
    }
}

/// Float literal text that the lexer reads back bit-for-bit.
pub fn float_text(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || !s.chars().any(|c| c.is_ascii_digit()) {
        return s;
    }
    match s.find('e') {
        Some(i) => format!("{}.0{}", &s[..i], &s[i..]),
        None => format!("{s}.0"),
    }
}

fn write_type(out: &mut String, t: &Type) {
    match t {
        Type::Base(b) => out.push_str(&base_type_text(*b)),
        Type::ShapeLit(s) => {
            out.push_str("Shape(");
            for (i, d) in s.dims().iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{d}");
            }
            out.push(')');
        }
        Type::Tensor(b, s) => {
            out.push_str("Tensor(");
            write_type(out, b);
            out.push_str(", ");
            write_type(out, s);
            out.push(')');
        }
        Type::Arrow(dom, cod) => {
            out.push('(');
            for (i, d) in dom.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_type(out, d);
            }
            out.push_str(") -> ");
            write_type(out, cod);
        }
        Type::Var(v) => out.push_str(v),
        Type::Forall(v, k, body) => {
            let _ = write!(out, "forall ({v} : {k}), ");
            write_type(out, body);
        }
        Type::Ref(inner) => {
            out.push_str("RefType(");
            write_type(out, inner);
            out.push(')');
        }
        Type::Product(ts) => {
            out.push('(');
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_type(out, t);
            }
            if ts.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
    }
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn new() -> Printer {
        Printer {
            out: String::new(),
            indent: 0,
        }
    }

    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    fn ty(&mut self, t: &Type) {
        write_type(&mut self.out, t);
    }

    fn params(&mut self, params: &[Param]) {
        self.out.push('(');
        for (i, p) in params.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.out.push_str(&p.name);
            self.out.push_str(" : ");
            self.ty(&p.ty);
        }
        self.out.push(')');
    }

    fn list(&mut self, es: &[Expr]) {
        for (i, e) in es.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(e, OPEN);
        }
    }

    fn block(&mut self, body: &Expr) {
        self.out.push('{');
        self.indent += 1;
        self.newline();
        self.expr(body, OPEN);
        self.indent -= 1;
        self.newline();
        self.out.push('}');
    }

    fn expr(&mut self, e: &Expr, min: u8) {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || {
            if level(e) < min {
                self.out.push('(');
                self.expr_bare(e);
                self.out.push(')');
            } else {
                self.expr_bare(e);
            }
        })
    }

    fn expr_bare(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Local(x) => self.out.push_str(x),
            ExprKind::Global(g) => {
                self.out.push('@');
                self.out.push_str(g);
            }
            ExprKind::Int(v) => {
                let _ = write!(self.out, "{v}");
            }
            ExprKind::Float(v) => self.out.push_str(&float_text(*v)),
            ExprKind::Bool(b) => self.out.push_str(if *b { "True" } else { "False" }),
            ExprKind::Call(callee, args) => {
                self.expr(callee, POSTFIX);
                self.out.push('(');
                self.list(args);
                self.out.push(')');
            }
            ExprKind::Let {
                binder,
                annotation,
                value,
                body,
            } => {
                let _ = write!(self.out, "let {binder}");
                if let Some(t) = annotation {
                    self.out.push_str(" : ");
                    self.ty(t);
                }
                self.out.push_str(" = ");
                self.expr(value, OPEN);
                self.out.push_str(" in");
                self.newline();
                self.expr(body, OPEN);
            }
            ExprKind::Cast(t, inner) => {
                self.out.push('(');
                self.ty(t);
                self.out.push_str(") ");
                self.expr(inner, PREFIX);
            }
            ExprKind::Binary(op, l, r) => {
                let (lmin, rmin) = match level(e) {
                    COMPARE => (ADD, ADD),
                    ADD => (ADD, MUL),
                    _ => (MUL, PREFIX),
                };
                self.expr(l, lmin);
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(r, rmin);
            }
            ExprKind::Unary(op, operand) => {
                match op {
                    UnaryOp::Neg => self.out.push('-'),
                    UnaryOp::Sq => self.out.push_str("sq "),
                }
                self.expr(operand, PREFIX);
            }
            ExprKind::Tuple(es) => {
                self.out.push('(');
                self.list(es);
                if es.len() == 1 {
                    self.out.push(',');
                }
                self.out.push(')');
            }
            ExprKind::Proj(t, i) => {
                self.expr(t, POSTFIX);
                let _ = write!(self.out, "[{i}]");
            }
            ExprKind::TensorLit(es) => {
                self.out.push('[');
                self.list(es);
                self.out.push(']');
            }
            ExprKind::If(c, t, f) => {
                self.out.push_str("if ");
                self.expr(c, OPEN);
                self.out.push_str(" then ");
                self.expr(t, OPEN);
                self.out.push_str(" else ");
                self.expr(f, OPEN);
            }
            ExprKind::Zero(t) => {
                self.out.push_str("Zero ");
                self.ty(t);
            }
            ExprKind::Grad(f) => {
                self.out.push_str("Grad ");
                self.expr(f, ATOM);
            }
            ExprKind::RefNew(init) => {
                self.out.push_str("Ref ");
                self.expr(init, PREFIX);
            }
            ExprKind::RefRead(r) => {
                self.out.push('!');
                self.expr(r, PREFIX);
            }
            ExprKind::RefWrite(r, v) => {
                self.expr(r, COMPARE);
                self.out.push_str(" := ");
                self.expr(v, COMPARE);
            }
            ExprKind::Function { params, ret, body } => {
                self.out.push_str("fn");
                self.params(params);
                self.out.push_str(" -> ");
                self.ty(ret);
                self.out.push(' ');
                self.block(body);
            }
        }
    }

    fn definition(&mut self, d: &Definition) {
        let _ = write!(self.out, "def @{}", d.name);
        self.params(&d.params);
        self.out.push_str(" -> ");
        self.ty(&d.ret);
        self.out.push(' ');
        self.block(&d.body);
    }

    fn item(&mut self, item: &Item) {
        match item {
            Item::Operator(o) => {
                let _ = write!(self.out, "operator @{} : ", o.name);
                self.ty(&o.ty);
            }
            Item::Definition(d) => self.definition(d),
        }
    }
}

pub fn pretty_type(t: &Type) -> String {
    let mut out = String::new();
    write_type(&mut out, t);
    out
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut p = Printer::new();
    p.expr(e, OPEN);
    p.out
}

pub fn pretty_item(item: &Item) -> String {
    let mut p = Printer::new();
    p.item(item);
    p.out
}

pub fn pretty_program(prog: &Program) -> String {
    let mut p = Printer::new();
    for (i, item) in prog.items().iter().enumerate() {
        if i > 0 {
            p.out.push_str("\n\n");
        }
        p.item(item);
    }
    p.out.push('\n');
    p.out
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_type(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_program(self))
    }
}

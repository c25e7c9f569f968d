//! Kinding and typing rules, call-site instantiation of operator types, and
//! whole-program checking (which also elaborates `Grad` nodes).

mod checker;
mod kinds;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde_json::json;

use crate::ast::{Kind, Span, Type};

pub use checker::{check_program, check_program_with, type_of, Checker, TypedProgram};
pub use kinds::{instantiate, kind_of, Substitution};

/// Inference-rule labels, plus the named rules for ascription, instantiation,
/// scoping and operator registration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    BaseTypeT,
    ShapeT,
    TensorT,
    ArrowT,
    QuantifierT,
    ProductT,
    RefT,
    IntLiteral,
    FloatLiteral,
    BoolLiteral,
    TensorLiteral,
    Product,
    Projection,
    Let,
    UnaryOp,
    NoncompBinaryOp,
    CompBinaryOp,
    FunctionDefinition,
    Call,
    If,
    Zero,
    Gradient,
    Ref,
    ValRef,
    SetRef,
    CastAscription,
    Instantiate,
    Scope,
    OperatorDeclaration,
}

impl Rule {
    pub const KINDING: [Rule; 7] = [
        Rule::BaseTypeT,
        Rule::ShapeT,
        Rule::TensorT,
        Rule::ArrowT,
        Rule::QuantifierT,
        Rule::ProductT,
        Rule::RefT,
    ];

    pub const TYPING: [Rule; 18] = [
        Rule::IntLiteral,
        Rule::FloatLiteral,
        Rule::BoolLiteral,
        Rule::TensorLiteral,
        Rule::Product,
        Rule::Projection,
        Rule::Let,
        Rule::UnaryOp,
        Rule::NoncompBinaryOp,
        Rule::CompBinaryOp,
        Rule::FunctionDefinition,
        Rule::Call,
        Rule::If,
        Rule::Zero,
        Rule::Gradient,
        Rule::Ref,
        Rule::ValRef,
        Rule::SetRef,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Rule::BaseTypeT => "BaseType-T",
            Rule::ShapeT => "Shape-T",
            Rule::TensorT => "Tensor-T",
            Rule::ArrowT => "Arrow-T",
            Rule::QuantifierT => "Quantifier-T",
            Rule::ProductT => "Product-T",
            Rule::RefT => "Ref-T",
            Rule::IntLiteral => "Type-Int-Literal",
            Rule::FloatLiteral => "Type-Float-Literal",
            Rule::BoolLiteral => "Type-Bool-Literal",
            Rule::TensorLiteral => "Type-Tensor-Literal",
            Rule::Product => "Type-Product",
            Rule::Projection => "Type-Projection",
            Rule::Let => "Type-Let",
            Rule::UnaryOp => "Type-UnaryOp",
            Rule::NoncompBinaryOp => "Type-Noncomp-BinaryOp",
            Rule::CompBinaryOp => "Type-Comp-BinaryOp",
            Rule::FunctionDefinition => "Type-Function-Definition",
            Rule::Call => "Type-Call",
            Rule::If => "Type-If",
            Rule::Zero => "Type-Zero",
            Rule::Gradient => "Type-Gradient",
            Rule::Ref => "Type-Ref",
            Rule::ValRef => "Type-Val-Ref",
            Rule::SetRef => "Type-Set-Ref",
            Rule::CastAscription => "Cast-Ascription",
            Rule::Instantiate => "Instantiate",
            Rule::Scope => "Scope",
            Rule::OperatorDeclaration => "Operator-Declaration",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: [{rule}] {message}")]
pub struct TypeError {
    pub rule: Rule,
    pub message: String,
    pub span: Span,
}

impl TypeError {
    pub fn new(rule: Rule, message: impl Into<String>) -> TypeError {
        TypeError {
            rule,
            message: message.into(),
            span: Span::default(),
        }
    }

    pub fn at(mut self, span: Span) -> TypeError {
        if self.span == Span::default() {
            self.span = span;
        }
        self
    }

    /// `{"rule": ..., "message": ..., "span": {...}}`
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "rule": self.rule.label(),
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

/// Δ (type variables to kinds), Γ (locals to types) and the global signatures.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv {
    pub delta: Vec<(String, Kind)>,
    pub gamma: Vec<(String, Type)>,
    pub globals: HashMap<String, Type>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn with_type_var(mut self, name: impl Into<String>, kind: Kind) -> TypeEnv {
        self.delta.push((name.into(), kind));
        self
    }

    pub fn with_local(mut self, name: impl Into<String>, ty: Type) -> TypeEnv {
        self.gamma.push((name.into(), ty));
        self
    }

    pub fn with_global(mut self, name: impl Into<String>, ty: Type) -> TypeEnv {
        self.globals.insert(name.into(), ty);
        self
    }

    pub fn kind_of_var(&self, name: &str) -> Option<Kind> {
        self.delta
            .iter()
            .rev()
            .find(|(v, _)| v == name)
            .map(|(_, k)| *k)
    }

    pub fn local(&self, name: &str) -> Option<&Type> {
        self.gamma
            .iter()
            .rev()
            .find(|(v, _)| v == name)
            .map(|(_, t)| t)
    }
}

pub(crate) fn subst_all(t: &Type, s: &BTreeMap<String, Type>) -> Type {
    s.iter()
        .fold(t.clone(), |acc, (v, r)| crate::ast::subst_type(&acc, v, r))
}

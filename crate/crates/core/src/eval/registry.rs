use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::tensor::{check_range, round_float, Data, FloatMode, Tensor};
use super::RuntimeError;
use crate::ast::{BaseType, BinOp, Expr, Kind, Shape, Type};
use crate::autodiff::{accumulate, AdjointRule};
use crate::syntax::parse_type;
use crate::typecheck::{kind_of, TypeEnv};

type OpEval = dyn Fn(&[Tensor], FloatMode) -> Result<Tensor, RuntimeError> + Send + Sync;

/// A primitive implemented in Rust and called from programs through an
/// `operator` declaration of the same name and type.
#[derive(Clone)]
pub struct OperatorImpl {
    pub name: String,
    pub ty: Type,
    pub eval: Arc<OpEval>,
    pub adjoint: Option<AdjointRule>,
}

impl OperatorImpl {
    pub fn new(
        name: impl Into<String>,
        ty: Type,
        eval: impl Fn(&[Tensor], FloatMode) -> Result<Tensor, RuntimeError> + Send + Sync + 'static,
    ) -> OperatorImpl {
        OperatorImpl {
            name: name.into(),
            ty,
            eval: Arc::new(eval),
            adjoint: None,
        }
    }

    pub fn with_adjoint(mut self, rule: AdjointRule) -> OperatorImpl {
        self.adjoint = Some(rule);
        self
    }
}

impl fmt::Debug for OperatorImpl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorImpl")
            .field("name", &self.name)
            .field("ty", &crate::ast::pretty_type(&self.ty))
            .field("adjoint", &self.adjoint.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("operator `@{0}` is already registered")]
    Duplicate(String),
    #[error("operator `@{name}` has an ill-kinded type: {message}")]
    Kind { name: String, message: String },
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    ops: BTreeMap<String, OperatorImpl>,
}

impl Registry {
    pub fn empty() -> Registry {
        Registry::default()
    }

    /// `@sum` and `@dot`, plus `@ones_like` and `@broadcast_like`, which
    /// gradient elaboration emits.
    pub fn builtin() -> Registry {
        let mut r = Registry::empty();
        for op in [sum(), dot(), ones_like(), broadcast_like()] {
            r.register(op).expect("builtins are distinct and well-kinded");
        }
        r
    }

    pub fn register(&mut self, op: OperatorImpl) -> Result<(), RegistryError> {
        if self.ops.contains_key(&op.name) {
            return Err(RegistryError::Duplicate(op.name));
        }
        match kind_of(&TypeEnv::new(), &op.ty) {
            Ok(Kind::Type) => {}
            Ok(k) => {
                return Err(RegistryError::Kind {
                    name: op.name,
                    message: format!("expected kind Type, found {k}"),
                })
            }
            Err(e) => {
                return Err(RegistryError::Kind {
                    name: op.name,
                    message: e.message,
                })
            }
        }
        self.ops.insert(op.name.clone(), op);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&OperatorImpl> {
        self.ops.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ops.keys().map(String::as_str)
    }
}

/// Functional form of [`Registry::register`].
pub fn register_operator(mut registry: Registry, op: OperatorImpl) -> Result<Registry, RegistryError> {
    registry.register(op)?;
    Ok(registry)
}

fn builtin_type(src: &str) -> Type {
    parse_type(src, false).expect("builtin operator types parse")
}

pub const SUM_TYPE: &str = "forall (B : BaseType), forall (S : Shape), Tensor(B, S) -> Tensor(B, Shape())";
pub const DOT_TYPE: &str =
    "forall (B : BaseType), forall (S : Shape), (Tensor(B, S), Tensor(B, S)) -> Tensor(B, Shape())";
pub const ONES_LIKE_TYPE: &str = "forall (B : BaseType), forall (S : Shape), Tensor(B, S) -> Tensor(B, S)";
pub const BROADCAST_LIKE_TYPE: &str =
    "forall (B : BaseType), forall (S : Shape), (Tensor(B, Shape()), Tensor(B, S)) -> Tensor(B, S)";

fn scalar_like(base: BaseType, acc: Accum) -> Result<Tensor, RuntimeError> {
    let data = match acc {
        Accum::Float(v) => Data::Float(vec![v]),
        Accum::Int(v) => {
            check_range(base, &[v])?;
            Data::Int(vec![v])
        }
    };
    Tensor::new(base, Shape::scalar(), data)
}

enum Accum {
    Float(f64),
    Int(i128),
}

fn sum() -> OperatorImpl {
    OperatorImpl::new("sum", builtin_type(SUM_TYPE), |args, mode| {
        let x = &args[0];
        let acc = match &x.data {
            Data::Float(v) => Accum::Float(
                v.iter()
                    .fold(0.0, |s, e| round_float(x.base, s + e, mode)),
            ),
            Data::Int(v) => {
                let mut s: i128 = 0;
                for e in v {
                    s = s
                        .checked_add(*e)
                        .ok_or_else(|| RuntimeError::new("integer overflow in @sum"))?;
                }
                Accum::Int(s)
            }
            Data::Bool(_) => return Err(RuntimeError::new("@sum over a Bool tensor")),
        };
        scalar_like(x.base, acc)
    })
    .with_adjoint(AdjointRule::new(&["broadcast_like"], |a| {
        let Some(x_adj) = &a.adjoints[0] else {
            return Vec::new();
        };
        vec![accumulate(
            x_adj,
            Expr::call(
                Expr::global("broadcast_like"),
                vec![a.grad.clone(), a.values[0].clone()],
            ),
        )]
    }))
}

fn dot() -> OperatorImpl {
    OperatorImpl::new("dot", builtin_type(DOT_TYPE), |args, mode| {
        let (x, y) = (&args[0], &args[1]);
        let acc = match (&x.data, &y.data) {
            (Data::Float(a), Data::Float(b)) => Accum::Float(a.iter().zip(b).fold(0.0, |s, (p, q)| {
                let prod = round_float(x.base, p * q, mode);
                round_float(x.base, s + prod, mode)
            })),
            (Data::Int(a), Data::Int(b)) => {
                let mut s: i128 = 0;
                for (p, q) in a.iter().zip(b) {
                    s = p
                        .checked_mul(*q)
                        .and_then(|m| s.checked_add(m))
                        .ok_or_else(|| RuntimeError::new("integer overflow in @dot"))?;
                }
                Accum::Int(s)
            }
            _ => return Err(RuntimeError::new("@dot needs two numeric tensors of one type")),
        };
        scalar_like(x.base, acc)
    })
    .with_adjoint(AdjointRule::new(&["broadcast_like"], |a| {
        let mut out = Vec::new();
        for (i, other) in [(0usize, 1usize), (1, 0)] {
            if let Some(adj) = &a.adjoints[i] {
                let spread = Expr::call(
                    Expr::global("broadcast_like"),
                    vec![a.grad.clone(), a.values[other].clone()],
                );
                out.push(accumulate(
                    adj,
                    Expr::binary(BinOp::Mul, spread, a.values[other].clone()),
                ));
            }
        }
        out
    }))
}

fn ones_like() -> OperatorImpl {
    OperatorImpl::new("ones_like", builtin_type(ONES_LIKE_TYPE), |args, _| {
        Ok(Tensor::ones(args[0].base, args[0].shape.clone()))
    })
    .with_adjoint(AdjointRule::constant())
}

fn broadcast_like() -> OperatorImpl {
    OperatorImpl::new("broadcast_like", builtin_type(BROADCAST_LIKE_TYPE), |args, _| {
        let (s, like) = (&args[0], &args[1]);
        let n = like.shape.size();
        let data = match &s.data {
            Data::Float(v) => Data::Float(vec![v[0]; n]),
            Data::Int(v) => Data::Int(vec![v[0]; n]),
            Data::Bool(v) => Data::Bool(vec![v[0]; n]),
        };
        Tensor::new(s.base, like.shape.clone(), data)
    })
    .with_adjoint(AdjointRule::new(&["sum"], |a| {
        let Some(s_adj) = &a.adjoints[0] else {
            return Vec::new();
        };
        vec![accumulate(
            s_adj,
            Expr::call(Expr::global("sum"), vec![a.grad.clone()]),
        )]
    }))
}

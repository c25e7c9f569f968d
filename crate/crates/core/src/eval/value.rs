use std::fmt;
use std::rc::Rc;

use super::tensor::{round_float, Data, FloatMode, Tensor};
use super::RuntimeError;
use crate::ast::{BaseType, Expr, Param, Shape, Type};

/// Runtime values. Closures borrow their code from the program being run.
#[derive(Clone)]
pub enum Value<'p> {
    Tensor(Tensor),
    Tuple(Vec<Value<'p>>),
    Closure(Rc<Closure<'p>>),
    /// A global definition or operator used as a value.
    Op(String),
    Ref(usize),
}

pub struct Closure<'p> {
    pub params: &'p [Param],
    pub body: &'p Expr,
    pub env: Env<'p>,
}

/// Persistent environment: extending shares the tail.
#[derive(Clone, Default)]
pub struct Env<'p>(Option<Rc<EnvNode<'p>>>);

pub struct EnvNode<'p> {
    name: &'p str,
    value: Value<'p>,
    next: Env<'p>,
}

// Long chains would otherwise drop recursively.
impl Drop for EnvNode<'_> {
    fn drop(&mut self) {
        let mut next = self.next.0.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => next = node.next.0.take(),
                Err(_) => break,
            }
        }
    }
}

impl<'p> Env<'p> {
    pub fn bind(&self, name: &'p str, value: Value<'p>) -> Env<'p> {
        Env(Some(Rc::new(EnvNode {
            name,
            value,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value<'p>> {
        let mut cur = self.0.as_deref();
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.value);
            }
            cur = node.next.0.as_deref();
        }
        None
    }
}

impl<'p> Value<'p> {
    pub fn unit() -> Value<'p> {
        Value::Tuple(Vec::new())
    }

    pub fn as_tensor(&self) -> Option<&Tensor> {
        match self {
            Value::Tensor(t) => Some(t),
            _ => None,
        }
    }

    pub fn into_tensor(self) -> Option<Tensor> {
        match self {
            Value::Tensor(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value<'p>]> {
        match self {
            Value::Tuple(vs) => Some(vs),
            _ => None,
        }
    }

    /// Whether the value has the shape of `ty`: tensor base and dims, tuple
    /// arity, and the right constructor for functions and references.
    pub fn conforms(&self, ty: &Type) -> bool {
        match (self, ty) {
            (Value::Tensor(t), _) => ty
                .as_tensor()
                .is_some_and(|(b, s)| b == t.base && *s == t.shape),
            (Value::Tuple(vs), Type::Product(ts)) => {
                vs.len() == ts.len() && vs.iter().zip(ts).all(|(v, t)| v.conforms(t))
            }
            (Value::Closure(c), Type::Arrow(d, _)) => c.params.len() == d.len(),
            (Value::Op(_), Type::Arrow(..)) => true,
            (Value::Ref(_), Type::Ref(_)) => true,
            _ => false,
        }
    }

    /// Runtime type where it is observable without the store; closures and
    /// references report only their constructor.
    pub fn describe(&self) -> String {
        match self {
            Value::Tensor(t) => crate::ast::pretty_type(&t.ty()),
            Value::Tuple(vs) => {
                let parts: Vec<String> = vs.iter().map(Value::describe).collect();
                if parts.len() == 1 {
                    format!("({},)", parts[0])
                } else {
                    format!("({})", parts.join(", "))
                }
            }
            Value::Closure(_) | Value::Op(_) => "function".into(),
            Value::Ref(_) => "reference".into(),
        }
    }
}

impl PartialEq for Value<'_> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Tensor(a), Value::Tensor(b)) => a == b,
            (Value::Tuple(a), Value::Tuple(b)) => a == b,
            (Value::Closure(a), Value::Closure(b)) => Rc::ptr_eq(a, b),
            (Value::Op(a), Value::Op(b)) => a == b,
            (Value::Ref(a), Value::Ref(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Tensor(t) => write!(f, "{t}"),
            Value::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            Value::Closure(_) => f.write_str("<closure>"),
            Value::Op(name) => write!(f, "@{name}"),
            Value::Ref(a) => write!(f, "<ref {a}>"),
        }
    }
}

impl fmt::Debug for Value<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl From<Tensor> for Value<'_> {
    fn from(t: Tensor) -> Self {
        Value::Tensor(t)
    }
}

/// Parses a value literal against the type it is passed for: `3`, `1.5`,
/// `true`, nested lists such as `[[1, 2], [3, 4]]`, and tuples written
/// `(a, b)` or `[a, b]`. Printed values read back unchanged.
pub fn parse_value(text: &str, ty: &Type) -> Result<Value<'static>, RuntimeError> {
    let normalized = text
        .trim()
        .replace("True", "true")
        .replace("False", "false")
        .replace('(', "[")
        .replace(')', "]");
    let json: serde_json::Value = serde_json::from_str(&normalized)
        .map_err(|e| RuntimeError::new(format!("malformed value `{text}`: {e}")))?;
    coerce(&json, ty).map_err(|m| RuntimeError::new(format!("value `{text}` for `{}`: {m}", crate::ast::pretty_type(ty))))
}

fn coerce(json: &serde_json::Value, ty: &Type) -> Result<Value<'static>, String> {
    if let Some((base, shape)) = ty.as_tensor() {
        let mut leaves = Vec::new();
        flatten(json, shape.dims(), &mut leaves)?;
        let data = match base {
            BaseType::Float(_) => Data::Float(
                leaves
                    .iter()
                    .map(|l| {
                        l.as_f64()
                            .map(|v| round_float(base, v, FloatMode::Native))
                            .ok_or_else(|| format!("expected a number, found {l}"))
                    })
                    .collect::<Result<_, _>>()?,
            ),
            BaseType::Int(_) | BaseType::UInt(_) => Data::Int(
                leaves
                    .iter()
                    .map(|l| {
                        l.as_i64()
                            .map(i128::from)
                            .or_else(|| l.as_u64().map(i128::from))
                            .ok_or_else(|| format!("expected an integer, found {l}"))
                    })
                    .collect::<Result<_, _>>()?,
            ),
            BaseType::Bool => Data::Bool(
                leaves
                    .iter()
                    .map(|l| l.as_bool().ok_or_else(|| format!("expected a boolean, found {l}")))
                    .collect::<Result<_, _>>()?,
            ),
        };
        return Tensor::new(base, Shape(shape.dims().to_vec()), data)
            .map(Value::Tensor)
            .map_err(|e| e.message);
    }
    match ty {
        Type::Product(ts) => {
            let items = json
                .as_array()
                .filter(|a| a.len() == ts.len())
                .ok_or_else(|| format!("expected a list of {} component(s)", ts.len()))?;
            items
                .iter()
                .zip(ts)
                .map(|(j, t)| coerce(j, t))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Tuple)
        }
        _ => Err("only tensors and tuples can be given as literals".into()),
    }
}

fn flatten<'j>(json: &'j serde_json::Value, dims: &[u64], out: &mut Vec<&'j serde_json::Value>) -> Result<(), String> {
    match dims.split_first() {
        None => {
            if json.is_array() {
                return Err("nested list is deeper than the shape".into());
            }
            out.push(json);
            Ok(())
        }
        Some((&n, rest)) => {
            let items = json
                .as_array()
                .ok_or_else(|| format!("expected a list of {n} element(s)"))?;
            if items.len() as u64 != n {
                return Err(format!("expected {n} element(s), found {}", items.len()));
            }
            items.iter().try_for_each(|j| flatten(j, rest, out))
        }
    }
}

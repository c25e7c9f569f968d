use std::fmt;

use super::RuntimeError;
use crate::ast::{BaseType, BinOp, Shape, Type, UnaryOp};

/// Flat row-major storage. Floats are held as `f64` whatever their width;
/// integers as `i128` so every supported width fits with room to detect
/// overflow.
#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    Float(Vec<f64>),
    Int(Vec<i128>),
    Bool(Vec<bool>),
}

impl Data {
    pub fn len(&self) -> usize {
        match self {
            Data::Float(v) => v.len(),
            Data::Int(v) => v.len(),
            Data::Bool(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How `FloatType(32)` arithmetic is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FloatMode {
    /// Round every 32-bit float result to single precision.
    #[default]
    Native,
    /// Compute every float in double precision, whatever its declared width.
    Widened,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub base: BaseType,
    pub shape: Shape,
    pub data: Data,
}

pub(crate) fn int_range(base: BaseType) -> (i128, i128) {
    match base {
        BaseType::Int(w) => (-(1i128 << (w - 1)), (1i128 << (w - 1)) - 1),
        BaseType::UInt(w) => (0, (1i128 << w) - 1),
        _ => (i128::MIN, i128::MAX),
    }
}

pub(crate) fn round_float(base: BaseType, v: f64, mode: FloatMode) -> f64 {
    if base == BaseType::F32 && mode == FloatMode::Native {
        v as f32 as f64
    } else {
        v
    }
}

impl Tensor {
    pub fn new(base: BaseType, shape: Shape, data: Data) -> Result<Tensor, RuntimeError> {
        if data.len() != shape.size() {
            return Err(RuntimeError::new(format!(
                "tensor data has {} element(s) but shape {:?} needs {}",
                data.len(),
                shape.dims(),
                shape.size()
            )));
        }
        let ok = matches!(
            (&data, base),
            (Data::Float(_), BaseType::Float(_))
                | (Data::Int(_), BaseType::Int(_) | BaseType::UInt(_))
                | (Data::Bool(_), BaseType::Bool)
        );
        if !ok {
            return Err(RuntimeError::new(format!(
                "data does not match base type `{}`",
                crate::ast::base_type_text(base)
            )));
        }
        if let Data::Int(v) = &data {
            let (lo, hi) = int_range(base);
            if let Some(x) = v.iter().find(|x| **x < lo || **x > hi) {
                return Err(RuntimeError::new(format!(
                    "{x} is out of range for `{}`",
                    crate::ast::base_type_text(base)
                )));
            }
        }
        Ok(Tensor { base, shape, data })
    }

    pub fn zeros(base: BaseType, shape: Shape) -> Tensor {
        Tensor::filled(base, shape, 0.0)
    }

    pub fn ones(base: BaseType, shape: Shape) -> Tensor {
        Tensor::filled(base, shape, 1.0)
    }

    fn filled(base: BaseType, shape: Shape, v: f64) -> Tensor {
        let n = shape.size();
        let data = match base {
            BaseType::Float(_) => Data::Float(vec![v; n]),
            BaseType::Int(_) | BaseType::UInt(_) => Data::Int(vec![v as i128; n]),
            BaseType::Bool => Data::Bool(vec![v != 0.0; n]),
        };
        Tensor { base, shape, data }
    }

    pub fn float(base: BaseType, shape: impl Into<Shape>, data: Vec<f64>) -> Result<Tensor, RuntimeError> {
        Tensor::new(base, shape.into(), Data::Float(data))
    }

    pub fn scalar_f32(v: f64) -> Tensor {
        Tensor {
            base: BaseType::F32,
            shape: Shape::scalar(),
            data: Data::Float(vec![v]),
        }
    }

    pub fn scalar_f64(v: f64) -> Tensor {
        Tensor {
            base: BaseType::F64,
            shape: Shape::scalar(),
            data: Data::Float(vec![v]),
        }
    }

    pub fn scalar_i32(v: i64) -> Tensor {
        Tensor {
            base: BaseType::I32,
            shape: Shape::scalar(),
            data: Data::Int(vec![v as i128]),
        }
    }

    pub fn scalar_bool(v: bool) -> Tensor {
        Tensor {
            base: BaseType::Bool,
            shape: Shape::scalar(),
            data: Data::Bool(vec![v]),
        }
    }

    pub fn ty(&self) -> Type {
        Type::tensor(self.base, self.shape.clone())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn floats(&self) -> Option<&[f64]> {
        match &self.data {
            Data::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn floats_mut(&mut self) -> Option<&mut Vec<f64>> {
        match &mut self.data {
            Data::Float(v) => Some(v),
            _ => None,
        }
    }

    /// The single element of a scalar float tensor.
    pub fn as_f64(&self) -> Option<f64> {
        match (&self.data, self.shape.rank()) {
            (Data::Float(v), 0) => Some(v[0]),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match (&self.data, self.shape.rank()) {
            (Data::Bool(v), 0) => Some(v[0]),
            _ => None,
        }
    }

    /// Stacks equally-typed tensors along a new leading axis.
    pub fn stack(parts: Vec<Tensor>) -> Result<Tensor, RuntimeError> {
        let Some(first) = parts.first() else {
            return Err(RuntimeError::new("empty tensor literal"));
        };
        let base = first.base;
        let mut dims = vec![parts.len() as u64];
        dims.extend_from_slice(first.shape.dims());
        let inner = first.shape.clone();
        let mut data = match &first.data {
            Data::Float(_) => Data::Float(Vec::new()),
            Data::Int(_) => Data::Int(Vec::new()),
            Data::Bool(_) => Data::Bool(Vec::new()),
        };
        for p in parts {
            if p.base != base || p.shape != inner {
                return Err(RuntimeError::new("tensor literal elements differ in type"));
            }
            match (&mut data, p.data) {
                (Data::Float(d), Data::Float(s)) => d.extend(s),
                (Data::Int(d), Data::Int(s)) => d.extend(s),
                (Data::Bool(d), Data::Bool(s)) => d.extend(s),
                _ => return Err(RuntimeError::new("tensor literal elements differ in type")),
            }
        }
        Tensor::new(base, Shape(dims), data)
    }

    fn check_same(&self, other: &Tensor, what: &str) -> Result<(), RuntimeError> {
        if self.base != other.base || self.shape != other.shape {
            return Err(RuntimeError::new(format!(
                "operands of `{what}` differ: `{}` vs `{}`",
                crate::ast::pretty_type(&self.ty()),
                crate::ast::pretty_type(&other.ty())
            )));
        }
        Ok(())
    }
}

/// Elementwise primitive on equally-typed operands.
pub fn eval_binary(op: BinOp, a: &Tensor, b: &Tensor, mode: FloatMode) -> Result<Tensor, RuntimeError> {
    a.check_same(b, op.symbol())?;
    let base = a.base;
    let shape = a.shape.clone();
    if op.is_comparison() {
        let out: Vec<bool> = match (&a.data, &b.data) {
            (Data::Float(x), Data::Float(y)) => x.iter().zip(y).map(|(p, q)| compare(op, p, q)).collect(),
            (Data::Int(x), Data::Int(y)) => x.iter().zip(y).map(|(p, q)| compare(op, p, q)).collect(),
            (Data::Bool(x), Data::Bool(y)) => x.iter().zip(y).map(|(p, q)| compare(op, p, q)).collect(),
            _ => unreachable!("operands checked equal"),
        };
        return Ok(Tensor {
            base: BaseType::Bool,
            shape,
            data: Data::Bool(out),
        });
    }
    let data = match (&a.data, &b.data) {
        (Data::Float(x), Data::Float(y)) => Data::Float(
            x.iter()
                .zip(y)
                .map(|(p, q)| {
                    let r = match op {
                        BinOp::Add => p + q,
                        BinOp::Sub => p - q,
                        BinOp::Mul => p * q,
                        BinOp::Div => p / q,
                        _ => unreachable!(),
                    };
                    round_float(base, r, mode)
                })
                .collect(),
        ),
        (Data::Int(x), Data::Int(y)) => {
            let mut out = Vec::with_capacity(x.len());
            for (p, q) in x.iter().zip(y) {
                let r = match op {
                    BinOp::Add => p.checked_add(*q),
                    BinOp::Sub => p.checked_sub(*q),
                    BinOp::Mul => p.checked_mul(*q),
                    BinOp::Div => {
                        if *q == 0 {
                            return Err(RuntimeError::new("integer division by zero"));
                        }
                        p.checked_div(*q)
                    }
                    _ => unreachable!(),
                };
                out.push(r.ok_or_else(|| overflow(base))?);
            }
            check_range(base, &out)?;
            Data::Int(out)
        }
        _ => {
            return Err(RuntimeError::new(format!(
                "arithmetic `{}` on non-numeric tensors",
                op.symbol()
            )))
        }
    };
    Ok(Tensor { base, shape, data })
}

pub fn eval_unary(op: UnaryOp, a: &Tensor, mode: FloatMode) -> Result<Tensor, RuntimeError> {
    let base = a.base;
    let data = match &a.data {
        Data::Float(x) => Data::Float(
            x.iter()
                .map(|v| {
                    let r = match op {
                        UnaryOp::Neg => -v,
                        UnaryOp::Sq => v * v,
                    };
                    round_float(base, r, mode)
                })
                .collect(),
        ),
        Data::Int(x) => {
            let mut out = Vec::with_capacity(x.len());
            for v in x {
                let r = match op {
                    UnaryOp::Neg => v.checked_neg(),
                    UnaryOp::Sq => v.checked_mul(*v),
                };
                out.push(r.ok_or_else(|| overflow(base))?);
            }
            check_range(base, &out)?;
            Data::Int(out)
        }
        Data::Bool(_) => {
            return Err(RuntimeError::new(format!(
                "`{}` on a Bool tensor",
                op.symbol()
            )))
        }
    };
    Ok(Tensor {
        base,
        shape: a.shape.clone(),
        data,
    })
}

fn compare<T: PartialOrd>(op: BinOp, p: &T, q: &T) -> bool {
    match op {
        BinOp::Eq => p == q,
        BinOp::Ne => p != q,
        BinOp::Lt => p < q,
        BinOp::Le => p <= q,
        BinOp::Gt => p > q,
        BinOp::Ge => p >= q,
        _ => unreachable!("arithmetic is not a comparison"),
    }
}

fn overflow(base: BaseType) -> RuntimeError {
    RuntimeError::new(format!(
        "integer overflow in `{}`",
        crate::ast::base_type_text(base)
    ))
}

pub(crate) fn check_range(base: BaseType, v: &[i128]) -> Result<(), RuntimeError> {
    let (lo, hi) = int_range(base);
    if v.iter().any(|x| *x < lo || *x > hi) {
        return Err(overflow(base));
    }
    Ok(())
}

fn write_float(f: &mut fmt::Formatter<'_>, base: BaseType, v: f64) -> fmt::Result {
    if base == BaseType::F32 {
        write!(f, "{}", v as f32)
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Tensor, f: &mut fmt::Formatter<'_>, dims: &[u64], offset: usize) -> fmt::Result {
            match dims.split_first() {
                None => match &t.data {
                    Data::Float(v) => write_float(f, t.base, v[offset]),
                    Data::Int(v) => write!(f, "{}", v[offset]),
                    Data::Bool(v) => write!(f, "{}", v[offset]),
                },
                Some((&n, rest)) => {
                    let stride: usize = rest.iter().map(|&d| d as usize).product();
                    f.write_str("[")?;
                    for i in 0..n as usize {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        go(t, f, rest, offset + i * stride)?;
                    }
                    f.write_str("]")
                }
            }
        }
        go(self, f, self.shape.dims(), 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_f32(v: &[f64]) -> Tensor {
        Tensor::float(BaseType::F32, vec![v.len() as u64], v.to_vec()).unwrap()
    }

    fn vec_i32(v: &[i128]) -> Tensor {
        Tensor::new(BaseType::I32, Shape(vec![v.len() as u64]), Data::Int(v.to_vec())).unwrap()
    }

    #[test]
    fn elementwise_multiply() {
        let r = eval_binary(BinOp::Mul, &vec_f32(&[1.0, 2.0]), &vec_f32(&[3.0, 4.0]), FloatMode::Native).unwrap();
        assert_eq!(r.floats().unwrap(), &[3.0, 8.0]);
    }

    #[test]
    fn elementwise_compare() {
        let r = eval_binary(BinOp::Lt, &vec_i32(&[1, 2]), &vec_i32(&[2, 2]), FloatMode::Native).unwrap();
        assert_eq!(r.data, Data::Bool(vec![true, false]));
    }

    #[test]
    fn integer_division_by_zero() {
        let e = eval_binary(BinOp::Div, &Tensor::scalar_i32(1), &Tensor::scalar_i32(0), FloatMode::Native)
            .unwrap_err();
        assert!(e.message.contains("integer division by zero"));
    }

    #[test]
    fn integer_overflow_is_checked() {
        let big = Tensor::scalar_i32(i32::MAX as i64);
        assert!(eval_binary(BinOp::Add, &big, &Tensor::scalar_i32(1), FloatMode::Native).is_err());
    }

    #[test]
    fn float_division_is_ieee() {
        let r = eval_binary(BinOp::Div, &Tensor::scalar_f64(1.0), &Tensor::scalar_f64(0.0), FloatMode::Native)
            .unwrap();
        assert_eq!(r.as_f64(), Some(f64::INFINITY));
    }

    #[test]
    fn f32_rounds_in_native_mode() {
        let third = eval_binary(BinOp::Div, &Tensor::scalar_f32(1.0), &Tensor::scalar_f32(3.0), FloatMode::Native)
            .unwrap();
        assert_eq!(third.as_f64(), Some((1.0f32 / 3.0f32) as f64));
        let wide = eval_binary(BinOp::Div, &Tensor::scalar_f32(1.0), &Tensor::scalar_f32(3.0), FloatMode::Widened)
            .unwrap();
        assert_eq!(wide.as_f64(), Some(1.0 / 3.0));
    }

    #[test]
    fn display_nested() {
        let t = Tensor::float(BaseType::F32, vec![2, 2], vec![1.0, 2.0, 3.0, 4.5]).unwrap();
        assert_eq!(t.to_string(), "[[1, 2], [3, 4.5]]");
    }
}

use std::rc::Rc;

use super::tensor::{eval_binary, eval_unary, Data, FloatMode, Tensor};
use super::value::{Closure, Env, Value};
use super::RuntimeError;
use crate::ast::{pretty_type, BinOp, Expr, ExprKind, Param, Type};
use crate::typecheck::TypedProgram;

pub const DEFAULT_MAX_DEPTH: usize = 10_000;

/// Default call-depth limit, overridable through `GRADIR_DEPTH`.
pub fn default_max_depth() -> usize {
    std::env::var("GRADIR_DEPTH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_DEPTH)
}

/// Smallest float divisor, smallest float comparison margin and a hash of
/// every comparison outcome seen during one evaluation. Used to keep
/// gradient checks away from singular points and branch switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub min_divisor: f64,
    pub min_margin: f64,
    pub branches: u64,
}

impl Default for Probe {
    fn default() -> Self {
        Probe {
            min_divisor: f64::INFINITY,
            min_margin: f64::INFINITY,
            branches: 0xcbf2_9ce4_8422_2325,
        }
    }
}

/// Tree-walking evaluator with a private store.
pub struct Interpreter<'p> {
    program: &'p TypedProgram,
    store: Vec<Value<'p>>,
    depth: usize,
    max_depth: usize,
    mode: FloatMode,
    probe: Option<Probe>,
}

impl<'p> Interpreter<'p> {
    pub fn new(program: &'p TypedProgram) -> Interpreter<'p> {
        Interpreter {
            program,
            store: Vec::new(),
            depth: 0,
            max_depth: default_max_depth(),
            mode: FloatMode::Native,
            probe: None,
        }
    }

    pub fn with_mode(mut self, mode: FloatMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn with_probe(mut self) -> Self {
        self.probe = Some(Probe::default());
        self
    }

    pub fn probe(&self) -> Option<Probe> {
        self.probe
    }

    /// Number of reference cells allocated so far.
    pub fn store_len(&self) -> usize {
        self.store.len()
    }

    /// Calls a global definition after checking the arguments against its
    /// parameter types.
    pub fn call(&mut self, entry: &str, args: Vec<Value<'p>>) -> Result<Value<'p>, RuntimeError> {
        let def = self
            .program
            .program()
            .definition(entry)
            .ok_or_else(|| RuntimeError::new(format!("no definition named `@{entry}`")))?;
        if def.params.len() != args.len() {
            return Err(RuntimeError::new(format!(
                "`@{entry}` takes {} argument(s), {} given",
                def.params.len(),
                args.len()
            )));
        }
        for (p, a) in def.params.iter().zip(&args) {
            if !a.conforms(&p.ty) {
                return Err(RuntimeError::new(format!(
                    "argument `{}` of `@{entry}` expects `{}`, got `{}`",
                    p.name,
                    pretty_type(&p.ty),
                    a.describe()
                )));
            }
        }
        self.call_value(Value::Op(entry.to_string()), args)
    }

    pub fn eval(&mut self, e: &'p Expr, env: Env<'p>) -> Result<Value<'p>, RuntimeError> {
        stacker::maybe_grow(128 * 1024, 4 * 1024 * 1024, || self.eval_tail(e, env))
    }

    /// Let, If and Cast continue in place so long chains do not nest.
    fn eval_tail(&mut self, mut e: &'p Expr, mut env: Env<'p>) -> Result<Value<'p>, RuntimeError> {
        loop {
            match &e.kind {
                ExprKind::Let {
                    binder,
                    value,
                    body,
                    ..
                } => {
                    let v = self.eval(value, env.clone())?;
                    env = env.bind(binder, v);
                    e = body;
                }
                ExprKind::If(c, t, f) => {
                    let c = self.eval(c, env.clone())?;
                    let b = c
                        .as_tensor()
                        .and_then(Tensor::as_bool)
                        .ok_or_else(|| RuntimeError::new("if condition is not a Bool scalar"))?;
                    e = if b { t } else { f };
                }
                ExprKind::Cast(_, inner) => e = inner,
                _ => return self.eval_node(e, env),
            }
        }
    }

    fn eval_node(&mut self, e: &'p Expr, env: Env<'p>) -> Result<Value<'p>, RuntimeError> {
        use ExprKind as K;
        Ok(match &e.kind {
            K::Local(x) => env
                .lookup(x)
                .cloned()
                .ok_or_else(|| RuntimeError::new(format!("unbound variable `{x}`")))?,
            K::Global(g) => Value::Op(g.clone()),
            K::Int(v) => Value::Tensor(Tensor::scalar_i32(*v)),
            K::Float(v) => Value::Tensor(Tensor::scalar_f32(super::tensor::round_float(
                crate::ast::BaseType::F32,
                *v,
                self.mode,
            ))),
            K::Bool(b) => Value::Tensor(Tensor::scalar_bool(*b)),
            K::Call(callee, args) => {
                let f = self.eval(callee, env.clone())?;
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env.clone())?);
                }
                self.call_value(f, vals)?
            }
            K::Binary(op, l, r) => {
                let l = self.eval(l, env.clone())?;
                let r = self.eval(r, env)?;
                let (Some(a), Some(b)) = (l.as_tensor(), r.as_tensor()) else {
                    return Err(RuntimeError::new(format!("`{}` on non-tensors", op.symbol())));
                };
                let out = eval_binary(*op, a, b, self.mode)?;
                self.observe(*op, a, b, &out);
                Value::Tensor(out)
            }
            K::Unary(op, x) => {
                let x = self.eval(x, env)?;
                let t = x
                    .as_tensor()
                    .ok_or_else(|| RuntimeError::new(format!("`{}` on a non-tensor", op.symbol())))?;
                Value::Tensor(eval_unary(*op, t, self.mode)?)
            }
            K::Tuple(es) => {
                let mut out = Vec::with_capacity(es.len());
                for x in es {
                    out.push(self.eval(x, env.clone())?);
                }
                Value::Tuple(out)
            }
            K::Proj(t, i) => match self.eval(t, env)? {
                Value::Tuple(mut vs) if *i < vs.len() => vs.swap_remove(*i),
                other => {
                    return Err(RuntimeError::new(format!(
                        "cannot take component {i} of `{}`",
                        other.describe()
                    )))
                }
            },
            K::TensorLit(es) => {
                let mut parts = Vec::with_capacity(es.len());
                for x in es {
                    match self.eval(x, env.clone())? {
                        Value::Tensor(t) => parts.push(t),
                        other => {
                            return Err(RuntimeError::new(format!(
                                "tensor literal element is `{}`",
                                other.describe()
                            )))
                        }
                    }
                }
                Value::Tensor(Tensor::stack(parts)?)
            }
            K::Zero(t) => {
                let (b, s) = t.as_tensor().ok_or_else(|| {
                    RuntimeError::new(format!("Zero of non-tensor type `{}`", pretty_type(t)))
                })?;
                Value::Tensor(Tensor::zeros(b, s.clone()))
            }
            K::Grad(_) => {
                return Err(RuntimeError::new(
                    "Grad reached the evaluator; programs must be checked first",
                ))
            }
            K::RefNew(x) => {
                let v = self.eval(x, env)?;
                self.store.push(v);
                Value::Ref(self.store.len() - 1)
            }
            K::RefRead(x) => {
                let addr = self.address(x, env)?;
                self.store[addr].clone()
            }
            K::RefWrite(r, v) => {
                let addr = self.address(r, env.clone())?;
                let v = self.eval(v, env)?;
                self.store[addr] = v;
                Value::unit()
            }
            K::Function { params, body, .. } => Value::Closure(Rc::new(Closure {
                params,
                body,
                env,
            })),
            K::Let { .. } | K::If(..) | K::Cast(..) => self.eval_tail(e, env)?,
        })
    }

    fn address(&mut self, e: &'p Expr, env: Env<'p>) -> Result<usize, RuntimeError> {
        match self.eval(e, env)? {
            Value::Ref(a) if a < self.store.len() => Ok(a),
            other => Err(RuntimeError::new(format!(
                "expected a reference, found `{}`",
                other.describe()
            ))),
        }
    }

    fn observe(&mut self, op: BinOp, a: &Tensor, b: &Tensor, out: &Tensor) {
        let Some(probe) = self.probe.as_mut() else {
            return;
        };
        if let Data::Bool(bits) = &out.data {
            for bit in bits {
                probe.branches = (probe.branches ^ (*bit as u64 + 1)).wrapping_mul(0x100_0000_01b3);
            }
        }
        let (Some(x), Some(y)) = (a.floats(), b.floats()) else {
            return;
        };
        if op == BinOp::Div {
            for v in y {
                probe.min_divisor = probe.min_divisor.min(v.abs());
            }
        } else if op.is_comparison() {
            for (p, q) in x.iter().zip(y) {
                probe.min_margin = probe.min_margin.min((p - q).abs());
            }
        }
    }

    pub fn call_value(&mut self, f: Value<'p>, args: Vec<Value<'p>>) -> Result<Value<'p>, RuntimeError> {
        match f {
            Value::Closure(c) => {
                let env = bind_params(c.params, args, c.env.clone())?;
                self.enter(|this| this.eval(c.body, env))
            }
            Value::Op(name) => {
                let program = self.program;
                if let Some(def) = program.program().definition(&name) {
                    let env = bind_params(&def.params, args, Env::default())?;
                    return self.enter(|this| this.eval(&def.body, env));
                }
                let op = program.registry().get(&name).ok_or_else(|| {
                    RuntimeError::new(format!("operator `@{name}` is not registered"))
                })?;
                let mut tensors = Vec::with_capacity(args.len());
                for a in args {
                    tensors.push(a.into_tensor().ok_or_else(|| {
                        RuntimeError::new(format!("operator `@{name}` takes tensor arguments"))
                    })?);
                }
                Ok(Value::Tensor((op.eval)(&tensors, self.mode)?))
            }
            other => Err(RuntimeError::new(format!(
                "cannot call `{}`",
                other.describe()
            ))),
        }
    }

    fn enter(
        &mut self,
        body: impl FnOnce(&mut Self) -> Result<Value<'p>, RuntimeError>,
    ) -> Result<Value<'p>, RuntimeError> {
        if self.depth >= self.max_depth {
            return Err(RuntimeError::new(format!(
                "recursion depth exceeded (limit {})",
                self.max_depth
            )));
        }
        self.depth += 1;
        let r = body(self);
        self.depth -= 1;
        r
    }
}

fn bind_params<'p>(params: &'p [Param], args: Vec<Value<'p>>, env: Env<'p>) -> Result<Env<'p>, RuntimeError> {
    if params.len() != args.len() {
        return Err(RuntimeError::new(format!(
            "function takes {} argument(s), {} given",
            params.len(),
            args.len()
        )));
    }
    Ok(params
        .iter()
        .zip(args)
        .fold(env, |env, (p, a)| env.bind(&p.name, a)))
}

/// Evaluates `entry(args)` in a fresh store.
pub fn evaluate<'p>(p: &'p TypedProgram, entry: &str, args: Vec<Value<'p>>) -> Result<Value<'p>, RuntimeError> {
    Interpreter::new(p).call(entry, args)
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every scalar
/// slot of every argument, computed in double precision.
pub fn finite_diff(p: &TypedProgram, entry: &str, point: &[Tensor], h: f64) -> Result<Vec<Tensor>, RuntimeError> {
    let def = p
        .program()
        .definition(entry)
        .ok_or_else(|| RuntimeError::new(format!("no definition named `@{entry}`")))?;
    if !def.ret.is_float_scalar() || !def.params.iter().all(|q| q.ty.is_float_tensor()) {
        return Err(RuntimeError::new(format!(
            "`@{entry}` must map float tensors to a float scalar, found `{}`",
            pretty_type(&def.ty())
        )));
    }
    if h <= 0.0 {
        return Err(RuntimeError::new("step size must be positive"));
    }
    let f = |args: Vec<Tensor>| -> Result<f64, RuntimeError> {
        let vals = args.into_iter().map(Value::Tensor).collect();
        Interpreter::new(p)
            .with_mode(FloatMode::Widened)
            .call(entry, vals)?
            .as_tensor()
            .and_then(Tensor::as_f64)
            .ok_or_else(|| RuntimeError::new("entry did not return a float scalar"))
    };
    let mut grads = Vec::with_capacity(point.len());
    for (i, x) in point.iter().enumerate() {
        let n = x.floats().map(<[f64]>::len).ok_or_else(|| {
            RuntimeError::new(format!("argument {} is not a float tensor", i + 1))
        })?;
        let mut g = Vec::with_capacity(n);
        for j in 0..n {
            let shifted = |delta: f64| {
                let mut args = point.to_vec();
                args[i].floats_mut().expect("float checked")[j] += delta;
                args
            };
            let hi = f(shifted(h))?;
            let lo = f(shifted(-h))?;
            g.push((hi - lo) / (2.0 * h));
        }
        grads.push(Tensor::float(x.base, x.shape.clone(), g)?);
    }
    Ok(grads)
}

/// Parameter types of a definition, for coercing literal arguments.
pub fn parameter_types(p: &TypedProgram, entry: &str) -> Option<Vec<Type>> {
    p.program()
        .definition(entry)
        .map(|d| d.params.iter().map(|q| q.ty.clone()).collect())
}

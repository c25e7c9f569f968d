//! Random closed programs for checking gradients against finite differences.
//!
//! Programs range over float scalars and 3-vectors: literals, parameters,
//! `+ - * /`, negation, `sq`, `let`, tuples and projections, `if` on
//! comparisons, calls to earlier helper definitions, and `@sum` / `@dot`.

use rand::Rng;

use crate::ast::{BaseType, BinOp, Definition, Expr, Item, OperatorDecl, Param, Program, Span, Type, UnaryOp};
use crate::driver::GradientProgram;
use crate::eval::{FloatMode, Interpreter, Probe, Tensor, Value, DOT_TYPE, SUM_TYPE};
use crate::syntax::parse_type;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Scalar,
    Vec3,
    Pair,
}

impl Ty {
    fn to_type(self) -> Type {
        match self {
            Ty::Scalar => Type::scalar(BaseType::F32),
            Ty::Vec3 => Type::tensor(BaseType::F32, vec![3]),
            Ty::Pair => Type::Product(vec![Ty::Scalar.to_type(), Ty::Vec3.to_type()]),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    pub max_depth: u32,
    pub max_params: usize,
    pub max_helpers: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_depth: 4,
            max_params: 3,
            max_helpers: 2,
        }
    }
}

/// A generated program whose definition `entry` maps float tensors to a
/// float scalar.
#[derive(Debug, Clone)]
pub struct Generated {
    pub program: Program,
    pub entry: String,
    pub params: Vec<Type>,
}

struct Helper {
    name: String,
    params: Vec<Ty>,
    ret: Ty,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    helpers: Vec<Helper>,
    fresh: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn name(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn literal(&mut self) -> Expr {
        let v: f64 = self.rng.gen_range(-2.0..2.0);
        let v = (v * 100.0).round() / 100.0 + 0.0;
        if v < 0.0 {
            Expr::unary(UnaryOp::Neg, Expr::float(-v))
        } else {
            Expr::float(v)
        }
    }

    fn vector_literal(&mut self) -> Expr {
        Expr::tensor((0..3).map(|_| self.literal()).collect())
    }

    fn pick_var(&mut self, ty: Ty, env: &[(String, Ty)]) -> Option<Expr> {
        let vars: Vec<&String> = env.iter().filter(|(_, t)| *t == ty).map(|(n, _)| n).collect();
        if vars.is_empty() {
            None
        } else {
            let i = self.rng.gen_range(0..vars.len());
            Some(Expr::local(vars[i]))
        }
    }

    fn leaf(&mut self, ty: Ty, env: &[(String, Ty)]) -> Expr {
        if self.rng.gen_bool(0.75) {
            if let Some(v) = self.pick_var(ty, env) {
                return v;
            }
        }
        match ty {
            Ty::Scalar => {
                if self.rng.gen_bool(0.3) {
                    if let Some(p) = self.pick_var(Ty::Pair, env) {
                        return Expr::proj(p, 0);
                    }
                }
                self.literal()
            }
            Ty::Vec3 => {
                if self.rng.gen_bool(0.3) {
                    if let Some(p) = self.pick_var(Ty::Pair, env) {
                        return Expr::proj(p, 1);
                    }
                }
                self.vector_literal()
            }
            Ty::Pair => Expr::tuple(vec![self.leaf(Ty::Scalar, env), self.leaf(Ty::Vec3, env)]),
        }
    }

    fn expr(&mut self, ty: Ty, depth: u32, env: &mut Vec<(String, Ty)>) -> Expr {
        if depth == 0 {
            return self.leaf(ty, env);
        }
        let d = depth - 1;
        if ty == Ty::Pair {
            return Expr::tuple(vec![self.expr(Ty::Scalar, d, env), self.expr(Ty::Vec3, d, env)]);
        }
        let callable: Vec<usize> = (0..self.helpers.len())
            .filter(|&i| self.helpers[i].ret == ty)
            .collect();
        let choice = self.rng.gen_range(0..16);
        match choice {
            0..=4 => {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][self.rng.gen_range(0..4)];
                let l = self.expr(ty, d, env);
                let r = if op == BinOp::Div && self.rng.gen_bool(0.6) {
                    // keep most denominators away from zero
                    let inner = self.expr(ty, d.saturating_sub(1), env);
                    let offset = Expr::float(self.rng.gen_range(5..15) as f64 / 10.0);
                    let offset = if ty == Ty::Vec3 {
                        Expr::tensor(vec![offset.clone(), offset.clone(), offset])
                    } else {
                        offset
                    };
                    Expr::binary(BinOp::Add, Expr::unary(UnaryOp::Sq, inner), offset)
                } else {
                    self.expr(ty, d, env)
                };
                Expr::binary(op, l, r)
            }
            5 | 6 => {
                let op = if self.rng.gen_bool(0.5) { UnaryOp::Neg } else { UnaryOp::Sq };
                Expr::unary(op, self.expr(ty, d, env))
            }
            7 | 8 => {
                let bound = [Ty::Scalar, Ty::Vec3, Ty::Pair][self.rng.gen_range(0..3)];
                let value = self.expr(bound, d, env);
                let name = self.name();
                env.push((name.clone(), bound));
                let body = self.expr(ty, d, env);
                env.pop();
                Expr::let_(name, None, value, body)
            }
            9 => {
                let cmp = [BinOp::Lt, BinOp::Gt, BinOp::Le, BinOp::Ge][self.rng.gen_range(0..4)];
                let cond = Expr::binary(
                    cmp,
                    self.expr(Ty::Scalar, d.min(1), env),
                    self.expr(Ty::Scalar, d.min(1), env),
                );
                Expr::if_(cond, self.expr(ty, d, env), self.expr(ty, d, env))
            }
            10 => {
                let pair = self.expr(Ty::Pair, d, env);
                Expr::proj(pair, if ty == Ty::Scalar { 0 } else { 1 })
            }
            11 if !callable.is_empty() => {
                let h = callable[self.rng.gen_range(0..callable.len())];
                let params = self.helpers[h].params.clone();
                let name = self.helpers[h].name.clone();
                let args = params.iter().map(|p| self.expr(*p, d, env)).collect();
                Expr::call(Expr::global(name), args)
            }
            12 if ty == Ty::Scalar => {
                Expr::call(Expr::global("sum"), vec![self.expr(Ty::Vec3, d, env)])
            }
            13 if ty == Ty::Scalar => Expr::call(
                Expr::global("dot"),
                vec![self.expr(Ty::Vec3, d, env), self.expr(Ty::Vec3, d, env)],
            ),
            _ => self.leaf(ty, env),
        }
    }

    fn param_types(&mut self, max: usize) -> Vec<Ty> {
        let n = self.rng.gen_range(1..=max);
        (0..n)
            .map(|_| if self.rng.gen_bool(0.6) { Ty::Scalar } else { Ty::Vec3 })
            .collect()
    }
}

fn definition(name: &str, params: &[(String, Ty)], ret: Ty, body: Expr) -> Definition {
    Definition {
        name: name.to_string(),
        params: params
            .iter()
            .map(|(n, t)| Param::new(n.clone(), t.to_type()))
            .collect(),
        ret: ret.to_type(),
        body,
        span: Span::default(),
    }
}

/// Generates helpers `@h1`, `@h2`, ... (each may call earlier ones) and an
/// entry `@f` returning a float scalar.
pub fn generate_program<R: Rng>(rng: &mut R, cfg: FuzzConfig) -> Generated {
    generate(rng, cfg, &["f"])
}

/// Like [`generate_program`], with a second entry `@g` over the same
/// parameter types as `@f`.
pub fn generate_pair<R: Rng>(rng: &mut R, cfg: FuzzConfig) -> Generated {
    generate(rng, cfg, &["f", "g"])
}

fn generate<R: Rng>(rng: &mut R, cfg: FuzzConfig, entries: &[&str]) -> Generated {
    let mut items = vec![
        Item::Operator(OperatorDecl {
            name: "sum".into(),
            ty: parse_type(SUM_TYPE, false).expect("builtin type parses"),
            span: Span::default(),
        }),
        Item::Operator(OperatorDecl {
            name: "dot".into(),
            ty: parse_type(DOT_TYPE, false).expect("builtin type parses"),
            span: Span::default(),
        }),
    ];
    let mut g = Gen {
        rng,
        helpers: Vec::new(),
        fresh: 0,
    };
    let helpers = g.rng.gen_range(0..=cfg.max_helpers);
    for k in 1..=helpers {
        let tys = g.param_types(2);
        let ret = if g.rng.gen_bool(0.6) { Ty::Scalar } else { Ty::Vec3 };
        let mut env: Vec<(String, Ty)> = tys
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("p{i}"), *t))
            .collect();
        let body = g.expr(ret, cfg.max_depth.saturating_sub(1), &mut env);
        let name = format!("h{k}");
        items.push(Item::Definition(definition(&name, &env, ret, body)));
        g.helpers.push(Helper {
            name,
            params: tys,
            ret,
        });
    }
    let tys = g.param_types(cfg.max_params);
    for entry in entries {
        let mut env: Vec<(String, Ty)> = tys
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("x{i}"), *t))
            .collect();
        let body = g.expr(Ty::Scalar, cfg.max_depth, &mut env);
        items.push(Item::Definition(definition(entry, &env, Ty::Scalar, body)));
    }
    Generated {
        program: Program::new(items).expect("generated names are distinct"),
        entry: entries[0].into(),
        params: tys.iter().map(|t| t.to_type()).collect(),
    }
}

/// Uniform point in `[-2, 2)` per slot.
pub fn sample_point<R: Rng>(rng: &mut R, params: &[Type]) -> Vec<Tensor> {
    params
        .iter()
        .map(|t| {
            let (b, s) = t.as_tensor().expect("generated parameters are tensors");
            let data = (0..s.size()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            Tensor::float(b, s.clone(), data).expect("sizes match")
        })
        .collect()
}

/// Conditions a point must meet for central differences to be trustworthy:
/// every divisor at least `divisor` in magnitude, and the same comparison
/// outcomes at the point and at each `±step` perturbation.
#[derive(Debug, Clone, Copy)]
pub struct Margins {
    pub divisor: f64,
    pub step: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins {
            divisor: 1e-3,
            step: 1e-4,
        }
    }
}

fn probe_at(gp: &GradientProgram, entry: &str, point: &[Tensor]) -> Option<Probe> {
    let mut interp = Interpreter::new(gp.typed())
        .with_mode(FloatMode::Widened)
        .with_probe();
    let args = point.iter().cloned().map(Value::Tensor).collect();
    let v = interp.call(entry, args).ok()?;
    let x = v.as_tensor().and_then(Tensor::as_f64)?;
    (x.is_finite() && x.abs() < 1e8).then_some(())?;
    interp.probe()
}

/// Whether central differences at `point` stay on one branch and away from
/// small divisors.
pub fn point_is_regular(gp: &GradientProgram, entry: &str, point: &[Tensor], margins: Margins) -> bool {
    let Some(center) = probe_at(gp, entry, point) else {
        return false;
    };
    if center.min_divisor < margins.divisor {
        return false;
    }
    for (i, t) in point.iter().enumerate() {
        for k in 0..t.len() {
            for sign in [-1.0, 1.0] {
                let mut moved = point.to_vec();
                if let Some(v) = moved[i].floats_mut() {
                    v[k] += sign * margins.step;
                }
                match probe_at(gp, entry, &moved) {
                    Some(p) if p.branches == center.branches && p.min_divisor >= margins.divisor => {}
                    _ => return false,
                }
            }
        }
    }
    true
}

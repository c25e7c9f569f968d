use super::expr::{Expr, ExprKind, Item, Param};
use super::program::Program;
use super::types::Type;

/// Nodes comparable up to consistent renaming of bound variables.
pub trait AlphaEq {
    fn alpha_eq(&self, other: &Self) -> bool;
}

impl AlphaEq for Type {
    fn alpha_eq(&self, other: &Self) -> bool {
        types_eq(self, other, &mut Vec::new())
    }
}

impl AlphaEq for Expr {
    fn alpha_eq(&self, other: &Self) -> bool {
        exprs_eq(self, other, &mut Vec::new())
    }
}

/// Parameters are binders of the body; global names must match exactly.
impl AlphaEq for Item {
    fn alpha_eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Item::Operator(a), Item::Operator(b)) => a.name == b.name && a.ty.alpha_eq(&b.ty),
            (Item::Definition(a), Item::Definition(b)) => {
                if a.name != b.name || !params_eq(&a.params, &b.params) || !a.ret.alpha_eq(&b.ret) {
                    return false;
                }
                let mut env = a
                    .params
                    .iter()
                    .zip(&b.params)
                    .map(|(p, q)| (p.name.clone(), q.name.clone()))
                    .collect();
                exprs_eq(&a.body, &b.body, &mut env)
            }
            _ => false,
        }
    }
}

impl AlphaEq for Program {
    fn alpha_eq(&self, other: &Self) -> bool {
        self.items().len() == other.items().len()
            && self.items().iter().zip(other.items()).all(|(a, b)| a.alpha_eq(b))
    }
}

pub fn alpha_equal<T: AlphaEq>(a: &T, b: &T) -> bool {
    a.alpha_eq(b)
}

/// Bound names pair up positionally: the innermost binding of `x` on the left
/// must be the same binder as the innermost binding of `y` on the right.
fn names_eq(a: &str, b: &str, env: &[(String, String)]) -> bool {
    for (l, r) in env.iter().rev() {
        let hit_l = l == a;
        let hit_r = r == b;
        if hit_l || hit_r {
            return hit_l && hit_r;
        }
    }
    a == b
}

fn types_eq(a: &Type, b: &Type, env: &mut Vec<(String, String)>) -> bool {
    match (a, b) {
        (Type::Base(x), Type::Base(y)) => x == y,
        (Type::ShapeLit(x), Type::ShapeLit(y)) => x == y,
        (Type::Tensor(b1, s1), Type::Tensor(b2, s2)) => {
            types_eq(b1, b2, env) && types_eq(s1, s2, env)
        }
        (Type::Arrow(d1, c1), Type::Arrow(d2, c2)) => {
            d1.len() == d2.len()
                && d1.iter().zip(d2).all(|(x, y)| types_eq(x, y, env))
                && types_eq(c1, c2, env)
        }
        (Type::Var(x), Type::Var(y)) => names_eq(x, y, env),
        (Type::Forall(v1, k1, t1), Type::Forall(v2, k2, t2)) => {
            if k1 != k2 {
                return false;
            }
            env.push((v1.clone(), v2.clone()));
            let ok = types_eq(t1, t2, env);
            env.pop();
            ok
        }
        (Type::Ref(x), Type::Ref(y)) => types_eq(x, y, env),
        (Type::Product(xs), Type::Product(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| types_eq(x, y, env))
        }
        _ => false,
    }
}

fn params_eq(a: &[Param], b: &[Param]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.ty.alpha_eq(&q.ty))
}

fn all_eq(a: &[Expr], b: &[Expr], env: &mut Vec<(String, String)>) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| exprs_eq(x, y, env))
}

fn exprs_eq(a: &Expr, b: &Expr, env: &mut Vec<(String, String)>) -> bool {
    use ExprKind::*;
    match (&a.kind, &b.kind) {
        (Local(x), Local(y)) => names_eq(x, y, env),
        (Global(x), Global(y)) => x == y,
        (Int(x), Int(y)) => x == y,
        (Float(x), Float(y)) => x.to_bits() == y.to_bits(),
        (Bool(x), Bool(y)) => x == y,
        (Call(f, xs), Call(g, ys)) => exprs_eq(f, g, env) && all_eq(xs, ys, env),
        (
            Let {
                binder: x,
                annotation: t1,
                value: v1,
                body: b1,
            },
            Let {
                binder: y,
                annotation: t2,
                value: v2,
                body: b2,
            },
        ) => {
            let anns = match (t1, t2) {
                (None, None) => true,
                (Some(t1), Some(t2)) => t1.alpha_eq(t2),
                _ => false,
            };
            if !anns || !exprs_eq(v1, v2, env) {
                return false;
            }
            env.push((x.clone(), y.clone()));
            let ok = exprs_eq(b1, b2, env);
            env.pop();
            ok
        }
        (Cast(t1, e1), Cast(t2, e2)) => t1.alpha_eq(t2) && exprs_eq(e1, e2, env),
        (Binary(o1, l1, r1), Binary(o2, l2, r2)) => {
            o1 == o2 && exprs_eq(l1, l2, env) && exprs_eq(r1, r2, env)
        }
        (Unary(o1, e1), Unary(o2, e2)) => o1 == o2 && exprs_eq(e1, e2, env),
        (Tuple(xs), Tuple(ys)) | (TensorLit(xs), TensorLit(ys)) => all_eq(xs, ys, env),
        (Proj(e1, i), Proj(e2, j)) => i == j && exprs_eq(e1, e2, env),
        (If(c1, t1, e1), If(c2, t2, e2)) => {
            exprs_eq(c1, c2, env) && exprs_eq(t1, t2, env) && exprs_eq(e1, e2, env)
        }
        (Zero(t1), Zero(t2)) => t1.alpha_eq(t2),
        (Grad(e1), Grad(e2)) | (RefNew(e1), RefNew(e2)) | (RefRead(e1), RefRead(e2)) => {
            exprs_eq(e1, e2, env)
        }
        (RefWrite(r1, v1), RefWrite(r2, v2)) => exprs_eq(r1, r2, env) && exprs_eq(v1, v2, env),
        (
            Function {
                params: p1,
                ret: r1,
                body: b1,
            },
            Function {
                params: p2,
                ret: r2,
                body: b2,
            },
        ) => {
            if !params_eq(p1, p2) || !r1.alpha_eq(r2) {
                return false;
            }
            let depth = env.len();
            env.extend(
                p1.iter()
                    .zip(p2)
                    .map(|(p, q)| (p.name.clone(), q.name.clone())),
            );
            let ok = exprs_eq(b1, b2, env);
            env.truncate(depth);
            ok
        }
        _ => false,
    }
}

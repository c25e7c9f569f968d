use std::collections::BTreeSet;

use super::expr::{Expr, ExprKind};
use super::types::Type;

/// Local identifiers referenced but not bound inside `e`. Globals are excluded.
pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut bound = Vec::new();
    collect_free(e, &mut bound, &mut out);
    out
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Local(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        ExprKind::Let {
            binder,
            value,
            body,
            ..
        } => {
            collect_free(value, bound, out);
            bound.push(binder.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        ExprKind::Function { params, body, .. } => {
            let depth = bound.len();
            bound.extend(params.iter().map(|p| p.name.clone()));
            collect_free(body, bound, out);
            bound.truncate(depth);
        }
        _ => {
            for child in e.children() {
                collect_free(child, bound, out);
            }
        }
    }
}

/// Every local name bound or referenced anywhere in `e`.
pub fn all_local_names(e: &Expr, out: &mut BTreeSet<String>) {
    for node in e.preorder() {
        match &node.kind {
            ExprKind::Local(x) => {
                out.insert(x.clone());
            }
            ExprKind::Let { binder, .. } => {
                out.insert(binder.clone());
            }
            ExprKind::Function { params, .. } => {
                out.extend(params.iter().map(|p| p.name.clone()));
            }
            _ => {}
        }
    }
}

/// Type variables occurring free in `t`.
pub fn free_type_vars(t: &Type) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_ftv(t, &mut Vec::new(), &mut out);
    out
}

fn collect_ftv(t: &Type, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match t {
        Type::Var(v) => {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        }
        Type::Base(_) | Type::ShapeLit(_) => {}
        Type::Tensor(b, s) => {
            collect_ftv(b, bound, out);
            collect_ftv(s, bound, out);
        }
        Type::Arrow(dom, cod) => {
            for d in dom {
                collect_ftv(d, bound, out);
            }
            collect_ftv(cod, bound, out);
        }
        Type::Forall(v, _, body) => {
            bound.push(v.clone());
            collect_ftv(body, bound, out);
            bound.pop();
        }
        Type::Ref(inner) => collect_ftv(inner, bound, out),
        Type::Product(ts) => {
            for t in ts {
                collect_ftv(t, bound, out);
            }
        }
    }
}

/// Capture-avoiding substitution of `replacement` for the free type variable `var`.
pub fn subst_type(t: &Type, var: &str, replacement: &Type) -> Type {
    match t {
        Type::Var(v) if v == var => replacement.clone(),
        Type::Var(_) | Type::Base(_) | Type::ShapeLit(_) => t.clone(),
        Type::Tensor(b, s) => Type::Tensor(
            Box::new(subst_type(b, var, replacement)),
            Box::new(subst_type(s, var, replacement)),
        ),
        Type::Arrow(dom, cod) => Type::Arrow(
            dom.iter().map(|d| subst_type(d, var, replacement)).collect(),
            Box::new(subst_type(cod, var, replacement)),
        ),
        Type::Forall(v, _, _) if v == var => t.clone(),
        Type::Forall(v, k, body) => {
            let replacement_ftv = free_type_vars(replacement);
            if replacement_ftv.contains(v) && free_type_vars(body).contains(var) {
                let mut avoid = replacement_ftv;
                avoid.extend(free_type_vars(body));
                avoid.insert(var.to_string());
                let fresh = fresh_type_var(v, &avoid);
                let renamed = subst_type(body, v, &Type::Var(fresh.clone()));
                Type::Forall(fresh, *k, Box::new(subst_type(&renamed, var, replacement)))
            } else {
                Type::Forall(v.clone(), *k, Box::new(subst_type(body, var, replacement)))
            }
        }
        Type::Ref(inner) => Type::Ref(Box::new(subst_type(inner, var, replacement))),
        Type::Product(ts) => {
            Type::Product(ts.iter().map(|t| subst_type(t, var, replacement)).collect())
        }
    }
}

/// `base`, `base1`, `base2`, ... skipping anything in `avoid`.
pub(crate) fn fresh_type_var(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|cand| !avoid.contains(cand))
        .expect("unbounded supply")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{BaseType, Kind, Param, Shape};

    fn f32_tensor(shape: Type) -> Type {
        Type::Tensor(Box::new(Type::Base(BaseType::F32)), Box::new(shape))
    }

    #[test]
    fn free_vars_of_open_sum() {
        let e = Expr::binary(crate::ast::BinOp::Add, Expr::local("x"), Expr::local("y"));
        let fv: Vec<_> = free_vars(&e).into_iter().collect();
        assert_eq!(fv, ["x", "y"]);
    }

    #[test]
    fn let_binder_covers_use() {
        let e = Expr::let_("x", Some(Type::scalar(BaseType::F32)), Expr::float(1.0), Expr::local("x"));
        assert!(free_vars(&e).is_empty());
    }

    #[test]
    fn let_value_is_outside_binder_scope() {
        let e = Expr::let_("x", None, Expr::local("x"), Expr::local("x"));
        assert_eq!(free_vars(&e).len(), 1);
    }

    #[test]
    fn function_params_are_removed() {
        let body = Expr::binary(crate::ast::BinOp::Add, Expr::local("x"), Expr::local("y"));
        let f = Expr::function(
            vec![Param::new("x", Type::scalar(BaseType::F32))],
            Type::scalar(BaseType::F32),
            body.clone(),
        );
        let mut expected = free_vars(&body);
        expected.remove("x");
        assert_eq!(free_vars(&f), expected);
    }

    #[test]
    fn subst_replaces_shape_var() {
        let t = f32_tensor(Type::Var("S".into()));
        let out = subst_type(&t, "S", &Type::ShapeLit(Shape(vec![3])));
        assert_eq!(out, Type::tensor(BaseType::F32, vec![3]));
    }

    #[test]
    fn subst_respects_shadowing() {
        let t = Type::Forall(
            "S".into(),
            Kind::Shape,
            Box::new(f32_tensor(Type::Var("S".into()))),
        );
        assert_eq!(subst_type(&t, "S", &Type::ShapeLit(Shape(vec![2]))), t);
    }

    #[test]
    fn subst_hits_every_occurrence() {
        let a = Type::Var("A".into());
        let t = Type::arrow(vec![a.clone()], a);
        let bool_scalar = Type::scalar(BaseType::Bool);
        assert_eq!(
            subst_type(&t, "A", &bool_scalar),
            Type::arrow(vec![bool_scalar.clone()], bool_scalar)
        );
    }

    #[test]
    fn subst_avoids_capture() {
        // forall (S : Shape), Tensor(B, S)  [B := Tensor(..., S)] must rename the binder
        let t = Type::Forall(
            "S".into(),
            Kind::Shape,
            Box::new(Type::Product(vec![
                Type::Var("A".into()),
                f32_tensor(Type::Var("S".into())),
            ])),
        );
        let out = subst_type(&t, "A", &f32_tensor(Type::Var("S".into())));
        match out {
            Type::Forall(v, _, body) => {
                assert_ne!(v, "S");
                assert_eq!(
                    *body,
                    Type::Product(vec![
                        f32_tensor(Type::Var("S".into())),
                        f32_tensor(Type::Var(v.clone())),
                    ])
                );
            }
            other => panic!("expected forall, got {other:?}"),
        }
    }
}

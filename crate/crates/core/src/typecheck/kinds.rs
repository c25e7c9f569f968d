use std::collections::{BTreeMap, BTreeSet};

use super::{subst_all, Rule, TypeEnv, TypeError};
use crate::ast::{alpha_equal, pretty_type, Kind, Type};

/// Type-variable assignment produced by [`instantiate`].
pub type Substitution = BTreeMap<String, Type>;

/// Kinding judgement `Δ ⊢ τ : κ`.
pub fn kind_of(env: &TypeEnv, t: &Type) -> Result<Kind, TypeError> {
    let mut delta = env.delta.clone();
    kind_in(&mut delta, t)
}

pub(crate) fn kind_in(delta: &mut Vec<(String, Kind)>, t: &Type) -> Result<Kind, TypeError> {
    match t {
        Type::Base(b) => {
            if b.has_supported_width() {
                Ok(Kind::BaseType)
            } else {
                Err(TypeError::new(
                    Rule::BaseTypeT,
                    format!("unsupported width in base type `{}`", pretty_type(t)),
                ))
            }
        }
        Type::ShapeLit(s) => {
            if s.is_valid() {
                Ok(Kind::Shape)
            } else {
                Err(TypeError::new(
                    Rule::ShapeT,
                    format!("shape dimensions must be at least 1 in `{}`", pretty_type(t)),
                ))
            }
        }
        Type::Tensor(b, s) => {
            expect_kind(delta, b, Kind::BaseType, Rule::TensorT, "tensor element type")?;
            expect_kind(delta, s, Kind::Shape, Rule::TensorT, "tensor shape")?;
            Ok(Kind::Type)
        }
        Type::Arrow(domain, codomain) => {
            for d in domain {
                expect_kind(delta, d, Kind::Type, Rule::ArrowT, "function parameter type")?;
            }
            expect_kind(delta, codomain, Kind::Type, Rule::ArrowT, "function result type")?;
            Ok(Kind::Type)
        }
        Type::Var(v) => delta
            .iter()
            .rev()
            .find(|(name, _)| name == v)
            .map(|(_, k)| *k)
            .ok_or_else(|| TypeError::new(Rule::Scope, format!("unbound type variable `{v}`"))),
        Type::Forall(v, k, body) => {
            delta.push((v.clone(), *k));
            let r = expect_kind(delta, body, Kind::Type, Rule::QuantifierT, "quantified body");
            delta.pop();
            r.map(|_| Kind::Type)
        }
        Type::Ref(inner) => {
            expect_kind(delta, inner, Kind::Type, Rule::RefT, "reference contents")?;
            Ok(Kind::Type)
        }
        Type::Product(ts) => {
            for t in ts {
                expect_kind(delta, t, Kind::Type, Rule::ProductT, "tuple component")?;
            }
            Ok(Kind::Type)
        }
    }
}

fn expect_kind(
    delta: &mut Vec<(String, Kind)>,
    t: &Type,
    want: Kind,
    rule: Rule,
    what: &str,
) -> Result<(), TypeError> {
    let got = kind_in(delta, t)?;
    if got == want {
        Ok(())
    } else {
        Err(TypeError::new(
            rule,
            format!(
                "{what} `{}` has kind {got}, expected {want}",
                pretty_type(t)
            ),
        ))
    }
}

/// Instantiates the quantified type of an operator against the types of the
/// arguments at one call site.
///
/// Binders are matched syntactically against the argument types; every binder
/// must be determined and bound to a type of its declared kind. Returns the
/// substitution and the instantiated arrow type.
pub fn instantiate(
    env: &TypeEnv,
    poly: &Type,
    args: &[Type],
) -> Result<(Substitution, Type), TypeError> {
    let mut binders = Vec::new();
    let mut body = poly;
    while let Type::Forall(v, k, inner) = body {
        binders.push((v.clone(), *k));
        body = inner;
    }
    let Type::Arrow(domain, _) = body else {
        return Err(TypeError::new(
            Rule::Instantiate,
            format!("`{}` is not a function type", pretty_type(poly)),
        ));
    };
    if domain.len() != args.len() {
        return Err(TypeError::new(
            Rule::Call,
            format!(
                "expected {} argument(s), found {}",
                domain.len(),
                args.len()
            ),
        ));
    }
    let vars: BTreeSet<String> = binders.iter().map(|(v, _)| v.clone()).collect();
    let mut subst = Substitution::new();
    for (i, (pattern, actual)) in domain.iter().zip(args).enumerate() {
        if let Err(msg) = match_type(pattern, actual, &vars, &mut subst) {
            return Err(TypeError::new(
                Rule::Call,
                format!(
                    "argument {} has type `{}`, which does not match `{}`: {msg}",
                    i + 1,
                    pretty_type(actual),
                    pretty_type(pattern)
                ),
            ));
        }
    }
    let mut delta = env.delta.clone();
    for (v, k) in &binders {
        let Some(t) = subst.get(v) else {
            return Err(TypeError::new(
                Rule::Instantiate,
                format!("type variable `{v}` is not determined by the arguments"),
            ));
        };
        let got = kind_in(&mut delta, t)?;
        if got != *k {
            return Err(TypeError::new(
                Rule::Instantiate,
                format!(
                    "type variable `{v}` : {k} instantiated with `{}` of kind {got}",
                    pretty_type(t)
                ),
            ));
        }
    }
    let instantiated = subst_all(body, &subst);
    Ok((subst, instantiated))
}

fn match_type(
    pattern: &Type,
    actual: &Type,
    vars: &BTreeSet<String>,
    subst: &mut Substitution,
) -> Result<(), String> {
    match (pattern, actual) {
        (Type::Var(v), _) if vars.contains(v) => match subst.get(v) {
            Some(prev) if alpha_equal(prev, actual) => Ok(()),
            Some(prev) => Err(format!(
                "`{v}` is bound to both `{}` and `{}`",
                pretty_type(prev),
                pretty_type(actual)
            )),
            None => {
                subst.insert(v.clone(), actual.clone());
                Ok(())
            }
        },
        (Type::Tensor(pb, ps), Type::Tensor(ab, as_)) => {
            match_type(pb, ab, vars, subst)?;
            match_type(ps, as_, vars, subst)
        }
        (Type::Arrow(pd, pc), Type::Arrow(ad, ac)) if pd.len() == ad.len() => {
            for (p, a) in pd.iter().zip(ad) {
                match_type(p, a, vars, subst)?;
            }
            match_type(pc, ac, vars, subst)
        }
        (Type::Product(ps), Type::Product(as_)) if ps.len() == as_.len() => {
            for (p, a) in ps.iter().zip(as_) {
                match_type(p, a, vars, subst)?;
            }
            Ok(())
        }
        (Type::Ref(p), Type::Ref(a)) => match_type(p, a, vars, subst),
        _ if alpha_equal(pattern, actual) => Ok(()),
        _ => Err("structure differs".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{BaseType, Shape};

    fn sum_ty() -> Type {
        Type::Forall(
            "B".into(),
            Kind::BaseType,
            Box::new(Type::Forall(
                "S".into(),
                Kind::Shape,
                Box::new(Type::arrow(
                    vec![Type::Tensor(
                        Box::new(Type::Var("B".into())),
                        Box::new(Type::Var("S".into())),
                    )],
                    Type::Tensor(
                        Box::new(Type::Var("B".into())),
                        Box::new(Type::ShapeLit(Shape::scalar())),
                    ),
                )),
            )),
        )
    }

    #[test]
    fn kinds_of_basic_types() {
        let env = TypeEnv::new();
        assert_eq!(kind_of(&env, &Type::Base(BaseType::F32)), Ok(Kind::BaseType));
        assert_eq!(kind_of(&env, &Type::ShapeLit(Shape(vec![2]))), Ok(Kind::Shape));
        assert_eq!(kind_of(&env, &Type::scalar(BaseType::F32)), Ok(Kind::Type));
        assert_eq!(kind_of(&env, &sum_ty()), Ok(Kind::Type));
    }

    #[test]
    fn bad_width_and_shape() {
        let env = TypeEnv::new();
        let e = kind_of(&env, &Type::Base(BaseType::Float(16))).unwrap_err();
        assert_eq!(e.rule, Rule::BaseTypeT);
        let e = kind_of(&env, &Type::ShapeLit(Shape(vec![0]))).unwrap_err();
        assert_eq!(e.rule, Rule::ShapeT);
    }

    #[test]
    fn tensor_of_shape_is_rejected() {
        let t = Type::Tensor(
            Box::new(Type::ShapeLit(Shape(vec![2]))),
            Box::new(Type::ShapeLit(Shape(vec![2]))),
        );
        assert_eq!(kind_of(&TypeEnv::new(), &t).unwrap_err().rule, Rule::TensorT);
    }

    #[test]
    fn instantiate_sum() {
        let arg = Type::tensor(BaseType::F32, vec![3]);
        let (s, t) = instantiate(&TypeEnv::new(), &sum_ty(), std::slice::from_ref(&arg)).unwrap();
        assert_eq!(s["B"], Type::Base(BaseType::F32));
        assert_eq!(t, Type::arrow(vec![arg], Type::scalar(BaseType::F32)));
    }

    #[test]
    fn undetermined_variable() {
        let poly = Type::Forall(
            "S".into(),
            Kind::Shape,
            Box::new(Type::arrow(
                vec![Type::scalar(BaseType::F32)],
                Type::Tensor(
                    Box::new(Type::Base(BaseType::F32)),
                    Box::new(Type::Var("S".into())),
                ),
            )),
        );
        let e = instantiate(&TypeEnv::new(), &poly, &[Type::scalar(BaseType::F32)]).unwrap_err();
        assert_eq!(e.rule, Rule::Instantiate);
    }
}

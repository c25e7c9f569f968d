use gradir::ast::{pretty_expr, pretty_program, pretty_type, AlphaEq, BaseType, BinOp, Expr, Kind, Param, Shape, Type, UnaryOp};
use gradir::fuzz::{generate_program, FuzzConfig};
use gradir::syntax::{decode_json, encode_json, expr_to_value, parse_expr, parse_program, parse_type, type_to_value, value_to_expr, value_to_type};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn base() -> impl Strategy<Value = BaseType> {
    prop_oneof![
        prop::sample::select(vec![8u32, 16, 32, 64]).prop_map(BaseType::Int),
        prop::sample::select(vec![8u32, 16, 32, 64]).prop_map(BaseType::UInt),
        prop::sample::select(vec![16u32, 32, 64]).prop_map(BaseType::Float),
        Just(BaseType::Bool),
    ]
}

fn tensor() -> impl Strategy<Value = Type> {
    (base(), prop::collection::vec(1u64..5, 0..3)).prop_map(|(b, d)| Type::tensor(b, Shape::from(d)))
}

fn ty() -> impl Strategy<Value = Type> {
    tensor().prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (prop::collection::vec(inner.clone(), 0..3), inner.clone()).prop_map(|(a, r)| Type::arrow(a, r)),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Type::Product),
            inner.clone().prop_map(Type::reference),
            inner.prop_map(|t| Type::Forall("S".into(), Kind::Shape, Box::new(t))),
        ]
    })
}

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["x", "y", "z", "acc"]).prop_map(String::from)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        name().prop_map(Expr::local),
        name().prop_map(Expr::global),
        (0i64..1000).prop_map(Expr::int),
        (0u32..100_000).prop_map(|n| Expr::float(f64::from(n) / 64.0)),
        any::<bool>().prop_map(Expr::bool),
        tensor().prop_map(Expr::zero),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let binop = prop::sample::select(vec![
        BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge,
    ]);
    leaf().prop_recursive(4, 48, 4, move |e| {
        prop_oneof![
            (e.clone(), prop::collection::vec(e.clone(), 0..3)).prop_map(|(f, a)| Expr::call(f, a)),
            (name(), prop::option::of(ty()), e.clone(), e.clone())
                .prop_map(|(x, t, v, b)| Expr::let_(x, t, v, b)),
            (tensor(), e.clone()).prop_map(|(t, x)| Expr::cast(t, x)),
            (binop.clone(), e.clone(), e.clone()).prop_map(|(o, a, b)| Expr::binary(o, a, b)),
            (prop::sample::select(vec![UnaryOp::Neg, UnaryOp::Sq]), e.clone()).prop_map(|(o, a)| Expr::unary(o, a)),
            prop::collection::vec(e.clone(), 0..4).prop_map(Expr::tuple),
            (e.clone(), 0usize..3).prop_map(|(t, i)| Expr::proj(t, i)),
            prop::collection::vec(e.clone(), 1..4).prop_map(Expr::tensor),
            (e.clone(), e.clone(), e.clone()).prop_map(|(c, t, f)| Expr::if_(c, t, f)),
            e.clone().prop_map(Expr::grad),
            e.clone().prop_map(Expr::ref_new),
            e.clone().prop_map(Expr::ref_read),
            (e.clone(), e.clone()).prop_map(|(r, v)| Expr::ref_write(r, v)),
            (prop::collection::vec((name(), ty()), 0..3), ty(), e)
                .prop_map(|(ps, r, b)| Expr::function(ps.into_iter().map(|(n, t)| Param::new(n, t)).collect(), r, b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn types_survive_text(t in ty()) {
        let text = pretty_type(&t);
        let back = parse_type(&text, true).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert!(back.alpha_eq(&t), "{} reparsed as {}", text, pretty_type(&back));
    }

    #[test]
    fn types_survive_json(t in ty()) {
        prop_assert_eq!(value_to_type(&type_to_value(&t)).unwrap(), t);
    }

    #[test]
    fn exprs_survive_text(e in expr()) {
        let text = pretty_expr(&e);
        let back = parse_expr(&text, true).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert!(back.alpha_eq(&e), "{} reparsed as {}", text, pretty_expr(&back));
    }

    #[test]
    fn exprs_survive_json(e in expr()) {
        let back = value_to_expr(&expr_to_value(&e)).unwrap();
        prop_assert!(back.alpha_eq(&e));
        prop_assert_eq!(pretty_expr(&back), pretty_expr(&e));
    }
}

#[test]
fn generated_programs_survive_both_codecs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let g = generate_program(&mut rng, FuzzConfig::default());
        let text = pretty_program(&g.program);
        let reparsed = parse_program(&text).unwrap();
        assert!(reparsed.alpha_eq(&g.program), "{text}");
        let decoded = decode_json(&encode_json(&g.program)).unwrap();
        assert!(decoded.alpha_eq(&g.program));
        assert_eq!(encode_json(&decoded), encode_json(&g.program));
    }
}

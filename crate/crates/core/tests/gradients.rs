use gradir::ast::{BinOp, Definition, Expr, Item, Param, Program, Span, Type};
use gradir::autodiff::{elaborate_grad, lift_type};
use gradir::eval::{FloatMode, Tensor};
use gradir::fuzz::{generate_pair, point_is_regular, sample_point, FuzzConfig, Margins};
use gradir::syntax::{parse_program, parse_type};
use gradir::typecheck::{check_program, type_of, Rule, TypeEnv};
use gradir::{gradient_at, GradientProgram};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const F: &str = "Tensor(FloatType(32), Shape())";

fn ty(s: &str) -> Type {
    parse_type(s, true).unwrap()
}

fn scalar_grad(src: &str, entry: &str, at: &[f64]) -> (f64, Vec<f64>) {
    let p = parse_program(src).unwrap();
    let point: Vec<Tensor> = at.iter().map(|x| Tensor::scalar_f32(*x)).collect();
    let g = gradient_at(&p, entry, &point, FloatMode::Widened).unwrap();
    (g.value, g.gradients.iter().map(|t| t.as_f64().unwrap()).collect())
}

#[test]
fn lifting_pairs_floats_only() {
    assert_eq!(
        lift_type(&ty(F)),
        ty(&format!("({F}, RefType({F}))"))
    );
    let i = "Tensor(IntType(32), Shape(2))";
    assert_eq!(lift_type(&ty(i)), ty(i));
    // lifting is not idempotent
    let twice = lift_type(&lift_type(&ty(F)));
    assert_eq!(twice, ty(&format!("(({F}, RefType({F})), RefType(({F}, RefType({F}))))")));
}

#[test]
fn square_at_three() {
    let (v, g) = scalar_grad(&format!("def @f(x : {F}) -> {F} {{ sq x }}"), "f", &[3.0]);
    assert_eq!((v, g), (9.0, vec![6.0]));
}

#[test]
fn closed_lambda_elaborates_and_rechecks() {
    let x = Param::new("x", ty(F));
    let f = Expr::function(vec![x], ty(F), Expr::binary(BinOp::Mul, Expr::local("x"), Expr::local("x")));
    let fn_ty = type_of(&TypeEnv::new(), &f).unwrap();
    let g = elaborate_grad(&f, &fn_ty).unwrap();
    let env = TypeEnv::new().with_global("ones_like", ty(gradir::eval::ONES_LIKE_TYPE));
    let t = type_of(&env, &g).unwrap();
    assert_eq!(t, ty(&format!("({F}) -> ({F}, ({F},))")));
}

#[test]
fn capturing_lambda_is_rejected() {
    let x = Param::new("x", ty(F));
    let f = Expr::function(vec![x], ty(F), Expr::binary(BinOp::Mul, Expr::local("x"), Expr::local("y")));
    let fn_ty = ty(&format!("({F}) -> {F}"));
    let e = elaborate_grad(&f, &fn_ty).unwrap_err();
    assert_eq!(e.rule, Rule::Gradient);
    assert!(e.message.contains('y'), "{}", e.message);
}

#[test]
fn vector_output_is_rejected() {
    let src = "def @v(x : Tensor(FloatType(32), Shape(2))) -> Tensor(FloatType(32), Shape(2)) { x }
               def @g(x : Tensor(FloatType(32), Shape(2))) -> Tensor(FloatType(32), Shape(2)) { (Grad @v)(x)[0] }";
    let errs = check_program(&parse_program(src).unwrap()).unwrap_err();
    assert_eq!(errs[0].rule, Rule::Gradient);
}

#[test]
fn tensor_literal_of_variables_is_rejected() {
    let src = format!(
        "operator @sum : forall (B : BaseType), forall (S : Shape), Tensor(B, S) -> Tensor(B, Shape())
         def @f(x : {F}) -> {F} {{ @sum(sq [x, 2.0 * x, 3.0]) }}"
    );
    let e = gradient_at(&parse_program(&src).unwrap(), "f", &[Tensor::scalar_f32(1.0)], FloatMode::Native).unwrap_err();
    let gradir::Error::Type(es) = e else { panic!("{e}") };
    assert_eq!(es[0].rule, Rule::Gradient);
}

#[test]
fn tensor_intermediates() {
    let src = format!(
        "operator @sum : forall (B : BaseType), forall (S : Shape), Tensor(B, S) -> Tensor(B, Shape())
         def @f(v : Tensor(FloatType(32), Shape(3))) -> {F} {{ @sum(sq (v * [1.0, 2.0, 3.0])) }}"
    );
    let v = Tensor::float(gradir::ast::BaseType::F32, vec![3u64], vec![1.0, 1.0, 0.5]).unwrap();
    let g = gradient_at(&parse_program(&src).unwrap(), "f", &[v], FloatMode::Widened).unwrap();
    assert_eq!(g.value, 1.0 + 4.0 + 2.25);
    assert_eq!(g.gradients[0].floats().unwrap(), &[2.0, 8.0, 9.0]);
}

#[test]
fn sum_gradient_is_all_ones() {
    let src = "operator @sum : forall (B : BaseType), forall (S : Shape), Tensor(B, S) -> Tensor(B, Shape())
               def @f(v : Tensor(FloatType(32), Shape(3))) -> Tensor(FloatType(32), Shape()) { @sum(v) }";
    let p = parse_program(src).unwrap();
    let v = Tensor::float(gradir::ast::BaseType::F32, vec![3u64], vec![1.0, 2.0, 3.0]).unwrap();
    let g = gradient_at(&p, "f", &[v], FloatMode::Native).unwrap();
    assert_eq!(g.value, 6.0);
    assert_eq!(g.gradients[0].floats().unwrap(), &[1.0, 1.0, 1.0]);
}

#[test]
fn mutual_recursion_differentiates() {
    let src = format!(
        "def @a(x : {F}, n : Tensor(IntType(32), Shape())) -> {F} {{ if n = 0 then x else x * @b(x, n - 1) }}
         def @b(x : {F}, n : Tensor(IntType(32), Shape())) -> {F} {{ if n = 0 then x else x + @a(x, n - 1) }}
         def @f(x : {F}) -> {F} {{ @a(x, 3) }}"
    );
    // a(x,3) = x * (x + x * x) = x^2 + x^3
    let (v, g) = scalar_grad(&src, "f", &[2.0]);
    assert_eq!(v, 4.0 + 8.0);
    assert_eq!(g, vec![4.0 + 12.0]);
}

#[test]
fn references_are_cleared_between_calls() {
    let src = format!("def @f(x : {F}) -> {F} {{ x * x }}");
    let gp = GradientProgram::new(&parse_program(&src).unwrap(), "f").unwrap();
    let a = gp.at(&[Tensor::scalar_f32(2.0)], FloatMode::Native).unwrap();
    let b = gp.at(&[Tensor::scalar_f32(2.0)], FloatMode::Native).unwrap();
    assert_eq!(a, b);
}

fn call_all(name: &str, params: &[Param]) -> Expr {
    Expr::call(
        Expr::global(name),
        params.iter().map(|p| Expr::local(&p.name)).collect(),
    )
}

/// Grad of `fn(x..) { @f(x..) + @g(x..) }` against the sum of the separate
/// gradients.
#[test]
fn gradient_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut points = 0;
    while points < 20 {
        let g = generate_pair(&mut rng, FuzzConfig::default());
        let f_def = g.program.definition("f").unwrap().clone();
        let params = f_def.params.clone();
        let scalar = f_def.ret.clone();
        let sum = Expr::function(
            params.clone(),
            scalar.clone(),
            Expr::binary(BinOp::Add, call_all("f", &params), call_all("g", &params)),
        );
        let mut program: Program = g.program.clone();
        program
            .push(Item::Definition(Definition {
                name: "fg".into(),
                params: params.clone(),
                ret: Type::Product(vec![
                    scalar,
                    Type::Product(params.iter().map(|p| p.ty.clone()).collect()),
                ]),
                body: Expr::call(Expr::grad(sum), params.iter().map(|p| Expr::local(&p.name)).collect()),
                span: Span::default(),
            }))
            .unwrap();
        let gf = GradientProgram::new(&program, "f").unwrap();
        let gg = GradientProgram::new(&program, "g").unwrap();
        let typed = check_program(&program).unwrap();
        let point = (0..100)
            .map(|_| sample_point(&mut rng, &g.params))
            .find(|p| {
                point_is_regular(&gf, "f", p, Margins::default())
                    && point_is_regular(&gg, "g", p, Margins::default())
            });
        let Some(point) = point else { continue };
        let a = gf.at(&point, FloatMode::Widened).unwrap();
        let b = gg.at(&point, FloatMode::Widened).unwrap();
        let out = gradir::eval::Interpreter::new(&typed)
            .with_mode(FloatMode::Widened)
            .call("fg", point.iter().cloned().map(gradir::eval::Value::Tensor).collect())
            .unwrap();
        let both = gradir::driver::split_gradient(&out).unwrap();
        assert!((both.value - (a.value + b.value)).abs() < 1e-9);
        for ((s, x), y) in both.gradients.iter().zip(&a.gradients).zip(&b.gradients) {
            for ((s, x), y) in s.floats().unwrap().iter().zip(x.floats().unwrap()).zip(y.floats().unwrap()) {
                assert!((s - (x + y)).abs() < 1e-9, "{s} vs {x} + {y}");
            }
        }
        points += 1;
    }
}

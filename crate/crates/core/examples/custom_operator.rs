//! Registers an operator with an evaluator and an adjoint rule, then
//! differentiates through it.

use std::sync::Arc;

use gradir::ast::{BinOp, Expr};
use gradir::autodiff::{accumulate, AdjointRule};
use gradir::eval::{FloatMode, OperatorImpl, Registry, Tensor};
use gradir::syntax::{parse_program, parse_type};
use gradir::{compare_with_finite_differences, GradientProgram};

const CUBE: &str = "forall (S : Shape), Tensor(FloatType(32), S) -> Tensor(FloatType(32), S)";

const SOURCE: &str = "
operator @cube : forall (S : Shape), Tensor(FloatType(32), S) -> Tensor(FloatType(32), S)
operator @sum : forall (B : BaseType), forall (S : Shape), Tensor(B, S) -> Tensor(B, Shape())
def @f(v : Tensor(FloatType(32), Shape(3))) -> Tensor(FloatType(32), Shape()) { @sum(@cube(v) - v) }";

fn cube() -> OperatorImpl {
    OperatorImpl::new("cube", parse_type(CUBE, false).unwrap(), |args, _mode| {
        let x = &args[0];
        let data = x.floats().expect("float tensor").iter().map(|v| v * v * v).collect();
        Tensor::float(x.base, x.shape.clone(), data)
    })
    // d(x^3) = 3 x^2, elementwise
    .with_adjoint(AdjointRule::new(&[], |a| {
        let x = a.values[0].clone();
        let three_x = Expr::binary(BinOp::Add, Expr::binary(BinOp::Add, x.clone(), x.clone()), x.clone());
        let local = Expr::binary(BinOp::Mul, three_x, x);
        match &a.adjoints[0] {
            Some(adj) => vec![accumulate(adj, Expr::binary(BinOp::Mul, a.grad.clone(), local))],
            None => Vec::new(),
        }
    }))
}

fn main() {
    let mut registry = Registry::builtin();
    registry.register(cube()).expect("new name");
    let program = parse_program(SOURCE).expect("parses");
    let gp = GradientProgram::with_registry(&program, "f", Arc::new(registry)).expect("checks");
    let point = [Tensor::float(gradir::ast::BaseType::F32, vec![3u64], vec![1.0, -2.0, 0.5]).unwrap()];
    let g = gp.at(&point, FloatMode::Native).expect("evaluates");
    println!("f = {}  grad = {}", g.value, g.gradients[0]);
    for s in compare_with_finite_differences(&gp, "f", &point, 1e-4).expect("evaluates") {
        println!("  slot {}: ad {:.6} fd {:.6}", s.index, s.ad, s.fd);
    }
}

//! `Grad` applied to a function that itself uses `Grad`: second derivatives
//! of x^3 and a look at how much code nesting produces.

use gradir::ast::pretty_program;
use gradir::eval::{FloatMode, Tensor};
use gradir::syntax::parse_program;
use gradir::GradientProgram;

const SOURCE: &str = "
def @f(x : Tensor(FloatType(64), Shape())) -> Tensor(FloatType(64), Shape()) { x * x * x }
def @df(x : Tensor(FloatType(64), Shape())) -> Tensor(FloatType(64), Shape()) { (Grad @f)(x)[1][0] }
def @ddf(x : Tensor(FloatType(64), Shape())) -> Tensor(FloatType(64), Shape()) { (Grad @df)(x)[1][0] }";

fn main() {
    let program = parse_program(SOURCE).expect("parses");
    let second = GradientProgram::new(&program, "df").expect("checks");
    let third = GradientProgram::new(&program, "ddf").expect("checks");
    for x in [1.0, 2.0, 5.0] {
        let p = [Tensor::scalar_f64(x)];
        let g2 = second.at(&p, FloatMode::Native).expect("evaluates");
        let g3 = third.at(&p, FloatMode::Native).expect("evaluates");
        println!("x = {x}: f' = {}  f'' = {}  f''' = {}", g2.value, g2.gradients[0], g3.gradients[0]);
    }
    let lines = pretty_program(third.typed().program()).lines().count();
    println!("elaborated program: {lines} lines");
}

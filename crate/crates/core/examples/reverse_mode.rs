//! Gradients of scalar functions, checked against central differences.

use gradir::eval::{FloatMode, Tensor};
use gradir::syntax::parse_program;
use gradir::{compare_with_finite_differences, GradientProgram};

const SOURCE: &str = "
def @f(x : Tensor(FloatType(32), Shape()), y : Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()) {
  let q = x / y in
  if q > 0.0 then sq q - x * y else - q
}";

fn main() {
    let program = parse_program(SOURCE).expect("parses");
    let gp = GradientProgram::new(&program, "f").expect("checks");
    for (x, y) in [(1.0, 2.0), (3.0, -1.5), (-2.0, 0.5)] {
        let point = [Tensor::scalar_f32(x), Tensor::scalar_f32(y)];
        let g = gp.at(&point, FloatMode::Native).expect("evaluates");
        println!("f({x}, {y}) = {}  grad = ({}, {})", g.value, g.gradients[0], g.gradients[1]);
        for s in compare_with_finite_differences(&gp, "f", &point, 1e-4).expect("evaluates") {
            println!("  arg {}: ad {:.6} fd {:.6} rel {:.1e}", s.argument, s.ad, s.fd, s.error);
        }
    }
}

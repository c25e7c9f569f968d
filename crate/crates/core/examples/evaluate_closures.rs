//! The interpreter on its own: recursion, closures passed as values, tensor
//! arithmetic, and the reference store staying empty for pure programs.

use gradir::eval::{parse_value, parameter_types, Interpreter};
use gradir::load;

const SOURCE: &str = "
def @compose(f : (Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()),
             g : (Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()),
             x : Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()) {
  f(g(x))
}
def @inc(x : Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()) { x + 1.0 }
def @sq(x : Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()) { sq x }
def @main(x : Tensor(FloatType(32), Shape())) -> (Tensor(FloatType(32), Shape()), Tensor(FloatType(32), Shape())) {
  (@compose(@sq, @inc, x), @compose(@inc, @sq, x))
}
def @outer(m : Tensor(FloatType(32), Shape(2, 2))) -> Tensor(FloatType(32), Shape(2, 2)) { m * m - m }
def @collatz(n : Tensor(IntType(32), Shape()), steps : Tensor(IntType(32), Shape())) -> Tensor(IntType(32), Shape()) {
  if n = 1 then steps
  else if n - n / 2 * 2 = 0 then @collatz(n / 2, steps + 1)
  else @collatz(3 * n + 1, steps + 1)
}";

fn call(entry: &str, args: &[&str]) {
    let program = load(SOURCE).expect("checks");
    let types = parameter_types(&program, entry).expect("defined");
    let values = args
        .iter()
        .zip(&types)
        .map(|(a, t)| parse_value(a, t).expect("literal fits"))
        .collect();
    let mut interp = Interpreter::new(&program);
    let v = interp.call(entry, values).expect("evaluates");
    println!("@{entry}({}) = {v}   [store cells: {}]", args.join(", "), interp.store_len());
}

fn main() {
    call("main", &["3.0"]);
    call("outer", &["[[1, 2], [3, 4]]"]);
    call("collatz", &["27", "0"]);
}

//! Types a few expressions and shows which rule rejects the ill-typed ones.

use gradir::ast::pretty_type;
use gradir::syntax::{parse_expr, parse_program};
use gradir::typecheck::{check_program, type_of, TypeEnv};

fn main() {
    let env = TypeEnv::new();
    for src in [
        "1",
        "[[1.0, 2.0], [3.0, 4.0]]",
        "(1, True)[1]",
        "if True then 1.0 else 2.0",
        "Zero Tensor(FloatType(64), Shape(2))",
        "1 + 1.0",
        "(1, 2)[5]",
        "[1.0, [2.0]]",
        "if 1 then 2 else 3",
        "y",
    ] {
        let e = parse_expr(src, false).expect("parses");
        match type_of(&env, &e) {
            Ok(t) => println!("{src:40} : {}", pretty_type(&t)),
            Err(err) => println!("{src:40} rejected by {}: {}", err.rule.label(), err.message),
        }
    }

    let program = parse_program(
        "def @pow(x : Tensor(FloatType(32), Shape()), n : Tensor(IntType(32), Shape())) -> Tensor(FloatType(32), Shape()) {
           if n = 0 then 1.0 else x * @pow(x, n - 1)
         }
         def @bad(x : Tensor(FloatType(32), Shape())) -> Tensor(FloatType(32), Shape()) { @pow(x, 2.0) }",
    )
    .expect("parses");
    for err in check_program(&program).unwrap_err() {
        println!("{err}");
    }
}

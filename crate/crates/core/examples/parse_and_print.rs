//! Parses a program, pretty-prints it, and shows that printing then
//! parsing again gives back the same tree.

use gradir::ast::pretty_program;
use gradir::syntax::parse_program;

const SOURCE: &str = "
operator @sum : forall (B : BaseType), forall (S : Shape), Tensor(B, S) -> Tensor(B, Shape())
def @mean3(v : Tensor(FloatType(32), Shape(3))) -> Tensor(FloatType(32), Shape()) {
  let s = @sum(v) in s / 3.0   // comment
}";

fn main() {
    let program = parse_program(SOURCE).expect("parses");
    let printed = pretty_program(&program);
    println!("{printed}");
    let again = parse_program(&printed).expect("printed text parses");
    assert_eq!(program, again);
    println!("\nround trip: equal");

    match parse_program("def @f() -> () { let x = in x }") {
        Ok(_) => unreachable!(),
        Err(errors) => {
            for e in errors {
                println!("error at {}: {} (expected {:?})", e.span, e.message, e.expected);
            }
        }
    }
}

//! Programs as JSON: encode, decode, and check the decoded program.

use gradir::syntax::{decode_json, encode_json, encode_json_pretty, parse_program};
use gradir::typecheck::check_program;

fn main() {
    let program = parse_program(
        "def @f(x : Tensor(FloatType(32), Shape())) -> (Tensor(FloatType(32), Shape()), Tensor(BoolType, Shape())) {
           (sq x, x > 0.0)
         }",
    )
    .expect("parses");
    println!("{}", encode_json_pretty(&program));
    let decoded = decode_json(&encode_json(&program)).expect("decodes");
    assert_eq!(decoded, program);
    check_program(&decoded).expect("checks");
    println!("decoded and checked");

    let err = decode_json(r#"{"v": 1, "items": [{"node": "Definition"}]}"#).unwrap_err();
    println!("malformed input: {}", err.message);
}

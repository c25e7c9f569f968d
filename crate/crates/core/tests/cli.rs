mod common;

use std::path::PathBuf;

use gradir::cli::main_with;
use gradir::syntax::Mode;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("gradir").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn example(name: &str) -> String {
    common::crate_dir().join("examples").join(name).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gradir-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn check_is_silent_on_success() {
    assert_eq!(run(&["check", &example("poly.rly")]), (0, String::new(), String::new()));
}

#[test]
fn grad_prints_value_and_gradients() {
    let (code, out, _) = run(&["grad", &example("sq.rly"), "--entry", "f", "--at", "3.0"]);
    assert_eq!((code, out.as_str()), (0, "(9, (6))\n"));
}

#[test]
fn gradcheck_passes_and_fails_on_tolerance() {
    let (code, out, _) = run(&["gradcheck", &example("branch.rly"), "--entry", "f", "--at", "-3.0"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.trim_end().ends_with(": ok"), "{out}");
    let (code, out, _) = run(&[
        "gradcheck", &example("cube.rly"), "--entry", "f", "--at", "1.3", "--h", "0.1", "--tol", "1e-12",
    ]);
    assert_eq!(code, 1);
    assert!(out.trim_end().ends_with("FAIL"), "{out}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    let (code, _, err) = run(&["check", "/nonexistent/file.rly"]);
    assert_eq!(code, 2);
    assert!(err.contains("cannot read"), "{err}");
    let (code, _, err) = run(&["run", &example("poly.rly"), "--args", "1.0", "2.0"]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn type_errors_as_json() {
    let path = scratch("bad.rly");
    std::fs::write(
        &path,
        "def @f(x : Tensor(FloatType(32), Shape())) -> Tensor(IntType(32), Shape()) { x }\n",
    )
    .unwrap();
    let (code, out, err) = run(&["check", "--json-errors", path.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (1, ""));
    let v: serde_json::Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert_eq!(v["rule"], "Type-Function-Definition");
    assert_eq!(v["span"]["line"], 1);

    std::fs::write(&path, "def @f(").unwrap();
    let (code, _, err) = run(&["check", "--json-errors", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert_eq!(v["rule"], "Parse");
}

#[test]
fn internal_forms_need_the_flag() {
    let file = example("counter.rly");
    assert_eq!(run(&["check", &file]).0, 1);
    assert_eq!(run(&["check", "--internal", &file]).0, 0);
}

#[test]
fn corpus_survives_json() {
    for file in common::corpus() {
        let internal = if file.mode == Mode::Internal { vec!["--internal"] } else { vec![] };
        let path = file.path.display().to_string();
        let mut args = internal.clone();
        args.extend(["to-json", path.as_str()]);
        let (code, json, err) = run(&args);
        assert_eq!(code, 0, "{path}: {err}");
        let json_path = scratch(&format!("{}.json", file.path.file_stem().unwrap().to_string_lossy()));
        std::fs::write(&json_path, &json).unwrap();
        let (code, text, err) = run(&["from-json", json_path.to_str().unwrap()]);
        assert_eq!(code, 0, "{path}: {err}");
        let text_path = json_path.with_extension("rly");
        std::fs::write(&text_path, &text).unwrap();
        let mut args = internal.clone();
        args.extend(["check", text_path.to_str().unwrap()]);
        let (code, _, err) = run(&args);
        assert_eq!(code, 0, "{path}: {err}\n{text}");
        let mut args = internal;
        args.extend(["to-json", text_path.to_str().unwrap()]);
        assert_eq!(run(&args).1, json, "{path}");
    }
}

#[test]
fn directives_match_the_command_line() {
    for file in common::corpus() {
        for d in &file.directives {
            let path = file.path.display().to_string();
            let mut args = vec![];
            if file.mode == Mode::Internal {
                args.push("--internal");
            }
            args.extend([if d.grad { "grad" } else { "run" }, path.as_str(), "--entry", d.entry.as_str()]);
            args.push(if d.grad { "--at" } else { "--args" });
            args.extend(d.args.iter().map(String::as_str));
            let (code, out, err) = run(&args);
            assert_eq!(code, 0, "{path} {}: {err}", d.entry);
            if let Some(expected) = &d.expected {
                assert_eq!(out.trim_end(), expected, "{path} {}", d.entry);
            }
        }
    }
}

#[test]
fn ad_dump_shows_the_elaborated_wrapper() {
    let (code, out, _) = run(&["ad-dump", &example("sq.rly"), "--entry", "f"]);
    assert_eq!(code, 0);
    assert!(out.contains("def @f_grad("), "{out}");
    assert!(!out.contains("Grad"), "{out}");
}

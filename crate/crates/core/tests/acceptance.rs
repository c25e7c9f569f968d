//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use gradir::ast::{
    alpha_equal, pretty_program, BaseType, Definition, Expr, Item, Param, Program, Shape, Span, Type,
};
use gradir::eval::{
    finite_diff, parameter_types, parse_value, FloatMode, Interpreter, Tensor, Value,
};
use gradir::fuzz::{generate_program, point_is_regular, sample_point, FuzzConfig, Margins};
use gradir::syntax::{decode_json, encode_json, parse_program_in, Mode};
use gradir::typecheck::{check_program, Rule, TypedProgram};
use gradir::{compare_with_finite_differences, relative_error, GradientProgram};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{corpus, golden_cases, CorpusFile};

type Outcome = Result<String, String>;

const FUZZ_SEED: u64 = 20_240_611;
const FUZZ_PROGRAMS: usize = 200;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let fuzz = FuzzRun::new();
    let criteria: Vec<Criterion<'_>> = vec![
        ("typing-rule golden suite", Box::new(golden_suite)),
        ("gradient oracle suite", Box::new(|| fuzz.oracle())),
        ("named gradient cases", Box::new(named_cases)),
        ("higher-order derivatives", Box::new(second_derivatives)),
        ("closure property", Box::new(|| fuzz.closure())),
        ("round-trips", Box::new(round_trips)),
        ("type-value agreement", Box::new(type_value_agreement)),
        ("surface purity", Box::new(surface_purity)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn load(source: &str, mode: Mode) -> Result<TypedProgram, String> {
    let program = parse_program_in(source, mode).map_err(|e| format!("{e:?}"))?;
    check_program(&program).map_err(|e| format!("{e:?}"))
}

fn golden_suite() -> Outcome {
    let start = Instant::now();
    let cases = golden_cases();
    let mut accepted = BTreeSet::new();
    let mut rejected = BTreeSet::new();
    let mut problems = Vec::new();
    for case in &cases {
        let result = parse_program_in(&case.source, case.mode)
            .map_err(|e| format!("parse error {e:?}"))
            .and_then(|p| check_program(&p).map_err(|errs| errs[0].rule.label().to_string()));
        match (case.accept, result) {
            (true, Ok(_)) => {
                accepted.insert(case.rule.clone());
            }
            (false, Err(cited)) if cited == case.cites => {
                rejected.insert(case.rule.clone());
            }
            (true, Err(e)) => problems.push(format!("line {}: rejected ({e})", case.line)),
            (false, Err(e)) => problems.push(format!(
                "line {}: cited {e}, expected {}",
                case.line, case.cites
            )),
            (false, Ok(_)) => problems.push(format!("line {}: accepted", case.line)),
        }
    }
    // a zero extent cannot be written in source text
    let zero = Program::new(vec![Item::Definition(Definition {
        name: "f".into(),
        params: vec![Param::new("x", Type::tensor(BaseType::F32, Shape(vec![2, 0])))],
        ret: Type::unit(),
        body: Expr::tuple(vec![]),
        span: Span::default(),
    })])
    .expect("one item");
    match check_program(&zero) {
        Err(errs) if errs[0].rule == Rule::ShapeT => {
            rejected.insert("Shape-T".to_string());
        }
        other => problems.push(format!("Shape(2, 0) parameter: {:?}", other.err())),
    }
    for rule in Rule::KINDING.iter().chain(&Rule::TYPING) {
        let label = rule.label();
        if !accepted.contains(label) || !rejected.contains(label) {
            problems.push(format!("{label} lacks an accept or a reject case"));
        }
    }
    let elapsed = start.elapsed();
    if cases.len() < 40 {
        problems.push(format!("only {} cases", cases.len()));
    }
    if elapsed.as_secs_f64() >= 1.0 {
        problems.push(format!("took {elapsed:?}"));
    }
    if problems.is_empty() {
        Ok(format!(
            "{} cases, all {} rules accepted and rejected, {:.0?}",
            cases.len() + 1,
            Rule::KINDING.len() + Rule::TYPING.len(),
            elapsed
        ))
    } else {
        Err(problems.join("; "))
    }
}

struct FuzzRun {
    programs: Vec<(Program, Vec<Type>, Result<GradientProgram, String>)>,
    seconds: f64,
}

impl FuzzRun {
    fn new() -> FuzzRun {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(FUZZ_SEED);
        let programs = (0..FUZZ_PROGRAMS)
            .map(|_| {
                let g = generate_program(&mut rng, FuzzConfig::default());
                let gp = GradientProgram::new(&g.program, &g.entry).map_err(|e| e.to_string());
                (g.program, g.params, gp)
            })
            .collect();
        FuzzRun {
            programs,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    fn oracle(&self) -> Outcome {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(FUZZ_SEED ^ 1);
        let (mut slots, mut worst, mut resampled) = (0usize, 0.0f64, 0usize);
        let mut problems = Vec::new();
        for (i, (_, params, gp)) in self.programs.iter().enumerate() {
            let Ok(gp) = gp else {
                problems.push(format!("program {i} did not elaborate"));
                continue;
            };
            for _ in 0..3 {
                let mut point = None;
                for attempt in 0..200 {
                    let p = sample_point(&mut rng, params);
                    if point_is_regular(gp, "f", &p, Margins::default()) {
                        resampled += attempt;
                        point = Some(p);
                        break;
                    }
                }
                let Some(point) = point else {
                    problems.push(format!("program {i}: no regular point in 200 samples"));
                    continue;
                };
                match compare_with_finite_differences(gp, "f", &point, 1e-4) {
                    Ok(checks) => {
                        for s in checks {
                            slots += 1;
                            worst = worst.max(s.error);
                            if s.error > 1e-3 {
                                problems.push(format!(
                                    "program {i} arg {} [{}]: ad {} fd {}",
                                    s.argument, s.index, s.ad, s.fd
                                ));
                            }
                        }
                    }
                    Err(e) => problems.push(format!("program {i}: {e}")),
                }
            }
        }
        let elapsed = self.seconds + start.elapsed().as_secs_f64();
        if elapsed >= 30.0 {
            problems.push(format!("took {elapsed:.1}s"));
        }
        if problems.is_empty() {
            Ok(format!(
                "{FUZZ_PROGRAMS} programs x 3 points, {slots} partials, max rel error {worst:.1e}, {resampled} singular samples redrawn, {elapsed:.1}s"
            ))
        } else {
            Err(format!("{} problems: {}", problems.len(), problems[..problems.len().min(5)].join("; ")))
        }
    }

    fn closure(&self) -> Outcome {
        let mut problems = Vec::new();
        for (i, (_, _, gp)) in self.programs.iter().enumerate() {
            let gp = match gp {
                Ok(gp) => gp,
                Err(e) => {
                    problems.push(format!("program {i}: {e}"));
                    continue;
                }
            };
            let text = pretty_program(gp.typed().program());
            let rechecked = parse_program_in(&text, Mode::Internal)
                .map_err(|e| format!("{e:?}"))
                .and_then(|p| check_program(&p).map_err(|e| format!("{e:?}")));
            match rechecked {
                Ok(t) => {
                    if !alpha_equal(t.program(), gp.typed().program()) {
                        problems.push(format!("program {i}: recheck changed the program"));
                    }
                    let want = gp.typed().global_type(gp.wrapper());
                    if t.global_type(gp.wrapper()) != want {
                        problems.push(format!("program {i}: gradient type changed"));
                    }
                }
                Err(e) => problems.push(format!("program {i}: {e}")),
            }
        }
        if problems.is_empty() {
            Ok(format!(
                "{FUZZ_PROGRAMS} elaborated programs printed, reparsed and re-typechecked"
            ))
        } else {
            Err(problems.join("; "))
        }
    }
}

fn scalars(xs: &[f64]) -> Vec<Tensor> {
    xs.iter().map(|x| Tensor::scalar_f32(*x)).collect()
}

const F: &str = "Tensor(FloatType(32), Shape())";

fn named_cases() -> Outcome {
    let sq = format!("def @f(x : {F}) -> {F} {{ sq x }}");
    let quot = format!("def @f(x : {F}, y : {F}) -> {F} {{ x / y }}");
    let twice = format!(
        "def @sq(x : {F}) -> {F} {{ sq x }}
         def @twice(g : ({F}) -> {F}, x : {F}) -> {F} {{ g(g(x)) }}
         def @f(x : {F}) -> {F} {{ @twice(@sq, x) }}"
    );
    let pow = format!(
        "def @pow(x : {F}, n : Tensor(IntType(32), Shape())) -> {F} {{ if n = 0 then 1.0 else x * @pow(x, n - 1) }}
         def @f(x : {F}) -> {F} {{ @pow(x, 4) }}"
    );
    let branch = format!("def @f(x : {F}) -> {F} {{ if x > 0.0 then x * x else - x }}");
    let cases: [(&str, &str, &[f64], &[f64]); 5] = [
        ("sq", &sq, &[3.0], &[6.0]),
        ("x/y", &quot, &[1.0, 2.0], &[0.5, -0.25]),
        ("twice(sq)", &twice, &[2.0], &[32.0]),
        ("pow(x, 4)", &pow, &[2.0], &[32.0]),
        ("branch", &branch, &[-3.0], &[-1.0]),
    ];
    let mut problems = Vec::new();
    let mut worst = 0.0f64;
    for (name, src, at, want) in cases {
        let program = parse_program_in(src, Mode::User).map_err(|e| format!("{name}: {e:?}"))?;
        let gp = GradientProgram::new(&program, "f").map_err(|e| format!("{name}: {e}"))?;
        let point = scalars(at);
        let ad = gp.at(&point, FloatMode::Widened).map_err(|e| e.to_string())?;
        let fd = finite_diff(gp.typed(), "f", &point, 1e-4).map_err(|e| e.to_string())?;
        for (k, w) in want.iter().enumerate() {
            let a = ad.gradients[k].as_f64().unwrap();
            let f = fd[k].as_f64().unwrap();
            let e = relative_error(a, f).max(relative_error(a, *w));
            worst = worst.max(e);
            if e > 1e-6 {
                problems.push(format!("{name}[{k}]: ad {a}, fd {f}, expected {w}"));
            }
        }
    }
    if problems.is_empty() {
        Ok(format!("5 cases, max rel error {worst:.1e} against FD and expected values"))
    } else {
        Err(problems.join("; "))
    }
}

fn second_derivatives() -> Outcome {
    let src = format!(
        "def @f(x : {F}) -> {F} {{ x * x * x }}
         def @df(x : {F}) -> {F} {{ (Grad @f)(x)[1][0] }}"
    );
    let program = parse_program_in(&src, Mode::User).map_err(|e| format!("{e:?}"))?;
    let gp = GradientProgram::new(&program, "df").map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    let mut problems = Vec::new();
    let h = 1e-3;
    for (x, want) in [(1.0, 6.0), (2.0, 12.0), (5.0, 30.0)] {
        let ad = gp.at(&scalars(&[x]), FloatMode::Widened).map_err(|e| e.to_string())?;
        let second = ad.gradients[0].as_f64().unwrap();
        let f = |v: f64| -> Result<f64, String> {
            let mut interp = Interpreter::new(gp.typed()).with_mode(FloatMode::Widened);
            let r = interp
                .call("f", vec![Value::Tensor(Tensor::scalar_f32(v))])
                .map_err(|e| e.to_string())?;
            Ok(r.as_tensor().and_then(Tensor::as_f64).unwrap())
        };
        let nested = (f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h);
        let e = relative_error(second, nested);
        if e > 1e-3 || relative_error(second, want) > 1e-3 {
            problems.push(format!("x = {x}: ad {second}, nested FD {nested}, expected {want}"));
        }
        out.push(format!("{second}"));
    }
    if problems.is_empty() {
        Ok(format!("f''(1, 2, 5) = ({}) matches nested central differences", out.join(", ")))
    } else {
        Err(problems.join("; "))
    }
}

fn round_trips() -> Outcome {
    let mut programs: Vec<(String, Program, Mode)> = Vec::new();
    for file in corpus() {
        let name = file.path.file_name().unwrap().to_string_lossy().to_string();
        let p = parse_program_in(&file.source, file.mode).map_err(|e| format!("{name}: {e:?}"))?;
        for d in file.directives.iter().filter(|d| d.grad) {
            let gp = GradientProgram::new(&p, &d.entry).map_err(|e| format!("{name}: {e}"))?;
            programs.push((format!("{name} (Grad @{})", d.entry), gp.typed().program().clone(), Mode::Internal));
        }
        programs.push((name, p, file.mode));
    }
    let mut problems = Vec::new();
    for (name, p, mode) in &programs {
        match parse_program_in(&pretty_program(p), *mode) {
            Ok(q) if alpha_equal(p, &q) => {}
            Ok(_) => problems.push(format!("{name}: pretty/parse changed the program")),
            Err(e) => problems.push(format!("{name}: reparse failed: {e:?}")),
        }
        match decode_json(&encode_json(p)) {
            Ok(q) if &q == p => {}
            Ok(_) => problems.push(format!("{name}: JSON changed the program")),
            Err(e) => problems.push(format!("{name}: JSON decode failed: {e}")),
        }
    }
    if problems.is_empty() {
        Ok(format!("{} programs (corpus and their elaborated gradients), text and JSON", programs.len()))
    } else {
        Err(problems.join("; "))
    }
}

fn static_result(typed: &TypedProgram, entry: &str) -> Option<Type> {
    match typed.global_type(entry)? {
        Type::Arrow(_, ret) => Some(*ret.clone()),
        _ => None,
    }
}

/// Evaluates every corpus directive; returns (description, static type,
/// value, printed value, expected, store cells, ref-free?).
fn corpus_runs(file: &CorpusFile) -> Result<Vec<Run>, String> {
    let name = file.path.file_name().unwrap().to_string_lossy().to_string();
    let base = parse_program_in(&file.source, file.mode).map_err(|e| format!("{name}: {e:?}"))?;
    let mut runs = Vec::new();
    for d in &file.directives {
        let (typed, entry) = if d.grad {
            let gp = GradientProgram::new(&base, &d.entry).map_err(|e| format!("{name}: {e}"))?;
            let w = gp.wrapper().to_string();
            (gp.typed().clone(), w)
        } else {
            (load(&file.source, file.mode).map_err(|e| format!("{name}: {e}"))?, d.entry.clone())
        };
        let types = parameter_types(&typed, &entry).ok_or(format!("{name}: no @{entry}"))?;
        let args: Vec<Value<'static>> = d
            .args
            .iter()
            .zip(&types)
            .map(|(a, t)| parse_value(a, t).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let ret = static_result(&typed, &entry).ok_or(format!("{name}: @{entry} has no arrow type"))?;
        let mut interp = Interpreter::new(&typed);
        let v = interp.call(&entry, args).map_err(|e| format!("{name} @{entry}: {e}"))?;
        runs.push(Run {
            what: format!("{name} {} @{}", if d.grad { "grad" } else { "run" }, d.entry),
            conforms: v.conforms(&ret),
            described: v.describe(),
            static_type: gradir::ast::pretty_type(&ret),
            printed: v.to_string(),
            expected: d.expected.clone(),
            store: interp.store_len(),
            ref_free: !typed.program().definitions().any(|d| d.body.contains_ref_forms()),
        });
    }
    Ok(runs)
}

struct Run {
    what: String,
    conforms: bool,
    described: String,
    static_type: String,
    printed: String,
    expected: Option<String>,
    store: usize,
    ref_free: bool,
}

fn all_runs() -> Result<Vec<Run>, String> {
    let mut runs = Vec::new();
    for file in corpus() {
        runs.extend(corpus_runs(&file)?);
    }
    Ok(runs)
}

fn type_value_agreement() -> Outcome {
    let runs = all_runs()?;
    let mut problems = Vec::new();
    for r in &runs {
        if !r.conforms {
            problems.push(format!("{}: value of type {} vs static {}", r.what, r.described, r.static_type));
        }
        if let Some(e) = &r.expected {
            if *e != r.printed {
                problems.push(format!("{}: printed {}, expected {e}", r.what, r.printed));
            }
        }
    }
    if problems.is_empty() {
        Ok(format!("{} corpus evaluations, runtime types equal static types", runs.len()))
    } else {
        Err(problems.join("; "))
    }
}

fn surface_purity() -> Outcome {
    let runs = all_runs()?;
    let pure: Vec<&Run> = runs.iter().filter(|r| r.ref_free).collect();
    let dirty: Vec<String> = pure
        .iter()
        .filter(|r| r.store != 0)
        .map(|r| format!("{}: {} cells", r.what, r.store))
        .collect();
    if dirty.is_empty() && !pure.is_empty() {
        Ok(format!("{} ref-free corpus evaluations allocated no store cells", pure.len()))
    } else if pure.is_empty() {
        Err("no ref-free evaluations found".into())
    } else {
        Err(dirty.join("; "))
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use gradir::syntax::Mode;

pub fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

#[derive(Debug, Clone)]
pub struct GoldenCase {
    pub line: usize,
    pub accept: bool,
    /// Rule the case exercises.
    pub rule: String,
    /// Rule a rejection must cite.
    pub cites: String,
    pub mode: Mode,
    pub source: String,
}

pub fn golden_cases() -> Vec<GoldenCase> {
    let text = std::fs::read_to_string(crate_dir().join("tests/golden.txt")).expect("golden.txt");
    let mut cases: Vec<GoldenCase> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(header) = line.strip_prefix("### ") {
            let words: Vec<&str> = header.split_whitespace().collect();
            let accept = match words[0] {
                "accept" => true,
                "reject" => false,
                other => panic!("golden.txt:{}: bad verdict {other}", i + 1),
            };
            let rule = words[1].to_string();
            let cites = words
                .iter()
                .position(|w| *w == "cites")
                .map(|p| words[p + 1].to_string())
                .unwrap_or_else(|| rule.clone());
            let mode = if words.contains(&"internal") { Mode::Internal } else { Mode::User };
            cases.push(GoldenCase {
                line: i + 1,
                accept,
                rule,
                cites,
                mode,
                source: String::new(),
            });
        } else if let Some(case) = cases.last_mut() {
            case.source.push_str(line);
            case.source.push('\n');
        }
    }
    cases
}

#[derive(Debug, Clone)]
pub struct Directive {
    pub grad: bool,
    pub entry: String,
    pub args: Vec<String>,
    pub expected: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CorpusFile {
    pub path: PathBuf,
    pub source: String,
    pub mode: Mode,
    pub directives: Vec<Directive>,
}

/// The `.rly` programs under `examples/` with their `//@` directives.
pub fn corpus() -> Vec<CorpusFile> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(crate_dir().join("examples"))
        .expect("examples dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "rly"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let source = std::fs::read_to_string(&path).expect("readable");
            let mut mode = Mode::User;
            let mut directives = Vec::new();
            for line in source.lines() {
                let Some(d) = line.strip_prefix("//@ ") else { continue };
                if d.trim() == "mode internal" {
                    mode = Mode::Internal;
                    continue;
                }
                let (call, expected) = match d.split_once("=>") {
                    Some((c, e)) => (c, Some(e.trim().to_string())),
                    None => (d, None),
                };
                let mut words = call.split_whitespace();
                let grad = match words.next() {
                    Some("run") => false,
                    Some("grad") => true,
                    other => panic!("{}: unknown directive {other:?}", path.display()),
                };
                let entry = words.next().expect("entry name").to_string();
                directives.push(Directive {
                    grad,
                    entry,
                    args: words.map(str::to_string).collect(),
                    expected,
                });
            }
            CorpusFile {
                path,
                source,
                mode,
                directives,
            }
        })
        .collect()
}

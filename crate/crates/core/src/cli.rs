//! The `gradir` command line.
//!
//! Values and JSON go to the output stream; diagnostics go to the error
//! stream. Exit codes: 0 success, 1 analysis, runtime or tolerance failure,
//! 2 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ast::pretty_program;
use crate::driver::{compare_with_finite_differences, Error, GradientProgram};
use crate::eval::{parameter_types, parse_value, Interpreter, Tensor, Value};
use crate::syntax::{decode_json, encode_json_pretty, parse_program_in, Mode};
use crate::typecheck::{check_program, TypedProgram};

#[derive(Debug, Parser)]
#[command(name = "gradir", version, about = "Typecheck, run and differentiate tensor IR programs")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Accept internal forms (`fn`, references) in the input.
    #[arg(long, global = true)]
    pub internal: bool,
    /// Print diagnostics as JSON objects, one per line.
    #[arg(long, global = true)]
    pub json_errors: bool,
}

#[derive(Debug, Args)]
pub struct Entry {
    pub file: PathBuf,
    #[arg(long, default_value = "main")]
    pub entry: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and typecheck.
    Check { file: PathBuf },
    /// Evaluate an entry point.
    Run {
        #[command(flatten)]
        target: Entry,
        #[arg(long, num_args = 0.., allow_negative_numbers = true)]
        args: Vec<String>,
    },
    /// Print `(value, (gradients))` of a scalar entry point.
    Grad {
        #[command(flatten)]
        target: Entry,
        #[arg(long, num_args = 0.., allow_negative_numbers = true)]
        at: Vec<String>,
    },
    /// Compare reverse-mode gradients with central differences.
    Gradcheck {
        #[command(flatten)]
        target: Entry,
        #[arg(long, num_args = 0.., allow_negative_numbers = true)]
        at: Vec<String>,
        #[arg(long, default_value_t = 1e-4)]
        h: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Print the program with the entry's gradient elaborated.
    AdDump {
        #[command(flatten)]
        target: Entry,
    },
    /// Encode a program as JSON.
    ToJson { file: PathBuf },
    /// Decode a JSON program and print it as source text.
    FromJson { file: PathBuf },
}

impl Command {
    fn file(&self) -> &Path {
        match self {
            Command::Check { file } | Command::ToJson { file } | Command::FromJson { file } => file,
            Command::Run { target, .. }
            | Command::Grad { target, .. }
            | Command::Gradcheck { target, .. }
            | Command::AdDump { target } => &target.file,
        }
    }
}

enum Failure {
    Analysis(Error),
    Tolerance,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(m) => Failure::Usage(m),
            other => Failure::Analysis(other),
        }
    }
}

/// Runs the command line and returns the exit code.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match CliConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(&config, out) {
        Ok(()) => 0,
        Err(Failure::Tolerance) => 1,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            2
        }
        Err(Failure::Analysis(e)) => {
            report(&e, config.json_errors, err);
            1
        }
    }
}

fn report(e: &Error, json: bool, err: &mut dyn Write) {
    if !json {
        let _ = writeln!(err, "{e}");
        return;
    }
    let objects = match e {
        Error::Parse(es) => es.iter().map(|e| e.to_json()).collect(),
        Error::Type(es) => es.iter().map(|e| e.to_json()).collect(),
        Error::Runtime(r) => vec![serde_json::json!({ "rule": "Runtime", "message": r.message })],
        Error::Usage(m) => vec![serde_json::json!({ "rule": "Usage", "message": m })],
    };
    for o in objects {
        let _ = writeln!(err, "{o}");
    }
}

fn dispatch(config: &CliConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let path = config.command.file();
    let source = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read `{}`: {e}", path.display())))?;
    let mode = if config.internal { Mode::Internal } else { Mode::User };
    let parse = |src: &str| parse_program_in(src, mode).map_err(Error::Parse);
    let io = |e: std::io::Error| Failure::Analysis(Error::Usage(format!("write failed: {e}")));
    match &config.command {
        Command::Check { .. } => {
            check_program(&parse(&source)?).map_err(Error::Type)?;
        }
        Command::Run { target, args } => {
            let typed = check_program(&parse(&source)?).map_err(Error::Type)?;
            let values = arguments(&typed, &target.entry, args)?;
            let v = Interpreter::new(&typed)
                .call(&target.entry, values)
                .map_err(Error::Runtime)?;
            writeln!(out, "{v}").map_err(io)?;
        }
        Command::Grad { target, at } => {
            let gp = GradientProgram::new(&parse(&source)?, &target.entry)?;
            let values = arguments(gp.typed(), &target.entry, at)?;
            let v = Interpreter::new(gp.typed())
                .call(gp.wrapper(), values)
                .map_err(Error::Runtime)?;
            writeln!(out, "{v}").map_err(io)?;
        }
        Command::Gradcheck { target, at, h, tol } => {
            let gp = GradientProgram::new(&parse(&source)?, &target.entry)?;
            let point: Vec<Tensor> = arguments(gp.typed(), &target.entry, at)?
                .into_iter()
                .map(|v| {
                    v.into_tensor()
                        .ok_or_else(|| Failure::Usage("gradcheck needs tensor arguments".into()))
                })
                .collect::<Result<_, _>>()?;
            let slots = compare_with_finite_differences(&gp, &target.entry, &point, *h)
                .map_err(Error::Runtime)?;
            let mut worst = 0.0f64;
            for s in &slots {
                worst = worst.max(s.error);
                writeln!(
                    out,
                    "arg {} [{}]: ad {} fd {} rel {:.3e}",
                    s.argument, s.index, s.ad, s.fd, s.error
                )
                .map_err(io)?;
            }
            let ok = worst <= *tol;
            writeln!(
                out,
                "max relative error {worst:.3e} (tol {tol:e}): {}",
                if ok { "ok" } else { "FAIL" }
            )
            .map_err(io)?;
            if !ok {
                return Err(Failure::Tolerance);
            }
        }
        Command::AdDump { target } => {
            let gp = GradientProgram::new(&parse(&source)?, &target.entry)?;
            writeln!(out, "{}", pretty_program(gp.typed().program())).map_err(io)?;
        }
        Command::ToJson { .. } => {
            writeln!(out, "{}", encode_json_pretty(&parse(&source)?)).map_err(io)?;
        }
        Command::FromJson { .. } => {
            let p = decode_json(&source).map_err(|e| Error::Parse(vec![e]))?;
            writeln!(out, "{}", pretty_program(&p)).map_err(io)?;
        }
    }
    Ok(())
}

fn arguments(typed: &TypedProgram, entry: &str, literals: &[String]) -> Result<Vec<Value<'static>>, Failure> {
    let types = parameter_types(typed, entry)
        .ok_or_else(|| Failure::Usage(format!("no definition named `@{entry}`")))?;
    if types.len() != literals.len() {
        return Err(Failure::Usage(format!(
            "`@{entry}` takes {} argument(s), {} given",
            types.len(),
            literals.len()
        )));
    }
    literals
        .iter()
        .zip(&types)
        .map(|(text, ty)| parse_value(text, ty).map_err(|e| Failure::Usage(e.to_string())))
        .collect()
}

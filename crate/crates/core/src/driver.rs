//! End-to-end helpers: source text to checked program, and gradient entry
//! points wrapped around existing definitions.

use std::fmt;
use std::sync::Arc;

use crate::ast::{Definition, Expr, Item, Param, Program, Span, Type};
use crate::eval::{FloatMode, Interpreter, Registry, RuntimeError, Tensor, Value};
use crate::syntax::{parse_program_in, Mode, ParseError};
use crate::typecheck::{check_program, check_program_with, TypeError, TypedProgram};

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Parse(Vec<ParseError>),
    Type(Vec<TypeError>),
    Runtime(RuntimeError),
    Usage(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn lines<T: fmt::Display>(f: &mut fmt::Formatter<'_>, what: &str, errs: &[T]) -> fmt::Result {
            for (i, e) in errs.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{what}: {e}")?;
            }
            Ok(())
        }
        match self {
            Error::Parse(es) => lines(f, "parse error", es),
            Error::Type(es) => lines(f, "type error", es),
            Error::Runtime(e) => write!(f, "{e}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<RuntimeError> for Error {
    fn from(e: RuntimeError) -> Self {
        Error::Runtime(e)
    }
}

/// Parses (user surface) and checks a program.
pub fn load(source: &str) -> Result<TypedProgram, Error> {
    load_in(source, Mode::User)
}

pub fn load_in(source: &str, mode: Mode) -> Result<TypedProgram, Error> {
    let program = parse_program_in(source, mode).map_err(Error::Parse)?;
    check_program(&program).map_err(Error::Type)
}

/// Adds `def @<entry>_grad(x1 : T1, ...) -> (R, (T1, ...)) { (Grad @entry)(x1, ...) }`
/// and returns the new program with the wrapper's name.
pub fn with_gradient_entry(program: &Program, entry: &str) -> Result<(Program, String), Error> {
    let def = program
        .definition(entry)
        .ok_or_else(|| Error::Usage(format!("no definition named `@{entry}`")))?;
    let mut name = format!("{entry}_grad");
    let mut n = 1;
    while program.contains(&name) {
        n += 1;
        name = format!("{entry}_grad{n}");
    }
    let params: Vec<Param> = def
        .params
        .iter()
        .enumerate()
        .map(|(i, p)| Param::new(format!("x{}", i + 1), p.ty.clone()))
        .collect();
    let args = params.iter().map(|p| Expr::local(&p.name)).collect();
    let ret = Type::Product(vec![
        def.ret.clone(),
        Type::Product(def.params.iter().map(|p| p.ty.clone()).collect()),
    ]);
    let wrapper = Definition {
        name: name.clone(),
        params,
        ret,
        body: Expr::call(Expr::grad(Expr::global(entry)), args),
        span: Span::default(),
    };
    let mut out = program.clone();
    out.push(Item::Definition(wrapper))
        .map_err(Error::Usage)?;
    Ok((out, name))
}

/// Result of differentiating a scalar function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub gradients: Vec<Tensor>,
}

/// A checked program with a gradient wrapper around one entry point, ready
/// to be evaluated at many points.
#[derive(Debug, Clone)]
pub struct GradientProgram {
    typed: TypedProgram,
    wrapper: String,
}

impl GradientProgram {
    pub fn new(program: &Program, entry: &str) -> Result<GradientProgram, Error> {
        GradientProgram::with_registry(program, entry, Arc::new(Registry::builtin()))
    }

    pub fn with_registry(
        program: &Program,
        entry: &str,
        registry: Arc<Registry>,
    ) -> Result<GradientProgram, Error> {
        let (with_wrapper, wrapper) = with_gradient_entry(program, entry)?;
        let typed = check_program_with(&with_wrapper, registry).map_err(Error::Type)?;
        Ok(GradientProgram { typed, wrapper })
    }

    pub fn typed(&self) -> &TypedProgram {
        &self.typed
    }

    pub fn wrapper(&self) -> &str {
        &self.wrapper
    }

    pub fn at(&self, point: &[Tensor], mode: FloatMode) -> Result<Gradient, RuntimeError> {
        let args = point.iter().cloned().map(Value::Tensor).collect();
        let out = Interpreter::new(&self.typed)
            .with_mode(mode)
            .call(&self.wrapper, args)?;
        split_gradient(&out)
    }
}

/// Splits `(value, (g1, ...))` as returned by an elaborated `Grad`.
pub fn split_gradient(v: &Value<'_>) -> Result<Gradient, RuntimeError> {
    let bad = || RuntimeError::new(format!("expected (value, gradients), found {v}"));
    let parts = v.as_tuple().filter(|p| p.len() == 2).ok_or_else(bad)?;
    let value = parts[0].as_tensor().and_then(Tensor::as_f64).ok_or_else(bad)?;
    let gradients = parts[1]
        .as_tuple()
        .ok_or_else(bad)?
        .iter()
        .map(|g| g.as_tensor().cloned().ok_or_else(bad))
        .collect::<Result<_, _>>()?;
    Ok(Gradient { value, gradients })
}

/// Checks and differentiates `entry` at one point.
pub fn gradient_at(program: &Program, entry: &str, point: &[Tensor], mode: FloatMode) -> Result<Gradient, Error> {
    Ok(GradientProgram::new(program, entry)?.at(point, mode)?)
}

/// `|a - b| / max(|a|, |b|, 1)`: relative for large values, absolute near zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// One scalar slot of a gradient compared against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotCheck {
    pub argument: usize,
    pub index: usize,
    pub ad: f64,
    pub fd: f64,
    pub error: f64,
}

/// Reverse-mode gradient of `entry` against the finite-difference oracle,
/// both computed in double precision.
pub fn compare_with_finite_differences(
    gp: &GradientProgram,
    entry: &str,
    point: &[Tensor],
    h: f64,
) -> Result<Vec<SlotCheck>, RuntimeError> {
    let ad = gp.at(point, FloatMode::Widened)?;
    let fd = crate::eval::finite_diff(gp.typed(), entry, point, h)?;
    let mut out = Vec::new();
    for (argument, (a, f)) in ad.gradients.iter().zip(&fd).enumerate() {
        let (Some(a), Some(f)) = (a.floats(), f.floats()) else {
            return Err(RuntimeError::new("gradients must be float tensors"));
        };
        for (index, (x, y)) in a.iter().zip(f).enumerate() {
            out.push(SlotCheck {
                argument,
                index,
                ad: *x,
                fd: *y,
                error: relative_error(*x, *y),
            });
        }
    }
    Ok(out)
}

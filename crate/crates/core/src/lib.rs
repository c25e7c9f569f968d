//! A small statically typed tensor IR with shape-indexed types and
//! higher-order reverse-mode differentiation by source transformation.
//!
//! The pipeline is `syntax` (text and JSON) → `typecheck` (which also
//! elaborates `Grad`) → `eval`. `autodiff` holds the transformation itself.

pub mod ast;
pub mod autodiff;
pub mod cli;
pub mod driver;
pub mod eval;
pub mod fuzz;
pub mod syntax;
pub mod typecheck;

pub use driver::{compare_with_finite_differences, relative_error, gradient_at, load, Error, Gradient, GradientProgram};

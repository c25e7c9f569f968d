//! Abstract syntax of programs, types and kinds.

mod alpha;
mod expr;
mod pretty;
mod program;
mod types;
mod visit;

pub use alpha::{alpha_equal, AlphaEq};
pub use expr::{BinOp, Definition, Expr, ExprKind, Item, OperatorDecl, Param, Span, UnaryOp};
pub use pretty::{base_type_text, float_text, pretty_expr, pretty_item, pretty_program, pretty_type};
pub use program::Program;
pub use types::{BaseType, Kind, Shape, Type};
pub use visit::{all_local_names, free_type_vars, free_vars, subst_type};
pub(crate) use visit::fresh_type_var;

//! Reference interpreter: closures, a reference store, dense tensor
//! arithmetic, the operator registry and a finite-difference oracle.

mod interp;
mod registry;
mod tensor;
mod value;

pub use interp::{
    default_max_depth, evaluate, finite_diff, parameter_types, Interpreter, Probe, DEFAULT_MAX_DEPTH,
};
pub use registry::{
    register_operator, OperatorImpl, Registry, RegistryError, BROADCAST_LIKE_TYPE, DOT_TYPE,
    ONES_LIKE_TYPE, SUM_TYPE,
};
pub use tensor::{eval_binary, eval_unary, Data, FloatMode, Tensor};
pub use value::{parse_value, Closure, Env, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("runtime error: {message}")]
pub struct RuntimeError {
    pub message: String,
}

impl RuntimeError {
    pub fn new(message: impl Into<String>) -> RuntimeError {
        RuntimeError {
            message: message.into(),
        }
    }
}

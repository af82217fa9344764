//! Backends and the runtime registry.
//!
//! A backend only has to execute resolved [`Op`]s; the full core op surface
//! (argument handling, defaults, unified signatures) is provided on
//! [`BackendRef`] in terms of that primitive, so every backend exposes the
//! same signatures and semantics.

mod api;
pub mod autodiff;
pub mod host;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::capture;
use crate::error::{Error, Result};
use crate::op::Op;
use crate::tensor::Tensor;

pub use api::{Operand, Reduction};

/// An op implementation set.
pub trait Backend: Send + Sync {
    /// Unique identifier, also used as the tag on produced tensors.
    fn id(&self) -> &'static str;

    /// Executes a resolved op. Outputs are tagged with this backend.
    fn run(&self, op: &Op, inputs: &[&Tensor]) -> Result<Vec<Tensor>>;

    fn supports_gradients(&self) -> bool {
        false
    }

    fn variable(&self, x: &Tensor) -> Result<Variable> {
        let _ = x;
        Err(self.unsupported("variable"))
    }

    fn gradients(&self, f: &mut GradFn<'_>, vars: &[Variable]) -> Result<Gradients> {
        let _ = (f, vars);
        Err(self.unsupported("execute_with_gradients"))
    }

    fn unsupported(&self, what: &str) -> Error {
        Error::Unsupported {
            backend: self.id().to_string(),
            what: what.to_string(),
        }
    }
}

pub type GradFn<'a> = dyn FnMut(&[Tensor]) -> Result<LossOutput> + 'a;

/// Handle to a registered backend; the runtime value of a framework
/// template parameter.
#[derive(Clone, Copy)]
pub struct BackendRef(&'static dyn Backend);

impl BackendRef {
    pub const fn new(backend: &'static dyn Backend) -> Self {
        BackendRef(backend)
    }

    pub fn id(self) -> &'static str {
        self.0.id()
    }

    pub fn inner(self) -> &'static dyn Backend {
        self.0
    }
}

impl PartialEq for BackendRef {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id()
    }
}

impl Eq for BackendRef {}

impl fmt::Debug for BackendRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BackendRef({})", self.id())
    }
}

static HOST: host::HostBackend = host::HostBackend;
static AUTODIFF: autodiff::AutodiffBackend = autodiff::AutodiffBackend;

/// The reference eager backend without gradient support.
pub fn host() -> BackendRef {
    BackendRef(&HOST)
}

/// The reverse-mode differentiating backend.
pub fn autodiff() -> BackendRef {
    BackendRef(&AUTODIFF)
}

static REGISTRY: Lazy<RwLock<Vec<BackendRef>>> = Lazy::new(|| RwLock::new(vec![host(), autodiff()]));

/// Adds a backend for tag-based lookup. Ids must be unique.
pub fn register(f: BackendRef) -> Result<()> {
    let mut reg = REGISTRY.write();
    if reg.iter().any(|b| b.id() == f.id()) {
        return Err(Error::State(format!("backend `{}` already registered", f.id())));
    }
    reg.push(f);
    Ok(())
}

pub fn by_id(id: &str) -> Option<BackendRef> {
    REGISTRY.read().iter().copied().find(|b| b.id() == id)
}

pub fn registered() -> Vec<BackendRef> {
    REGISTRY.read().clone()
}

/// Runs a resolved op and records it into any active capture.
pub(crate) fn exec(f: BackendRef, op: &Op, inputs: &[&Tensor]) -> Result<Vec<Tensor>> {
    let out = f.0.run(op, inputs)?;
    Ok(capture::record(f, op, inputs, out))
}

/// Names of the unified core operations every backend exposes.
pub const CORE_OPS: &[&str] = &[
    "zeros",
    "ones",
    "full",
    "array",
    "linspace",
    "random_uniform",
    "cast",
    "reshape",
    "transpose",
    "expand_dims",
    "concatenate",
    "stack",
    "tile",
    "slice",
    "sin",
    "cos",
    "tanh",
    "neg",
    "abs",
    "sqrt",
    "exp",
    "log",
    "floor",
    "ceil",
    "round",
    "add",
    "sub",
    "mul",
    "div",
    "pow",
    "maximum",
    "minimum",
    "less",
    "greater",
    "equal",
    "select",
    "clip",
    "reduce_sum",
    "reduce_mean",
    "reduce_min",
    "reduce_max",
    "gather_nd",
    "scatter_nd",
    "matmul",
    "linear",
    "inv",
    "svd",
    "to_host",
    "variable",
    "execute_with_gradients",
    "gradient_descent_update",
];

impl BackendRef {
    /// Whether `name` is part of the core surface this backend exposes.
    pub fn resolves(self, name: &str) -> bool {
        CORE_OPS.contains(&name)
    }
}

/// A trainable leaf: the only mutable cell, updated by replacement.
#[derive(Clone, Debug)]
pub struct Variable {
    value: Tensor,
    id: u64,
}

static NEXT_VAR: AtomicU64 = AtomicU64::new(1);

impl Variable {
    pub(crate) fn fresh(value: Tensor) -> Self {
        Variable {
            value,
            id: NEXT_VAR.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub(crate) fn with_value(&self, value: Tensor) -> Self {
        Variable { value, id: self.id }
    }

    pub fn value(&self) -> &Tensor {
        &self.value
    }

    pub fn id(&self) -> u64 {
        self.id
    }
}

/// What a differentiated function returns: a scalar loss first, then any
/// auxiliary values that are passed through undifferentiated.
#[derive(Clone, Debug)]
pub struct LossOutput {
    pub loss: Tensor,
    pub aux: Vec<Tensor>,
}

impl From<Tensor> for LossOutput {
    fn from(loss: Tensor) -> Self {
        LossOutput { loss, aux: Vec::new() }
    }
}

impl From<(Tensor, Vec<Tensor>)> for LossOutput {
    fn from((loss, aux): (Tensor, Vec<Tensor>)) -> Self {
        LossOutput { loss, aux }
    }
}

#[derive(Clone, Debug)]
pub struct Gradients {
    pub loss: Tensor,
    /// Aligned one-to-one with the variables passed in.
    pub grads: Vec<Tensor>,
    pub aux: Vec<Tensor>,
}

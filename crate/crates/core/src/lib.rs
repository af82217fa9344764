//! Backend-agnostic tensor computation.
//!
//! Code is written against a [`BackendRef`] (conventionally named `f`) that
//! is bound at runtime. Two backends ship in the box: [`backend::host`], an
//! eager reference implementation, and [`backend::autodiff`], which adds
//! variables and reverse-mode gradients on top of the same kernels.
//!
//! ```
//! use templar::{backend, DType};
//!
//! let f = backend::host();
//! let x = f.linspace(0.0, 1.0, 3)?;
//! let y = f.clip(&f.mul(&x, 4.0)?, 0.0, 1.0)?;
//! assert_eq!(y.to_vec()?, vec![0.0, 1.0, 1.0]);
//! # let _ = DType::Float64;
//! # Ok::<(), templar::Error>(())
//! ```
//!
//! The [`agnostic`] module exposes the same ops as free functions that pick
//! the backend through the [`handler`].

pub mod agnostic;
pub mod array;
pub mod backend;
pub mod bench;
pub mod capture;
pub mod conformance;
pub mod dtype;
pub mod error;
pub mod gradcheck;
pub mod handler;
pub mod kernels;
pub mod op;
pub mod parallel;
pub mod probe;
pub mod shape;
pub mod tensor;

pub use array::{HostArray, HostValue};
pub use backend::{BackendRef, Gradients, LossOutput, Operand, Reduction, Variable};
pub use capture::{compile_fn, CapturedGraph, CompiledFn};
pub use dtype::DType;
pub use error::{Error, Result};
pub use handler::{get_framework, set_framework, unset_framework, DispatchContext};
pub use probe::CodeGroup;
pub use shape::Shape;
pub use tensor::Tensor;

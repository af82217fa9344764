use std::fmt;
use std::sync::Arc;

use crate::array::{HostArray, HostValue};
use crate::backend::autodiff::tape::NodeRef;
use crate::capture::{self, SlotRef};
use crate::dtype::DType;
use crate::error::Result;
use crate::shape::Shape;

/// Immutable n-dimensional value tagged with the backend that produced it.
///
/// Cloning is cheap: the element buffer is shared. dtype and shape are
/// always available without running any backend computation.
#[derive(Clone)]
pub struct Tensor {
    backend: &'static str,
    value: Arc<HostArray>,
    pub(crate) node: Option<NodeRef>,
    pub(crate) slot: Option<SlotRef>,
}

impl Tensor {
    pub(crate) fn new(backend: &'static str, value: HostArray) -> Self {
        Self::from_arc(backend, Arc::new(value))
    }

    pub(crate) fn from_arc(backend: &'static str, value: Arc<HostArray>) -> Self {
        Tensor {
            backend,
            value,
            node: None,
            slot: None,
        }
    }

    pub fn backend_id(&self) -> &'static str {
        self.backend
    }

    pub fn dtype(&self) -> DType {
        self.value.dtype()
    }

    pub fn shape(&self) -> &Shape {
        self.value.shape()
    }

    pub fn rank(&self) -> usize {
        self.value.shape().rank()
    }

    pub fn numel(&self) -> usize {
        self.value.numel()
    }

    pub(crate) fn array(&self) -> &HostArray {
        &self.value
    }

    pub(crate) fn array_arc(&self) -> &Arc<HostArray> {
        &self.value
    }

    /// Nested host materialization mirroring the shape.
    ///
    /// Fails inside graph capture when the value depends on a captured input.
    pub fn to_host(&self) -> Result<HostValue> {
        capture::check_materialize(self)?;
        Ok(self.value.to_host())
    }

    /// Flat row-major host copy. Same capture rule as [`Tensor::to_host`].
    pub fn to_vec(&self) -> Result<Vec<f64>> {
        capture::check_materialize(self)?;
        Ok(self.value.data().to_vec())
    }

    /// The single element of a one-element tensor.
    pub fn item(&self) -> Result<f64> {
        capture::check_materialize(self)?;
        if self.numel() != 1 {
            return crate::error::invalid(format!("item() on tensor of shape {}", self.shape()));
        }
        Ok(self.value.data()[0])
    }

    /// Same value with autodiff and capture tracking dropped.
    pub fn detach(&self) -> Tensor {
        Tensor::from_arc(self.backend, self.value.clone())
    }

    /// Whether both tensors hold bitwise-identical elements with equal
    /// shape and dtype.
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.dtype() == other.dtype()
            && self.shape() == other.shape()
            && self
                .value
                .data()
                .iter()
                .zip(other.value.data())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let data = self.value.data();
        let preview: Vec<f64> = data.iter().take(8).copied().collect();
        write!(
            f,
            "Tensor<{}, {}, {}>{:?}{}",
            self.backend,
            self.dtype(),
            self.shape(),
            preview,
            if data.len() > 8 { "..." } else { "" }
        )
    }
}

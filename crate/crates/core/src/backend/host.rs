use crate::backend::Backend;
use crate::error::Result;
use crate::kernels;
use crate::op::Op;
use crate::tensor::Tensor;

pub const ID: &str = "host";

/// Eager reference backend. Gradient entry points are left at their
/// unsupported defaults.
#[derive(Debug, Default)]
pub struct HostBackend;

impl Backend for HostBackend {
    fn id(&self) -> &'static str {
        ID
    }

    fn run(&self, op: &Op, inputs: &[&Tensor]) -> Result<Vec<Tensor>> {
        let arrays: Vec<_> = inputs.iter().map(|t| t.array()).collect();
        Ok(kernels::execute(op, &arrays)?
            .into_iter()
            .map(|a| Tensor::new(ID, a))
            .collect())
    }
}

//! Reverse-mode differentiating backend.
//!
//! Forward computation shares the host kernels; in addition, every op whose
//! inputs are tracked on the active tape appends a node holding its inputs
//! and outputs. [`Backend::gradients`] opens a tape, registers the variables
//! as leaves, runs the function and walks the tape backwards from the loss.

mod backward;
pub(crate) mod tape;

use crate::backend::{Backend, GradFn, Gradients, Variable};
use crate::capture;
use crate::error::{Error, Result};
use crate::kernels;
use crate::op::Op;
use crate::tensor::Tensor;

pub const ID: &str = "autodiff";

#[derive(Debug, Default)]
pub struct AutodiffBackend;

struct TapeGuard;

impl Drop for TapeGuard {
    fn drop(&mut self) {
        tape::pop();
    }
}

impl Backend for AutodiffBackend {
    fn id(&self) -> &'static str {
        ID
    }

    fn run(&self, op: &Op, inputs: &[&Tensor]) -> Result<Vec<Tensor>> {
        let arrays: Vec<_> = inputs.iter().map(|t| t.array()).collect();
        let mut outs: Vec<Tensor> = kernels::execute(op, &arrays)?
            .into_iter()
            .map(|a| Tensor::new(ID, a))
            .collect();
        tape::record(op, inputs, &mut outs);
        Ok(outs)
    }

    fn supports_gradients(&self) -> bool {
        true
    }

    fn variable(&self, x: &Tensor) -> Result<Variable> {
        if x.backend_id() != ID {
            return Err(Error::WrongBackend {
                expected: ID.to_string(),
                found: x.backend_id().to_string(),
            });
        }
        if !x.dtype().is_float() {
            return Err(Error::InvalidDType(format!(
                "variables must be floating point, got {}",
                x.dtype()
            )));
        }
        Ok(Variable::fresh(x.detach()))
    }

    fn gradients(&self, f: &mut GradFn<'_>, vars: &[Variable]) -> Result<Gradients> {
        if capture::is_active() {
            return Err(Error::Capture(
                "execute_with_gradients cannot run inside graph capture".into(),
            ));
        }
        for v in vars {
            if v.value().backend_id() != ID {
                return Err(Error::WrongBackend {
                    expected: ID.to_string(),
                    found: v.value().backend_id().to_string(),
                });
            }
        }
        tape::push();
        let guard = TapeGuard;
        let leaves: Vec<Tensor> = vars.iter().map(|v| tape::leaf(v.value())).collect();
        let out = f(&leaves)?;
        let loss = out.loss;
        if loss.numel() != 1 {
            return Err(Error::InvalidLoss(format!(
                "loss must have exactly one element, got shape {}",
                loss.shape()
            )));
        }
        if !loss.dtype().is_float() {
            return Err(Error::InvalidLoss(format!(
                "loss must be floating point, got {}",
                loss.dtype()
            )));
        }
        let tape = tape::pop().expect("tape pushed above");
        std::mem::forget(guard);

        let node_grads = match loss.node.filter(|n| n.tape == tape.id) {
            Some(n) => backward::backward(&tape, n.node, n.output)?,
            None => Default::default(),
        };
        let grads = vars
            .iter()
            .zip(&leaves)
            .map(|(v, leaf)| {
                let value = v.value().array();
                let n = leaf.node.expect("leaf carries a node");
                let data = node_grads
                    .get(&(n.node, 0))
                    .cloned()
                    .unwrap_or_else(|| vec![0.0; value.numel()]);
                let arr = crate::array::HostArray::new(data, value.shape().clone(), value.dtype())?;
                Ok(Tensor::new(ID, arr))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Gradients {
            loss: loss.detach(),
            grads,
            aux: out.aux.iter().map(Tensor::detach).collect(),
        })
    }
}

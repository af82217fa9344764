//! Reference kernels over [`HostArray`]. Correctness first: straightforward
//! loops, `f64` accumulation, fresh output buffers.

mod creation;
mod elementwise;
mod index;
mod layout;
mod linalg;
mod reduce;

use crate::array::HostArray;
use crate::error::{invalid, Result};
use crate::op::Op;

pub use elementwise::{binary, binary_scalar, clip, compare, select, unary};
pub use index::{gather_nd, scatter_nd};
pub use layout::{concat, reshape, slice, tile, transpose};
pub use linalg::{inv, matmul, svd};
pub use reduce::{reduce, reduce_arg_positions};

pub(crate) use elementwise::{broadcast_offsets, sum_to_shape};
pub(crate) use layout::unravel;
pub(crate) use reduce::reduce_layout;

/// Executes a resolved op on host arrays.
pub fn execute(op: &Op, inputs: &[&HostArray]) -> Result<Vec<HostArray>> {
    let arity = expected_arity(op);
    if let Some(n) = arity {
        if inputs.len() != n {
            return invalid(format!(
                "{} expects {n} input(s), got {}",
                op.name(),
                inputs.len()
            ));
        }
    }
    let one = |a: HostArray| Ok(vec![a]);
    match op {
        Op::Constant(a) => one((**a).clone()),
        Op::Fill { shape, value, dtype } => one(HostArray::full(shape.clone(), *value, *dtype)),
        Op::Linspace { num } => one(creation::linspace(inputs[0], inputs[1], *num)?),
        Op::RandomUniform {
            low,
            high,
            shape,
            seed,
            dtype,
        } => one(creation::random_uniform(*low, *high, shape, *seed, *dtype)?),
        Op::Cast { to } => one(creation::cast(inputs[0], *to)),
        Op::Reshape { shape } => one(reshape(inputs[0], shape)?),
        Op::Transpose { perm } => one(transpose(inputs[0], perm)?),
        Op::Concat { axis } => one(concat(inputs, *axis)?),
        Op::Tile { reps } => one(tile(inputs[0], reps)?),
        Op::Slice { axis, start, end } => one(slice(inputs[0], *axis, *start, *end)?),
        Op::Unary(kind) => one(unary(inputs[0], *kind)),
        Op::Binary { kind, out_shape } => one(binary(inputs[0], inputs[1], *kind, out_shape)?),
        Op::BinaryScalar {
            kind,
            value,
            scalar_rhs,
        } => one(binary_scalar(inputs[0], *kind, *value, *scalar_rhs)),
        Op::Compare { kind, out_shape } => one(compare(inputs[0], inputs[1], *kind, out_shape)?),
        Op::Where { out_shape } => one(select(inputs[0], inputs[1], inputs[2], out_shape)?),
        Op::Clip { lo, hi } => one(clip(inputs[0], *lo, *hi)),
        Op::Reduce {
            kind,
            axes,
            keepdims,
        } => one(reduce(inputs[0], *kind, axes, *keepdims)?),
        Op::GatherNd => one(gather_nd(inputs[0], inputs[1])?),
        Op::ScatterNd { out_shape } => one(scatter_nd(inputs[0], inputs[1], out_shape)?),
        Op::MatMul => one(matmul(inputs[0], inputs[1])?),
        Op::Inv => one(inv(inputs[0])?),
        Op::Svd => {
            let (u, d, v) = svd(inputs[0])?;
            Ok(vec![u, d, v])
        }
    }
}

fn expected_arity(op: &Op) -> Option<usize> {
    Some(match op {
        Op::Constant(_) | Op::Fill { .. } | Op::RandomUniform { .. } => 0,
        Op::Concat { .. } => return None,
        Op::Linspace { .. }
        | Op::Binary { .. }
        | Op::Compare { .. }
        | Op::GatherNd
        | Op::ScatterNd { .. }
        | Op::MatMul => 2,
        Op::Where { .. } => 3,
        _ => 1,
    })
}

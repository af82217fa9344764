//! Reverse-mode rules. Every rule works on `f64` buffers regardless of the
//! forward dtype.

use std::collections::HashMap;

use crate::array::HostArray;
use crate::dtype::DType;
use crate::error::{Error, Result};
use crate::kernels::{self, broadcast_offsets, sum_to_shape};
use crate::op::{BinaryKind, Op, ReduceKind, UnaryKind};
use crate::shape::Shape;

use super::tape::Tape;

fn f64_array(data: Vec<f64>, shape: Shape) -> HostArray {
    HostArray::from_normalized(data, shape, DType::Float64)
}

fn widen(a: &HostArray) -> HostArray {
    f64_array(a.data().to_vec(), a.shape().clone())
}

/// Gradients of every tape node output reachable backwards from
/// `(loss_node, loss_output)`, keyed by `(node, output)`.
pub(crate) fn backward(
    tape: &Tape,
    loss_node: usize,
    loss_output: usize,
) -> Result<HashMap<(usize, usize), Vec<f64>>> {
    let mut grads: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    grads.insert((loss_node, loss_output), vec![1.0]);
    for idx in (0..=loss_node).rev() {
        let node = &tape.nodes[idx];
        let Some(op) = &node.op else { continue };
        let outs: Vec<Option<&Vec<f64>>> = (0..node.outputs.len())
            .map(|o| grads.get(&(idx, o)))
            .collect();
        if outs.iter().all(Option::is_none) || node.parents.iter().all(Option::is_none) {
            continue;
        }
        if !op.has_grad_rule() {
            return Err(Error::NoGradRule(op.name().to_string()));
        }
        let g = outs[0].cloned().unwrap_or_else(|| vec![0.0; node.outputs[0].numel()]);
        let g = f64_array(g, node.outputs[0].shape().clone());
        let wants: Vec<bool> = node.parents.iter().map(Option::is_some).collect();
        let input_grads = rule(op, &node.inputs, &node.outputs[0], &g, &wants)?;
        for (parent, ig) in node.parents.iter().zip(input_grads) {
            if let (Some(p), Some(ig)) = (parent, ig) {
                match grads.get_mut(p) {
                    Some(acc) => acc.iter_mut().zip(&ig).for_each(|(a, b)| *a += b),
                    None => {
                        grads.insert(*p, ig);
                    }
                }
            }
        }
    }
    Ok(grads)
}

type InputGrads = Vec<Option<Vec<f64>>>;

fn rule(
    op: &Op,
    inputs: &[std::sync::Arc<HostArray>],
    y: &HostArray,
    g: &HostArray,
    wants: &[bool],
) -> Result<InputGrads> {
    let gd = g.data();
    let out = match op {
        Op::Constant(_) | Op::Fill { .. } | Op::RandomUniform { .. } => vec![],
        Op::Linspace { num } => {
            let width = inputs[0].numel();
            let last = (*num - 1) as f64;
            let mut ds = vec![0.0; width];
            let mut de = vec![0.0; width];
            for i in 0..*num {
                let t = i as f64 / last;
                for j in 0..width {
                    ds[j] += (1.0 - t) * gd[i * width + j];
                    de[j] += t * gd[i * width + j];
                }
            }
            vec![Some(ds), Some(de)]
        }
        Op::Cast { .. } => {
            if inputs[0].dtype().is_float() {
                vec![Some(gd.to_vec())]
            } else {
                vec![None]
            }
        }
        Op::Reshape { .. } => vec![Some(gd.to_vec())],
        Op::Transpose { perm } => {
            let mut inv = vec![0; perm.len()];
            for (i, &p) in perm.iter().enumerate() {
                inv[p] = i;
            }
            vec![Some(kernels::transpose(g, &inv)?.into_data())]
        }
        Op::Concat { axis } => {
            let mut start = 0;
            inputs
                .iter()
                .map(|x| {
                    let end = start + x.shape()[*axis];
                    let part = kernels::slice(g, *axis, start, end).map(HostArray::into_data);
                    start = end;
                    part.map(Some)
                })
                .collect::<Result<Vec<_>>>()?
        }
        Op::Tile { .. } => {
            let x = &inputs[0];
            let xd = x.shape().dims();
            let od = g.shape().dims().to_vec();
            let xs = x.shape().strides();
            let mut acc = vec![0.0; x.numel()];
            let mut idx = vec![0; od.len()];
            for (i, v) in gd.iter().enumerate() {
                kernels::unravel(i, &od, &mut idx);
                let off: usize = idx.iter().zip(xd).zip(&xs).map(|((&k, &d), &s)| (k % d) * s).sum();
                acc[off] += v;
            }
            vec![Some(acc)]
        }
        Op::Slice { axis, start, .. } => {
            let x = &inputs[0];
            let dims = x.shape().dims();
            let outer: usize = dims[..*axis].iter().product();
            let inner: usize = dims[axis + 1..].iter().product();
            let n_in = dims[*axis];
            let n_out = g.shape()[*axis];
            let mut acc = vec![0.0; x.numel()];
            for o in 0..outer {
                for k in 0..n_out {
                    let src = (o * n_out + k) * inner;
                    let dst = (o * n_in + start + k) * inner;
                    acc[dst..dst + inner].copy_from_slice(&gd[src..src + inner]);
                }
            }
            vec![Some(acc)]
        }
        Op::Unary(kind) => vec![Some(unary_grad(*kind, inputs[0].data(), y.data(), gd))],
        Op::Binary { kind, out_shape } => {
            let (a, b) = (&inputs[0], &inputs[1]);
            let oa = broadcast_offsets(a.shape(), out_shape);
            let ob = broadcast_offsets(b.shape(), out_shape);
            let (ad, bd) = (a.data(), b.data());
            let mut ga = Vec::with_capacity(gd.len());
            let mut gb = Vec::with_capacity(gd.len());
            for i in 0..gd.len() {
                let (pa, pb) = binary_partials(*kind, ad[oa[i]], bd[ob[i]], y.data()[i]);
                ga.push(pa * gd[i]);
                gb.push(pb * gd[i]);
            }
            vec![
                wants[0].then(|| sum_to_shape(&ga, out_shape, a.shape())),
                wants[1].then(|| sum_to_shape(&gb, out_shape, b.shape())),
            ]
        }
        Op::BinaryScalar {
            kind,
            value,
            scalar_rhs,
        } => {
            let xd = inputs[0].data();
            let c = *value;
            let grad = (0..gd.len())
                .map(|i| {
                    let p = if *scalar_rhs {
                        binary_partials(*kind, xd[i], c, y.data()[i]).0
                    } else {
                        binary_partials(*kind, c, xd[i], y.data()[i]).1
                    };
                    p * gd[i]
                })
                .collect();
            vec![Some(grad)]
        }
        Op::Compare { .. } => vec![None, None],
        Op::Where { out_shape } => {
            let oc = broadcast_offsets(inputs[0].shape(), out_shape);
            let cd = inputs[0].data();
            let (mut gx, mut gy) = (vec![0.0; gd.len()], vec![0.0; gd.len()]);
            for i in 0..gd.len() {
                if cd[oc[i]] != 0.0 {
                    gx[i] = gd[i];
                } else {
                    gy[i] = gd[i];
                }
            }
            vec![
                None,
                wants[1].then(|| sum_to_shape(&gx, out_shape, inputs[1].shape())),
                wants[2].then(|| sum_to_shape(&gy, out_shape, inputs[2].shape())),
            ]
        }
        Op::Clip { lo, hi } => {
            let xd = inputs[0].data();
            let grad = (0..gd.len())
                .map(|i| if xd[i] >= *lo && xd[i] <= *hi { gd[i] } else { 0.0 })
                .collect();
            vec![Some(grad)]
        }
        Op::Reduce { kind, axes, .. } => {
            let x = &inputs[0];
            let (_, positions) = kernels::reduce_layout(x.shape(), axes, false);
            let grad = match kind {
                ReduceKind::Sum => positions.iter().map(|&p| gd[p]).collect(),
                ReduceKind::Mean => {
                    let group = if gd.is_empty() { 1 } else { x.numel() / gd.len() };
                    positions.iter().map(|&p| gd[p] / group as f64).collect()
                }
                ReduceKind::Min | ReduceKind::Max => {
                    let winners = kernels::reduce_arg_positions(x, *kind, axes)?;
                    let mut acc = vec![0.0; x.numel()];
                    for (p, w) in winners.into_iter().enumerate() {
                        acc[w] += gd[p];
                    }
                    acc
                }
            };
            vec![Some(grad)]
        }
        Op::GatherNd => {
            let params = &inputs[0];
            let grad = kernels::scatter_nd(&inputs[1], g, params.shape())?;
            vec![Some(grad.into_data()), None]
        }
        Op::ScatterNd { .. } => {
            let grad = kernels::gather_nd(g, &inputs[0])?;
            vec![None, Some(grad.into_data())]
        }
        Op::MatMul => {
            let (a, b) = (widen(&inputs[0]), widen(&inputs[1]));
            let ga = wants[0]
                .then(|| -> Result<Vec<f64>> {
                    let full = kernels::matmul(g, &swap_last(&b)?)?;
                    Ok(sum_to_shape(full.data(), full.shape(), a.shape()))
                })
                .transpose()?;
            let gb = wants[1]
                .then(|| -> Result<Vec<f64>> {
                    let full = kernels::matmul(&swap_last(&a)?, g)?;
                    Ok(sum_to_shape(full.data(), full.shape(), b.shape()))
                })
                .transpose()?;
            vec![ga, gb]
        }
        Op::Inv | Op::Svd => return Err(Error::NoGradRule(op.name().to_string())),
    };
    Ok(out)
}

fn swap_last(x: &HostArray) -> Result<HostArray> {
    let r = x.shape().rank();
    let mut perm: Vec<usize> = (0..r).collect();
    perm.swap(r - 2, r - 1);
    kernels::transpose(x, &perm)
}

fn unary_grad(kind: UnaryKind, x: &[f64], y: &[f64], g: &[f64]) -> Vec<f64> {
    let d = |i: usize| -> f64 {
        match kind {
            UnaryKind::Sin => x[i].cos(),
            UnaryKind::Cos => -x[i].sin(),
            UnaryKind::Tanh => 1.0 - y[i] * y[i],
            UnaryKind::Neg => -1.0,
            UnaryKind::Abs => {
                if x[i] > 0.0 {
                    1.0
                } else if x[i] < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            UnaryKind::Sqrt => {
                if y[i] == 0.0 {
                    0.0
                } else {
                    0.5 / y[i]
                }
            }
            UnaryKind::Exp => y[i],
            UnaryKind::Log => 1.0 / x[i],
            UnaryKind::Floor | UnaryKind::Ceil | UnaryKind::Round => 0.0,
        }
    };
    (0..g.len()).map(|i| if g[i] == 0.0 { 0.0 } else { d(i) * g[i] }).collect()
}

/// Partial derivatives of `a op b` with respect to `a` and `b`.
fn binary_partials(kind: BinaryKind, a: f64, b: f64, y: f64) -> (f64, f64) {
    match kind {
        BinaryKind::Add => (1.0, 1.0),
        BinaryKind::Sub => (1.0, -1.0),
        BinaryKind::Mul => (b, a),
        BinaryKind::Div => (1.0 / b, -a / (b * b)),
        BinaryKind::Pow => {
            let da = if (a == 0.0 && b < 1.0) || b == 0.0 {
                0.0
            } else {
                b * a.powf(b - 1.0)
            };
            let db = if a > 0.0 { a.ln() * y } else { 0.0 };
            (da, db)
        }
        BinaryKind::Maximum => {
            if a >= b {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        }
        BinaryKind::Minimum => {
            if a <= b {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        }
    }
}

use crate::array::HostArray;
use crate::dtype::DType;
use crate::error::{invalid, Result};
use crate::op::{BinaryKind, CompareKind, UnaryKind};
use crate::parallel;
use crate::shape::{broadcast_shapes, broadcast_strides, Shape};

pub fn unary(x: &HostArray, kind: UnaryKind) -> HostArray {
    let dtype = x.dtype();
    let data = parallel::map_slice(x.data(), |v| dtype.normalize(kind.apply(v)));
    HostArray::from_normalized(data, x.shape().clone(), dtype)
}

pub fn binary_scalar(x: &HostArray, kind: BinaryKind, value: f64, scalar_rhs: bool) -> HostArray {
    let dtype = x.dtype();
    let integral = !dtype.is_float();
    let c = dtype.normalize(value);
    let data = if scalar_rhs {
        parallel::map_slice(x.data(), |v| dtype.normalize(kind.apply(v, c, integral)))
    } else {
        parallel::map_slice(x.data(), |v| dtype.normalize(kind.apply(c, v, integral)))
    };
    HostArray::from_normalized(data, x.shape().clone(), dtype)
}

pub fn clip(x: &HostArray, lo: f64, hi: f64) -> HostArray {
    let dtype = x.dtype();
    let data = parallel::map_slice(x.data(), |v| dtype.normalize(v.max(lo).min(hi)));
    HostArray::from_normalized(data, x.shape().clone(), dtype)
}

/// Maps an output linear index to the linear index of a broadcast input.
struct BroadcastIndexer {
    out_dims: Vec<usize>,
    strides: Vec<usize>,
    identity: bool,
    scalar: bool,
}

impl BroadcastIndexer {
    fn new(input: &Shape, out: &Shape) -> Self {
        BroadcastIndexer {
            out_dims: out.dims().to_vec(),
            strides: broadcast_strides(input, out),
            identity: input == out,
            scalar: input.numel() == 1,
        }
    }

    #[inline]
    fn offset(&self, mut i: usize) -> usize {
        if self.identity {
            return i;
        }
        if self.scalar {
            return 0;
        }
        let mut off = 0;
        for (d, s) in self.out_dims.iter().zip(&self.strides).rev() {
            off += (i % d) * s;
            i /= d;
        }
        off
    }
}

fn check_out_shape(a: &Shape, b: &Shape, out: &Shape) -> Result<()> {
    let expected = broadcast_shapes(a, b)?;
    if &expected != out {
        return invalid(format!("broadcast of {a} and {b} is {expected}, not {out}"));
    }
    Ok(())
}

pub fn binary(a: &HostArray, b: &HostArray, kind: BinaryKind, out: &Shape) -> Result<HostArray> {
    check_out_shape(a.shape(), b.shape(), out)?;
    if a.dtype() != b.dtype() {
        return invalid(format!(
            "{} of mixed dtypes {} and {}",
            kind.name(),
            a.dtype(),
            b.dtype()
        ));
    }
    let dtype = a.dtype();
    let integral = !dtype.is_float();
    let ia = BroadcastIndexer::new(a.shape(), out);
    let ib = BroadcastIndexer::new(b.shape(), out);
    let (da, db) = (a.data(), b.data());
    let data = parallel::map_indexed(out.numel(), |i| {
        dtype.normalize(kind.apply(da[ia.offset(i)], db[ib.offset(i)], integral))
    });
    Ok(HostArray::from_normalized(data, out.clone(), dtype))
}

pub fn compare(a: &HostArray, b: &HostArray, kind: CompareKind, out: &Shape) -> Result<HostArray> {
    check_out_shape(a.shape(), b.shape(), out)?;
    let ia = BroadcastIndexer::new(a.shape(), out);
    let ib = BroadcastIndexer::new(b.shape(), out);
    let (da, db) = (a.data(), b.data());
    let data = parallel::map_indexed(out.numel(), |i| {
        if kind.apply(da[ia.offset(i)], db[ib.offset(i)]) {
            1.0
        } else {
            0.0
        }
    });
    Ok(HostArray::from_normalized(data, out.clone(), DType::Bool))
}

pub fn select(cond: &HostArray, x: &HostArray, y: &HostArray, out: &Shape) -> Result<HostArray> {
    let expected = broadcast_shapes(&broadcast_shapes(cond.shape(), x.shape())?, y.shape())?;
    if &expected != out {
        return invalid(format!("where broadcast is {expected}, not {out}"));
    }
    if x.dtype() != y.dtype() {
        return invalid("where branches differ in dtype");
    }
    let ic = BroadcastIndexer::new(cond.shape(), out);
    let ix = BroadcastIndexer::new(x.shape(), out);
    let iy = BroadcastIndexer::new(y.shape(), out);
    let (dc, dx, dy) = (cond.data(), x.data(), y.data());
    let data = parallel::map_indexed(out.numel(), |i| {
        if dc[ic.offset(i)] != 0.0 {
            dx[ix.offset(i)]
        } else {
            dy[iy.offset(i)]
        }
    });
    Ok(HostArray::from_normalized(data, out.clone(), x.dtype()))
}

/// Sums `grad` (shaped `from`) down to the broadcast source shape `to`.
pub(crate) fn sum_to_shape(grad: &[f64], from: &Shape, to: &Shape) -> Vec<f64> {
    if from == to {
        return grad.to_vec();
    }
    let idx = BroadcastIndexer::new(to, from);
    let mut out = vec![0.0; to.numel()];
    for (i, g) in grad.iter().enumerate() {
        out[idx.offset(i)] += g;
    }
    out
}

/// Linear input offsets of every output element under broadcasting.
pub(crate) fn broadcast_offsets(input: &Shape, out: &Shape) -> Vec<usize> {
    let idx = BroadcastIndexer::new(input, out);
    (0..out.numel()).map(|i| idx.offset(i)).collect()
}

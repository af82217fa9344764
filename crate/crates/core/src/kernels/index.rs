use crate::array::HostArray;
use crate::error::{invalid, Error, Result};
use crate::shape::Shape;

/// Index tuples of `indices` as linear offsets into the leading `k` axes of
/// `target`, each scaled by the trailing block size. Bounds-checked.
fn tuple_offsets(indices: &HostArray, target: &Shape) -> Result<(Vec<usize>, usize)> {
    if indices.dtype().is_float() || indices.dtype() == crate::dtype::DType::Bool {
        return Err(Error::InvalidDType(format!(
            "indices must be integer, got {}",
            indices.dtype()
        )));
    }
    let ishape = indices.shape();
    let Some(&k) = ishape.dims().last() else {
        return invalid("indices must have rank >= 1");
    };
    if k > target.rank() {
        return invalid(format!(
            "index depth {k} exceeds rank {} of {target}",
            target.rank()
        ));
    }
    let block: usize = target[k..].iter().product();
    let strides = target.strides();
    let n = indices.numel().checked_div(k).unwrap_or(0);
    let mut offsets = Vec::with_capacity(n);
    for t in 0..n {
        let mut off = 0;
        for j in 0..k {
            let v = indices.data()[t * k + j];
            if v < 0.0 || v as usize >= target[j] {
                return Err(Error::Index(format!(
                    "index {v} out of bounds for axis {j} of extent {}",
                    target[j]
                )));
            }
            off += v as usize * strides[j];
        }
        offsets.push(off);
    }
    Ok((offsets, block))
}

pub fn gather_nd(params: &HostArray, indices: &HostArray) -> Result<HostArray> {
    let (offsets, block) = tuple_offsets(indices, params.shape())?;
    let k = *indices.shape().dims().last().unwrap();
    let mut data = Vec::with_capacity(offsets.len() * block);
    for off in offsets {
        data.extend_from_slice(&params.data()[off..off + block]);
    }
    let mut dims = indices.shape()[..indices.shape().rank() - 1].to_vec();
    dims.extend_from_slice(&params.shape()[k..]);
    Ok(HostArray::from_normalized(data, Shape::new(dims), params.dtype()))
}

pub fn scatter_nd(indices: &HostArray, updates: &HostArray, out_shape: &Shape) -> Result<HostArray> {
    let (offsets, block) = tuple_offsets(indices, out_shape)?;
    let k = *indices.shape().dims().last().unwrap();
    let mut expected = indices.shape()[..indices.shape().rank() - 1].to_vec();
    expected.extend_from_slice(&out_shape[k..]);
    if updates.shape().dims() != expected.as_slice() {
        return invalid(format!(
            "scatter_nd updates shape {} does not match expected {}",
            updates.shape(),
            Shape::new(expected)
        ));
    }
    let dtype = updates.dtype();
    let mut out = vec![0.0; out_shape.numel()];
    for (t, off) in offsets.into_iter().enumerate() {
        for j in 0..block {
            out[off + j] += updates.data()[t * block + j];
        }
    }
    let data = out.into_iter().map(|v| dtype.normalize(v)).collect();
    Ok(HostArray::from_normalized(data, out_shape.clone(), dtype))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtype::DType;

    fn f(data: &[f64], shape: &[usize]) -> HostArray {
        HostArray::new(data.to_vec(), shape, DType::Float64).unwrap()
    }

    fn i(data: &[f64], shape: &[usize]) -> HostArray {
        HostArray::new(data.to_vec(), shape, DType::Int64).unwrap()
    }

    #[test]
    fn gather_single_tuple() {
        let p = f(&[1.0, 2.0, 3.0, 4.0], &[2, 2]);
        let g = gather_nd(&p, &i(&[1.0, 0.0], &[1, 2])).unwrap();
        assert_eq!(g.shape().dims(), &[1]);
        assert_eq!(g.data(), &[3.0]);
    }

    #[test]
    fn gather_rows() {
        let p = f(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[3, 2]);
        let g = gather_nd(&p, &i(&[2.0, 0.0], &[2, 1])).unwrap();
        assert_eq!(g.shape().dims(), &[2, 2]);
        assert_eq!(g.data(), &[5.0, 6.0, 1.0, 2.0]);
    }

    #[test]
    fn out_of_bounds_is_index_error() {
        let p = f(&[1.0, 2.0], &[2]);
        assert!(matches!(gather_nd(&p, &i(&[2.0], &[1, 1])), Err(Error::Index(_))));
        assert!(matches!(gather_nd(&p, &i(&[-1.0], &[1, 1])), Err(Error::Index(_))));
    }

    #[test]
    fn scatter_accumulates_duplicates() {
        let s = scatter_nd(&i(&[0.0, 0.0], &[2, 1]), &f(&[1.0, 2.0], &[2]), &Shape::from([2])).unwrap();
        assert_eq!(s.data(), &[3.0, 0.0]);
    }

    #[test]
    fn float_indices_rejected() {
        let p = f(&[1.0, 2.0], &[2]);
        assert!(matches!(gather_nd(&p, &f(&[0.0], &[1, 1])), Err(Error::InvalidDType(_))));
    }
}

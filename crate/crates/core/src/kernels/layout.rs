use crate::array::HostArray;
use crate::error::{invalid, Result};
use crate::parallel;
use crate::shape::Shape;

/// Multi-index of linear position `i` in `dims`, written into `idx`.
#[inline]
pub(crate) fn unravel(mut i: usize, dims: &[usize], idx: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] = i % dims[k];
        i /= dims[k];
    }
}

pub fn reshape(x: &HostArray, shape: &Shape) -> Result<HostArray> {
    if shape.numel() != x.numel() {
        return invalid(format!("cannot reshape {} into {shape}", x.shape()));
    }
    Ok(x.with_shape(shape.clone()))
}

pub fn transpose(x: &HostArray, perm: &[usize]) -> Result<HostArray> {
    let rank = x.shape().rank();
    let mut seen = vec![false; rank];
    if perm.len() != rank || perm.iter().any(|&p| p >= rank || std::mem::replace(&mut seen[p], true)) {
        return invalid(format!("{perm:?} is not a permutation of 0..{rank}"));
    }
    let in_strides = x.shape().strides();
    let out_dims: Vec<usize> = perm.iter().map(|&p| x.shape()[p]).collect();
    let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let src = x.data();
    let data = parallel::map_indexed(x.numel(), |mut i| {
        let mut off = 0;
        for k in (0..rank).rev() {
            off += (i % out_dims[k]) * src_strides[k];
            i /= out_dims[k];
        }
        src[off]
    });
    Ok(HostArray::from_normalized(data, Shape::new(out_dims), x.dtype()))
}

pub fn concat(xs: &[&HostArray], axis: usize) -> Result<HostArray> {
    let Some(first) = xs.first() else {
        return invalid("concatenate needs at least one tensor");
    };
    let rank = first.shape().rank();
    if axis >= rank {
        return invalid(format!("concatenate axis {axis} out of range for rank {rank}"));
    }
    let mut total = 0;
    for x in xs {
        if x.dtype() != first.dtype() {
            return invalid("concatenate of mixed dtypes");
        }
        let s = x.shape();
        if s.rank() != rank || (0..rank).any(|k| k != axis && s[k] != first.shape()[k]) {
            return invalid(format!(
                "ragged concatenate: {} vs {} off axis {axis}",
                first.shape(),
                s
            ));
        }
        total += s[axis];
    }
    let outer: usize = first.shape()[..axis].iter().product();
    let inner: usize = first.shape()[axis + 1..].iter().product();
    let mut data = Vec::with_capacity(outer * total * inner);
    for o in 0..outer {
        for x in xs {
            let block = x.shape()[axis] * inner;
            data.extend_from_slice(&x.data()[o * block..(o + 1) * block]);
        }
    }
    let mut dims = first.shape().dims().to_vec();
    dims[axis] = total;
    Ok(HostArray::from_normalized(data, Shape::new(dims), first.dtype()))
}

pub fn tile(x: &HostArray, reps: &[usize]) -> Result<HostArray> {
    let rank = x.shape().rank();
    if reps.len() != rank {
        return invalid(format!("tile reps {reps:?} do not match rank {rank}"));
    }
    let in_dims = x.shape().dims();
    let out_dims: Vec<usize> = in_dims.iter().zip(reps).map(|(d, r)| d * r).collect();
    let strides = x.shape().strides();
    let src = x.data();
    let n: usize = out_dims.iter().product();
    let data = parallel::map_indexed(n, |mut i| {
        let mut off = 0;
        for k in (0..rank).rev() {
            off += ((i % out_dims[k]) % in_dims[k]) * strides[k];
            i /= out_dims[k];
        }
        src[off]
    });
    Ok(HostArray::from_normalized(data, Shape::new(out_dims), x.dtype()))
}

pub fn slice(x: &HostArray, axis: usize, start: usize, end: usize) -> Result<HostArray> {
    let shape = x.shape();
    if axis >= shape.rank() || start > end || end > shape[axis] {
        return invalid(format!("slice {start}..{end} on axis {axis} of {shape}"));
    }
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let len = end - start;
    let mut data = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = o * shape[axis] * inner;
        data.extend_from_slice(&x.data()[base + start * inner..base + end * inner]);
    }
    let mut dims = shape.dims().to_vec();
    dims[axis] = len;
    Ok(HostArray::from_normalized(data, Shape::new(dims), x.dtype()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtype::DType;

    fn arr(data: &[f64], shape: &[usize]) -> HostArray {
        HostArray::new(data.to_vec(), shape, DType::Float64).unwrap()
    }

    #[test]
    fn transpose_matches_loop_oracle() {
        let x = arr(&(0..24).map(|v| v as f64).collect::<Vec<_>>(), &[2, 3, 4]);
        let t = transpose(&x, &[2, 0, 1]).unwrap();
        assert_eq!(t.shape().dims(), &[4, 2, 3]);
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..4 {
                    assert_eq!(t.data()[c * 6 + a * 3 + b], x.data()[a * 12 + b * 4 + c]);
                }
            }
        }
        assert!(transpose(&x, &[0, 0, 1]).is_err());
    }

    #[test]
    fn tile_repeats() {
        let x = arr(&[1.0, 2.0], &[2]);
        assert_eq!(tile(&x, &[3]).unwrap().data(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let m = arr(&[1.0, 2.0], &[1, 2]);
        let t = tile(&m, &[2, 2]).unwrap();
        assert_eq!(t.shape().dims(), &[2, 4]);
        assert_eq!(t.data(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
    }

    #[test]
    fn concat_and_slice_invert() {
        let a = arr(&[1.0, 2.0, 3.0, 4.0], &[2, 2]);
        let b = arr(&[5.0, 6.0], &[2, 1]);
        let c = concat(&[&a, &b], 1).unwrap();
        assert_eq!(c.data(), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        assert_eq!(slice(&c, 1, 2, 3).unwrap(), b);
        assert_eq!(slice(&c, 1, 0, 2).unwrap(), a);
        assert!(concat(&[&a, &arr(&[1.0; 3], &[3, 1])], 1).is_err());
    }
}

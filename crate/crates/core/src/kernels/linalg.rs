use nalgebra::DMatrix;

use crate::array::HostArray;
use crate::error::{invalid, Error, Result};
use crate::parallel;
use crate::shape::{broadcast_shapes, Shape};

fn split_matrix(s: &Shape) -> Result<(Shape, usize, usize)> {
    if s.rank() < 2 {
        return invalid(format!("expected rank >= 2, got {s}"));
    }
    let r = s.rank();
    Ok((Shape::new(s[..r - 2].to_vec()), s[r - 2], s[r - 1]))
}

/// Batched `a @ b` over the trailing two axes with broadcast batch axes.
pub fn matmul(a: &HostArray, b: &HostArray) -> Result<HostArray> {
    if a.dtype() != b.dtype() {
        return invalid("matmul of mixed dtypes");
    }
    let (ba, m, k) = split_matrix(a.shape())?;
    let (bb, k2, n) = split_matrix(b.shape())?;
    if k != k2 {
        return invalid(format!(
            "matmul inner dimensions differ: {} @ {}",
            a.shape(),
            b.shape()
        ));
    }
    let batch = broadcast_shapes(&ba, &bb)?;
    let a_off = super::elementwise::broadcast_offsets(&ba, &batch);
    let b_off = super::elementwise::broadcast_offsets(&bb, &batch);
    let (da, db) = (a.data(), b.data());
    let dtype = a.dtype();
    let mut out = vec![0.0; batch.numel() * m * n];
    parallel::for_each_row(&mut out, n, |row, dst| {
        let bi = row / m;
        let i = row % m;
        let a_base = a_off[bi] * m * k + i * k;
        let b_base = b_off[bi] * k * n;
        for (j, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in 0..k {
                acc += da[a_base + p] * db[b_base + p * n + j];
            }
            *d = dtype.normalize(acc);
        }
    });
    let mut dims = batch.dims().to_vec();
    dims.extend([m, n]);
    Ok(HostArray::from_normalized(out, Shape::new(dims), dtype))
}

fn batch_matrices(x: &HostArray) -> Result<(Shape, usize, usize, Vec<DMatrix<f64>>)> {
    let (batch, m, n) = split_matrix(x.shape())?;
    let mats = x
        .data()
        .chunks(m * n)
        .map(|c| DMatrix::from_row_slice(m, n, c))
        .collect();
    Ok((batch, m, n, mats))
}

fn push_row_major(out: &mut Vec<f64>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
}

pub fn inv(x: &HostArray) -> Result<HostArray> {
    if !x.dtype().is_float() {
        return invalid(format!("inv requires a float dtype, got {}", x.dtype()));
    }
    let (_, m, n, mats) = batch_matrices(x)?;
    if m != n {
        return invalid(format!("inv of non-square {}", x.shape()));
    }
    let mut data = Vec::with_capacity(x.numel());
    for mat in mats {
        let inv = mat
            .try_inverse()
            .filter(|i| i.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::Numeric("matrix is singular".into()))?;
        push_row_major(&mut data, &inv);
    }
    let dtype = x.dtype();
    let data = data.into_iter().map(|v| dtype.normalize(v)).collect();
    Ok(HostArray::from_normalized(data, x.shape().clone(), dtype))
}

/// Thin SVD with singular values in descending order. Returns `(U, D, V)`
/// where `x = U diag(D) V^T`.
pub fn svd(x: &HostArray) -> Result<(HostArray, HostArray, HostArray)> {
    if !x.dtype().is_float() {
        return invalid(format!("svd requires a float dtype, got {}", x.dtype()));
    }
    let (batch, m, n, mats) = batch_matrices(x)?;
    let k = m.min(n);
    let (mut u_data, mut d_data, mut v_data) = (Vec::new(), Vec::new(), Vec::new());
    for mat in mats {
        let svd = mat.svd(true, true);
        let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
            return Err(Error::Numeric("svd failed to converge".into()));
        };
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        for r in 0..m {
            for &c in &order {
                u_data.push(u[(r, c)]);
            }
        }
        d_data.extend(order.iter().map(|&c| svd.singular_values[c]));
        for r in 0..n {
            for &c in &order {
                v_data.push(vt[(c, r)]);
            }
        }
    }
    let dtype = x.dtype();
    let mk = |data: Vec<f64>, tail: &[usize]| {
        let mut dims = batch.dims().to_vec();
        dims.extend_from_slice(tail);
        HostArray::new(data, Shape::new(dims), dtype)
    };
    Ok((mk(u_data, &[m, k])?, mk(d_data, &[k])?, mk(v_data, &[n, k])?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtype::DType;

    fn arr(data: &[f64], shape: &[usize]) -> HostArray {
        HostArray::new(data.to_vec(), shape, DType::Float64).unwrap()
    }

    #[test]
    fn matmul_broadcasts_batch() {
        let a = arr(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], &[2, 2, 2]);
        let b = arr(&[1.0, 0.0, 0.0, 1.0], &[2, 2]);
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c, a);
        assert!(matmul(&a, &arr(&[1.0; 3], &[3, 1])).is_err());
    }

    #[test]
    fn inverse_of_identity_and_singular() {
        let eye = arr(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], &[3, 3]);
        assert_eq!(inv(&eye).unwrap(), eye);
        let sing = arr(&[1.0, 2.0, 2.0, 4.0], &[2, 2]);
        assert!(matches!(inv(&sing), Err(Error::Numeric(_))));
    }

    #[test]
    fn svd_reconstructs_diag() {
        let x = arr(&[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0], &[3, 3]);
        let (u, d, v) = svd(&x).unwrap();
        assert_eq!(d.data(), &[3.0, 2.0, 1.0]);
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3)
                    .map(|c| u.data()[i * 3 + c] * d.data()[c] * v.data()[j * 3 + c])
                    .sum();
                assert!((r - x.data()[i * 3 + j]).abs() < 1e-12);
            }
        }
    }
}

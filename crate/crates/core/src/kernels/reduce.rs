use crate::array::HostArray;
use crate::error::{invalid, Result};
use crate::op::ReduceKind;
use crate::shape::Shape;

/// Output shape and, for each input element, its output position.
pub(crate) fn reduce_layout(input: &Shape, axes: &[usize], keepdims: bool) -> (Shape, Vec<usize>) {
    let rank = input.rank();
    let reduced: Vec<bool> = (0..rank).map(|k| axes.contains(&k)).collect();
    let kept: Vec<usize> = (0..rank).filter(|&k| !reduced[k]).map(|k| input[k]).collect();
    let kept_shape = Shape::new(kept.clone());
    let kept_strides = kept_shape.strides();
    let mut positions = Vec::with_capacity(input.numel());
    let mut idx = vec![0usize; rank];
    for _ in 0..input.numel() {
        let mut pos = 0;
        let mut j = 0;
        for k in 0..rank {
            if !reduced[k] {
                pos += idx[k] * kept_strides[j];
                j += 1;
            }
        }
        positions.push(pos);
        for k in (0..rank).rev() {
            idx[k] += 1;
            if idx[k] < input[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    let out = if keepdims {
        Shape::new(
            (0..rank)
                .map(|k| if reduced[k] { 1 } else { input[k] })
                .collect::<Vec<_>>(),
        )
    } else {
        kept_shape
    };
    (out, positions)
}

fn check_axes(x: &HostArray, axes: &[usize]) -> Result<()> {
    let rank = x.shape().rank();
    if axes.iter().any(|&a| a >= rank) || axes.windows(2).any(|w| w[0] >= w[1]) {
        return invalid(format!("reduction axes {axes:?} invalid for rank {rank}"));
    }
    Ok(())
}

/// Sequential `f64` accumulation in row-major order.
pub fn reduce(x: &HostArray, kind: ReduceKind, axes: &[usize], keepdims: bool) -> Result<HostArray> {
    check_axes(x, axes)?;
    let (out_shape, positions) = reduce_layout(x.shape(), axes, keepdims);
    let n_out = out_shape.numel();
    let group = x.numel().checked_div(n_out).unwrap_or(0);
    if group == 0 && matches!(kind, ReduceKind::Min | ReduceKind::Max) && n_out > 0 {
        return invalid(format!("{} over an empty axis", kind.name()));
    }
    let dtype = x.dtype();
    let mut acc = match kind {
        ReduceKind::Sum | ReduceKind::Mean => vec![0.0; n_out],
        ReduceKind::Min => vec![f64::INFINITY; n_out],
        ReduceKind::Max => vec![f64::NEG_INFINITY; n_out],
    };
    for (&v, &p) in x.data().iter().zip(&positions) {
        match kind {
            ReduceKind::Sum | ReduceKind::Mean => acc[p] += v,
            ReduceKind::Min => {
                if v < acc[p] {
                    acc[p] = v
                }
            }
            ReduceKind::Max => {
                if v > acc[p] {
                    acc[p] = v
                }
            }
        }
    }
    if kind == ReduceKind::Mean {
        acc.iter_mut().for_each(|a| *a /= group as f64);
    }
    let data = acc.into_iter().map(|v| dtype.normalize(v)).collect();
    Ok(HostArray::from_normalized(data, out_shape, dtype))
}

/// For min/max reductions: the input linear index that supplied each output,
/// choosing the first occurrence in row-major order on ties.
pub fn reduce_arg_positions(x: &HostArray, kind: ReduceKind, axes: &[usize]) -> Result<Vec<usize>> {
    check_axes(x, axes)?;
    let (out_shape, positions) = reduce_layout(x.shape(), axes, false);
    let mut best: Vec<Option<usize>> = vec![None; out_shape.numel()];
    let data = x.data();
    for (i, &p) in positions.iter().enumerate() {
        let better = match best[p] {
            None => true,
            Some(j) => match kind {
                ReduceKind::Min => data[i] < data[j],
                ReduceKind::Max => data[i] > data[j],
                _ => return invalid("arg positions only defined for min/max"),
            },
        };
        if better {
            best[p] = Some(i);
        }
    }
    best.into_iter()
        .map(|b| b.ok_or_else(|| crate::error::Error::InvalidArgument("empty reduction".into())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtype::DType;

    fn arr(data: &[f64], shape: &[usize]) -> HostArray {
        HostArray::new(data.to_vec(), shape, DType::Float64).unwrap()
    }

    #[test]
    fn min_keepdims() {
        let x = arr(&[3.0, 1.0, 2.0, 4.0], &[2, 2]);
        let r = reduce(&x, ReduceKind::Min, &[1], true).unwrap();
        assert_eq!(r.shape().dims(), &[2, 1]);
        assert_eq!(r.data(), &[1.0, 2.0]);
    }

    #[test]
    fn sum_axis0_and_mean_all() {
        let x = arr(&[1.0, 2.0, 3.0, 4.0], &[2, 2]);
        assert_eq!(reduce(&x, ReduceKind::Sum, &[0], false).unwrap().data(), &[4.0, 6.0]);
        let m = reduce(&arr(&[1.0, 2.0, 3.0], &[3]), ReduceKind::Mean, &[0], false).unwrap();
        assert_eq!(m.shape().rank(), 0);
        assert_eq!(m.data(), &[2.0]);
    }

    #[test]
    fn ties_pick_first_occurrence() {
        let x = arr(&[2.0, 1.0, 1.0, 5.0, 5.0, 0.0], &[2, 3]);
        assert_eq!(reduce_arg_positions(&x, ReduceKind::Min, &[1]).unwrap(), vec![1, 5]);
        assert_eq!(reduce_arg_positions(&x, ReduceKind::Max, &[1]).unwrap(), vec![0, 3]);
    }

    #[test]
    fn middle_axis_matches_loop_oracle() {
        let data: Vec<f64> = (0..24).map(|v| ((v * 7) % 11) as f64).collect();
        let x = arr(&data, &[2, 3, 4]);
        let r = reduce(&x, ReduceKind::Sum, &[1], false).unwrap();
        for a in 0..2 {
            for c in 0..4 {
                let s: f64 = (0..3).map(|b| data[a * 12 + b * 4 + c]).sum();
                assert_eq!(r.data()[a * 4 + c], s);
            }
        }
    }
}

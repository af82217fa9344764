use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::array::HostArray;
use crate::dtype::DType;
use crate::error::{invalid, Result};
use crate::shape::Shape;

pub(super) fn linspace(start: &HostArray, stop: &HostArray, num: usize) -> Result<HostArray> {
    if start.shape() != stop.shape() {
        return invalid(format!(
            "linspace endpoints differ in shape: {} vs {}",
            start.shape(),
            stop.shape()
        ));
    }
    if num < 2 {
        return invalid(format!("linspace needs num >= 2, got {num}"));
    }
    let dtype = start.dtype();
    let width = start.numel();
    let mut data = Vec::with_capacity(num * width);
    let last = (num - 1) as f64;
    for i in 0..num {
        for (&a, &b) in start.data().iter().zip(stop.data()) {
            let v = if i == num - 1 {
                b
            } else {
                a + (b - a) * (i as f64 / last)
            };
            data.push(dtype.normalize(v));
        }
    }
    let mut dims = vec![num];
    dims.extend_from_slice(start.shape().dims());
    Ok(HostArray::from_normalized(data, Shape::new(dims), dtype))
}

/// Counter-based stream: element `i` of the output is the `i`-th draw of a
/// ChaCha8 stream keyed by `seed`, independent of backend and thread.
pub(super) fn random_uniform(
    low: f64,
    high: f64,
    shape: &Shape,
    seed: u64,
    dtype: DType,
) -> Result<HostArray> {
    if !dtype.is_float() {
        return invalid(format!("random_uniform requires a float dtype, got {dtype}"));
    }
    let dist = Uniform::new(low, high)
        .map_err(|e| crate::error::Error::InvalidArgument(format!("random_uniform: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..shape.numel())
        .map(|_| {
            let v = dtype.normalize(dist.sample(&mut rng));
            // f32 rounding may land on the open upper bound
            if v >= high {
                (high as f32).next_down() as f64
            } else {
                v
            }
        })
        .collect();
    Ok(HostArray::from_normalized(data, shape.clone(), dtype))
}

pub(super) fn cast(x: &HostArray, to: DType) -> HostArray {
    let data = x.data().iter().map(|&v| to.normalize(v)).collect();
    HostArray::from_normalized(data, x.shape().clone(), to)
}

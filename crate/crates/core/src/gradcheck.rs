//! Central finite-difference checks for reverse-mode gradients.

use crate::backend::BackendRef;
use crate::error::{invalid, Result};
use crate::tensor::Tensor;

/// Outcome of [`check`]: per-input analytic and numeric gradients and the
/// worst relative error across inputs.
#[derive(Debug, Clone)]
pub struct GradCheck {
    pub analytic: Vec<Vec<f64>>,
    pub numeric: Vec<Vec<f64>>,
    pub max_rel_err: f64,
}

/// `max|a - n| / max(max|n|, floor)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max);
    let scale = numeric.iter().map(|n| n.abs()).fold(floor, f64::max);
    diff / scale
}

/// Error floor for gradients that are numerically zero.
pub const ERR_FLOOR: f64 = 1e-6;

/// Compares the gradient of the scalar `func` with central differences of
/// step `h`, perturbing one input element at a time.
pub fn check<F>(f: BackendRef, func: F, inputs: &[Tensor], h: f64) -> Result<GradCheck>
where
    F: Fn(BackendRef, &[Tensor]) -> Result<Tensor>,
{
    if !f.supports_gradients() {
        return Err(f.inner().unsupported("gradient check"));
    }
    let vars = inputs.iter().map(|x| f.variable(x)).collect::<Result<Vec<_>>>()?;
    let g = f.execute_with_gradients(|xs| func(f, xs), &vars)?;
    let analytic = g.grads.iter().map(Tensor::to_vec).collect::<Result<Vec<_>>>()?;

    let mut numeric = Vec::with_capacity(inputs.len());
    for (i, x) in inputs.iter().enumerate() {
        let base = x.to_vec()?;
        let shape: Vec<usize> = x.shape().dims().to_vec();
        let mut grad = Vec::with_capacity(base.len());
        for j in 0..base.len() {
            let eval = |delta: f64| -> Result<f64> {
                let mut data = base.clone();
                data[j] += delta;
                let mut args = inputs.to_vec();
                args[i] = f.from_vec(data, &shape, x.dtype())?;
                let y = func(f, &args)?;
                if y.numel() != 1 {
                    return invalid("gradient check needs a scalar function");
                }
                y.item()
            };
            grad.push((eval(h)? - eval(-h)?) / (2.0 * h));
        }
        numeric.push(grad);
    }
    let max_rel_err = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| relative_error(a, n, ERR_FLOOR))
        .fold(0.0, f64::max);
    Ok(GradCheck {
        analytic,
        numeric,
        max_rel_err,
    })
}

//! One-unit tanh model fit to a single point with plain gradient descent.

use serde::{Deserialize, Serialize};
use templar::{BackendRef, DType, Result, Tensor, Variable};

/// Glorot-uniform limit for one input and one output.
pub fn weight_limit() -> f64 {
    (6.0f64 / (1.0 + 1.0)).sqrt()
}

#[derive(Debug, Clone)]
pub struct FcModel {
    f: BackendRef,
    /// `[weight (1, 1), bias (1)]`.
    pub v: Vec<Variable>,
}

impl FcModel {
    pub fn new(f: BackendRef, seed: u64) -> Result<Self> {
        let lim = weight_limit();
        let w = f.variable(&f.random_uniform(-lim, lim, &[1, 1], seed)?)?;
        let b = f.variable(&f.zeros(&[1], DType::Float64)?)?;
        Ok(FcModel { f, v: vec![w, b] })
    }

    /// `tanh(x w^T + b)` for `x` of shape `[N, 1]`.
    pub fn call(&self, x: &Tensor, v: Option<&[Tensor]>) -> Result<Tensor> {
        let f = self.f;
        let owned: Vec<Tensor>;
        let v = match v {
            Some(v) => v,
            None => {
                owned = self.v.iter().map(|p| p.value().clone()).collect();
                &owned
            }
        };
        f.tanh(&f.linear(x, &v[0], Some(&v[1]))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Loss before each update.
    pub losses: Vec<f64>,
    pub weight: f64,
    pub bias: f64,
    pub seed: u64,
}

impl FitReport {
    pub fn non_increasing(&self) -> bool {
        self.losses.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn improved(&self) -> bool {
        matches!((self.losses.first(), self.losses.last()), (Some(a), Some(b)) if b < a)
    }
}

/// Fits input 1 to target 1 under squared loss for `iters` steps.
pub fn run_fit_fc(lr: f64, iters: usize, seed: u64, f: BackendRef) -> Result<FitReport> {
    let mut model = FcModel::new(f, seed)?;
    let x = f.from_vec(vec![1.0], &[1, 1], DType::Float64)?;
    let target = f.from_vec(vec![1.0], &[1, 1], DType::Float64)?;
    let mut losses = Vec::with_capacity(iters);
    for _ in 0..iters {
        let g = f.execute_with_gradients(
            |v| {
                let d = f.sub(&model.call(&x, Some(v))?, &target)?;
                f.reduce_sum(&f.pow(&d, 2.0)?, None, false)
            },
            &model.v,
        )?;
        losses.push(g.loss.item()?);
        model.v = f.gradient_descent_update(&model.v, &g.grads, lr)?;
    }
    Ok(FitReport {
        losses,
        weight: model.v[0].value().item()?,
        bias: model.v[1].value().item()?,
        seed,
    })
}

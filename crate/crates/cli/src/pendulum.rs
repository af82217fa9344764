//! Pendulum swing-up by gradient ascent on an open-loop torque sequence.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use templar::{BackendRef, DType, Error, Result, Tensor};
use templar_libs::{rollout, PendulumState};

/// Half-width of the seeded initial torque noise.
pub const INIT_TORQUE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendulumReport {
    /// Cumulative reward before each update.
    pub rewards: Vec<f64>,
    /// Cumulative reward after the last update.
    pub final_reward: f64,
    /// Cumulative reward of all-zero torques from the same start.
    pub baseline: f64,
    pub torques: Vec<f64>,
    pub seed: u64,
}

impl PendulumReport {
    /// `(final - baseline) / |baseline|`.
    pub fn improvement(&self) -> f64 {
        (self.final_reward - self.baseline) / self.baseline.abs()
    }
}

fn hanging(f: BackendRef) -> Result<PendulumState> {
    Ok(PendulumState { theta: f.scalar(PI, DType::Float64)?, omega: f.scalar(0.0, DType::Float64)? })
}

/// Runs `iters` ascent steps on `horizon` torques starting from the hanging
/// position, with torques initialized to small seeded noise.
pub fn run_pendulum(horizon: usize, iters: usize, lr: f64, seed: u64, f: BackendRef) -> Result<PendulumReport> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let start = hanging(f)?;
    let baseline = rollout(&start, &f.zeros(&[horizon], DType::Float64)?, Some(f))?.item()?;
    let mut u = f.variable(&f.random_uniform(-INIT_TORQUE, INIT_TORQUE, &[horizon], seed)?)?;
    let mut rewards = Vec::with_capacity(iters);
    for _ in 0..iters {
        let g = f.execute_with_gradients(|xs| f.neg(&rollout(&start, &xs[0], Some(f))?), std::slice::from_ref(&u))?;
        rewards.push(-g.loss.item()?);
        u = f.gradient_descent_update(&[u], &g.grads, lr)?.remove(0);
    }
    let torques: &Tensor = u.value();
    Ok(PendulumReport {
        rewards,
        final_reward: rollout(&start, torques, Some(f))?.item()?,
        baseline,
        torques: torques.to_vec()?,
        seed,
    })
}

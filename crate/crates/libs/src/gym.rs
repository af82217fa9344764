//! Differentiable pendulum swing-up.
//!
//! `theta = 0` is upright. Dynamics and reward follow the classic-control
//! pendulum with g = 10, m = 1, l = 1 and dt = 0.05.

use std::f64::consts::PI;

use templar::handler::get_framework;
use templar::{BackendRef, Error, Result, Tensor};

pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_SPEED: f64 = 8.0;
pub const MAX_TORQUE: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct PendulumState {
    pub theta: Tensor,
    pub omega: Tensor,
}

/// Angle wrapped into `(-pi, pi]`. Gradient passes straight through.
pub fn wrap_angle(theta: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    let f = get_framework(&[theta], f)?;
    let turns = f.ceil(&f.div(&f.sub(theta, PI)?, 2.0 * PI)?)?;
    f.sub(theta, &f.mul(&turns, 2.0 * PI)?)
}

/// One step under torque `u` (clamped to `[-2, 2]`). Returns the next state
/// and the reward `-(wrap(theta)^2 + 0.1 omega^2 + 0.001 u^2)` of the
/// current state.
pub fn pendulum_step(state: &PendulumState, u: &Tensor, f: Option<BackendRef>) -> Result<(PendulumState, Tensor)> {
    let f = get_framework(&[&state.theta, &state.omega, u], f)?;
    let u = f.clip(u, -MAX_TORQUE, MAX_TORQUE)?;
    let th = wrap_angle(&state.theta, Some(f))?;
    let cost = f.add(
        &f.add(&f.mul(&th, &th)?, &f.mul(&f.mul(&state.omega, &state.omega)?, 0.1)?)?,
        &f.mul(&f.mul(&u, &u)?, 0.001)?,
    )?;
    let accel = f.add(
        &f.mul(&f.sin(&state.theta)?, 3.0 * GRAVITY / (2.0 * LENGTH))?,
        &f.mul(&u, 3.0 / (MASS * LENGTH * LENGTH))?,
    )?;
    let omega = f.clip(&f.add(&state.omega, &f.mul(&accel, DT)?)?, -MAX_SPEED, MAX_SPEED)?;
    let theta = f.add(&state.theta, &f.mul(&omega, DT)?)?;
    Ok((PendulumState { theta, omega }, f.neg(&cost)?))
}

/// Sum of rewards over the torque sequence `torques` (`[H]`, `H >= 1`).
pub fn rollout(initial: &PendulumState, torques: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    let f = get_framework(&[&initial.theta, &initial.omega, torques], f)?;
    let h = match torques.shape().dims() {
        [h] if *h >= 1 => *h,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "torques must be [H] with H >= 1, got {}",
                torques.shape()
            )))
        }
    };
    let mut state = initial.clone();
    let mut total: Option<Tensor> = None;
    for k in 0..h {
        let u = f.reshape(&f.slice(torques, 0, k, k + 1)?, &[])?;
        let (next, r) = pendulum_step(&state, &u, Some(f))?;
        total = Some(match total {
            None => r,
            Some(t) => f.add(&t, &r)?,
        });
        state = next;
    }
    Ok(total.expect("at least one step"))
}

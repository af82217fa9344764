//! Gradient-based drone motion planning through a cuboid scene.
//!
//! The interior spline anchors are the only learnable values. Each iteration
//! samples the spline, converts the poses to matrices, places the body
//! points and scores `length + 10 * (-mean sdf)`. The loop stops once every
//! body point clears the scene by `clearance`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use templar::{BackendRef, Error, Tensor, Variable};
use templar_libs::{compute_length, rot_vec_pose_to_mat_pose, sample_spline_path, scene_sdf, Cuboids, RigidMobile};

use crate::scene::SceneConfig;
use crate::Result;

pub const COLLISION_WEIGHT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    pub lr: f64,
    pub num_anchors: usize,
    pub num_samples: usize,
    pub clearance: f64,
    pub max_iters: usize,
    /// Recorded only; initialization is deterministic.
    pub seed: u64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig { lr: 0.01, num_anchors: 2, num_samples: 100, clearance: 0.1, max_iters: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub cost: f64,
    /// `None` when the scene has no obstacles.
    pub min_sdf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub iterations: Vec<IterationRecord>,
    /// `[S, 6]` at the last evaluated iterate.
    pub poses: Vec<[f64; 6]>,
    /// `[S, P, 3]` at the last evaluated iterate.
    pub body_positions: Vec<Vec<[f64; 3]>>,
    pub converged: bool,
    pub iterations_used: usize,
    pub backend: String,
    pub seed: u64,
}

impl PlanReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        crate::write_json(self, path)
    }

    pub fn final_min_sdf(&self) -> Option<f64> {
        self.iterations.last().and_then(|r| r.min_sdf)
    }
}

struct Problem<'a> {
    f: BackendRef,
    anchor_times: Tensor,
    query_times: Tensor,
    start: Tensor,
    goal: Tensor,
    robot: RigidMobile,
    cuboids: Option<&'a Cuboids>,
}

struct Evaluation {
    cost: f64,
    min_sdf: Option<f64>,
    poses: Tensor,
    body: Tensor,
    grad: Tensor,
}

impl Problem<'_> {
    /// Total cost plus `[poses, body, sdf]`.
    fn cost(&self, interior: &Tensor) -> templar::Result<(Tensor, Vec<Tensor>)> {
        let f = self.f;
        let anchors = f.concatenate(&[&f.expand_dims(&self.start, 0)?, interior, &f.expand_dims(&self.goal, 0)?], 0)?;
        let poses = sample_spline_path(&self.anchor_times, &anchors, &self.query_times, Some(f))?;
        let mats = rot_vec_pose_to_mat_pose(&poses, Some(f))?;
        let body = self.robot.sample_body(&mats, Some(f))?;
        // Point-major layout, as the reference pipeline feeds it to the length term.
        let length = compute_length(&f.transpose(&body, Some(&[1, 0, 2]))?, Some(f))?;
        let mut aux = vec![poses, body.clone()];
        let total = match self.cuboids {
            Some(c) => {
                let sdf = scene_sdf(c, &f.reshape(&body, &[-1, 3])?, Some(f))?;
                let coll = f.neg(&f.reduce_mean(&sdf, None, false)?)?;
                aux.push(sdf);
                f.add(&length, &f.mul(&coll, COLLISION_WEIGHT)?)?
            }
            None => length,
        };
        Ok((total, aux))
    }

    fn evaluate(&self, var: &Variable) -> templar::Result<Evaluation> {
        let g = self.f.execute_with_gradients(|xs| self.cost(&xs[0]), std::slice::from_ref(var))?;
        let min_sdf = match g.aux.get(2) {
            Some(sdf) => Some(self.f.reduce_min(sdf, None, false)?.item()?),
            None => None,
        };
        Ok(Evaluation {
            cost: g.loss.item()?,
            min_sdf,
            poses: g.aux[0].clone(),
            body: g.aux[1].clone(),
            grad: g.grads[0].clone(),
        })
    }
}

fn check(cfg: &PlanConfig) -> templar::Result<()> {
    let bad = |m: String| Err(Error::InvalidArgument(m));
    if cfg.num_anchors < 1 {
        return bad("num_anchors must be at least 1".into());
    }
    if cfg.num_samples < 2 {
        return bad(format!("num_samples must be at least 2, got {}", cfg.num_samples));
    }
    if cfg.max_iters < 1 {
        return bad("max_iters must be at least 1".into());
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return bad(format!("lr must be finite and non-negative, got {}", cfg.lr));
    }
    if !cfg.clearance.is_finite() {
        return bad(format!("clearance must be finite, got {}", cfg.clearance));
    }
    Ok(())
}

/// Optimizes the interior anchors until the path clears the scene or
/// `max_iters` evaluations have run. Needs a gradient-capable backend.
pub fn run_plan(scene: &SceneConfig, cfg: &PlanConfig, f: BackendRef) -> Result<PlanReport> {
    run_plan_with(scene, cfg, f, |_, _| {})
}

/// [`run_plan`] calling `on_iter(index, record)` after every evaluation.
pub fn run_plan_with(
    scene: &SceneConfig,
    cfg: &PlanConfig,
    f: BackendRef,
    mut on_iter: impl FnMut(usize, &IterationRecord),
) -> Result<PlanReport> {
    check(cfg)?;
    scene.validate()?;
    if !f.supports_gradients() {
        return Err(Error::Unsupported { backend: f.id().to_string(), what: "motion planning (needs gradients)".into() }.into());
    }
    let a = cfg.num_anchors;
    let (start, goal) = scene.poses(f)?;
    let cuboids = scene.cuboids(f)?;
    let problem = Problem {
        f,
        anchor_times: f.expand_dims(&f.linspace(0.0, 1.0, a + 2)?, -1)?,
        query_times: f.expand_dims(&f.linspace(0.0, 1.0, cfg.num_samples)?, -1)?,
        robot: scene.robot(f)?,
        cuboids: cuboids.as_ref(),
        start: start.clone(),
        goal: goal.clone(),
    };
    let init = f.slice(&f.linspace(&start, &goal, a + 2)?, 0, 1, a + 1)?;
    let mut var = f.variable(&init)?;

    let mut iterations = Vec::new();
    let mut last = None;
    let mut converged = false;
    for it in 0..cfg.max_iters {
        let ev = problem.evaluate(&var)?;
        let record = IterationRecord { cost: ev.cost, min_sdf: ev.min_sdf };
        on_iter(it, &record);
        iterations.push(record);
        converged = ev.min_sdf.is_none_or(|d| d >= cfg.clearance);
        if !converged {
            var = f.gradient_descent_update(&[var], std::slice::from_ref(&ev.grad), cfg.lr)?.remove(0);
        }
        let done = converged;
        last = Some(ev);
        if done {
            break;
        }
    }
    let ev = last.expect("max_iters >= 1");
    Ok(PlanReport {
        iterations_used: iterations.len(),
        iterations,
        poses: rows(&ev.poses.to_vec()?),
        body_positions: rows::<3>(&ev.body.to_vec()?)
            .chunks(scene.rel_body_points.len())
            .map(<[_]>::to_vec)
            .collect(),
        converged,
        backend: f.id().to_string(),
        seed: cfg.seed,
    })
}

fn rows<const N: usize>(flat: &[f64]) -> Vec<[f64; N]> {
    flat.chunks_exact(N).map(|c| c.try_into().expect("exact chunk")).collect()
}

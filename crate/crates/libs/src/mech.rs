//! Orientation and pose conversions.

use templar::handler::get_framework;
use templar::{BackendRef, DType, Error, Result, Tensor};

/// Below this rotation angle the first-order form `I + skew(v)` is used.
pub const SMALL_ANGLE: f64 = 1e-8;

fn trailing(x: &Tensor, n: usize, what: &str) -> Result<()> {
    match x.shape().dims().last() {
        Some(&d) if d == n => Ok(()),
        _ => Err(Error::InvalidArgument(format!(
            "{what} expects a trailing axis of {n}, got shape {}",
            x.shape()
        ))),
    }
}

/// Polar `(phi, theta, r)` to cartesian `(x, y, z)`, with `theta` the
/// inclination from +z.
pub fn plr_to_cart(plr: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    let f = get_framework(&[plr], f)?;
    trailing(plr, 3, "plr_to_cart")?;
    let phi = f.slice(plr, -1, 0, 1)?;
    let theta = f.slice(plr, -1, 1, 2)?;
    let r = f.slice(plr, -1, 2, 3)?;
    let r_sin = f.mul(&r, &f.sin(&theta)?)?;
    let x = f.mul(&r_sin, &f.cos(&phi)?)?;
    let y = f.mul(&r_sin, &f.sin(&phi)?)?;
    let z = f.mul(&r, &f.cos(&theta)?)?;
    f.concatenate(&[&x, &y, &z], -1)
}

/// `[..., 3] -> [..., 3, 3]` cross-product matrices.
fn skew(f: BackendRef, v: &Tensor) -> Result<Tensor> {
    let vx = f.slice(v, -1, 0, 1)?;
    let vy = f.slice(v, -1, 1, 2)?;
    let vz = f.slice(v, -1, 2, 3)?;
    let zero = f.mul(&vx, 0.0)?;
    let row0 = f.concatenate(&[&zero, &f.neg(&vz)?, &vy], -1)?;
    let row1 = f.concatenate(&[&vz, &zero, &f.neg(&vx)?], -1)?;
    let row2 = f.concatenate(&[&f.neg(&vy)?, &vx, &zero], -1)?;
    f.stack(&[&row0, &row1, &row2], -2)
}

/// `(x, y, z, rx, ry, rz)` poses to `[R | t]` matrices of shape `[..., 3, 4]`.
///
/// With `S = skew(v)` and `θ = |v|`, `R = I + (sin θ / θ) S + ((1 - cos θ) / θ²) S²`.
/// The second coefficient is evaluated as `2 sin²(θ/2) / θ²`, and angles below
/// [`SMALL_ANGLE`] take the first-order branch. The division runs on a
/// substituted angle there, so the discarded branch never produces NaN
/// gradients.
pub fn rot_vec_pose_to_mat_pose(pose: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    let f = get_framework(&[pose], f)?;
    trailing(pose, 6, "rot_vec_pose_to_mat_pose")?;
    let t = f.slice(pose, -1, 0, 3)?;
    let v = f.slice(pose, -1, 3, 6)?;

    let theta = f.sqrt(&f.reduce_sum(&f.mul(&v, &v)?, Some(-1), true)?)?;
    let small = f.less(&theta, SMALL_ANGLE)?;
    let safe = f.select(&small, 1.0, &theta)?;
    let a = f.div(&f.sin(&safe)?, &safe)?;
    let half = f.sin(&f.mul(&safe, 0.5)?)?;
    let b = f.div(&f.mul(&f.mul(&half, &half)?, 2.0)?, &f.mul(&safe, &safe)?)?;
    let a = f.select(&small, 1.0, &a)?;
    let b = f.select(&small, 0.0, &b)?;

    let s = skew(f, &v)?;
    let s2 = f.matmul(&s, &s)?;
    let a = f.expand_dims(&a, -1)?;
    let b = f.expand_dims(&b, -1)?;
    let eye = f.from_vec(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], &[3, 3], pose.dtype())?;
    let rot = f.add(&f.add(&f.mul(&a, &s)?, &f.mul(&b, &s2)?)?, &eye)?;
    f.concatenate(&[&rot, &f.expand_dims(&t, -1)?], -1)
}

/// Identity `[R | t]` with zero translation, for callers building poses.
pub fn identity_mat_pose(f: BackendRef, dtype: DType) -> Result<Tensor> {
    f.from_vec(
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        &[3, 4],
        dtype,
    )
}

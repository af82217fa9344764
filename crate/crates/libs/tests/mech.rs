mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::t;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use templar::backend::{autodiff, host};
use templar::gradcheck;
use templar::Error;
use templar_libs::{plr_to_cart, rot_vec_pose_to_mat_pose};

/// Rotation matrix of the unit quaternion for axis-angle `v`.
fn quat_rotation(v: [f64; 3]) -> [[f64; 3]; 3] {
    let angle = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (w, x, y, z) = if angle == 0.0 {
        (1.0, 0.0, 0.0, 0.0)
    } else {
        let s = (angle / 2.0).sin() / angle;
        ((angle / 2.0).cos(), v[0] * s, v[1] * s, v[2] * s)
    };
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn det3(m: &[f64]) -> f64 {
    let a = |r: usize, c: usize| m[r * 4 + c];
    a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
}

#[test]
fn polar_examples() {
    let f = host();
    let pole = plr_to_cart(&t(f, &[0.0, 0.0, 2.0], &[3]), None).unwrap().to_vec().unwrap();
    assert_eq!(pole, vec![0.0, 0.0, 2.0]);
    let eq = plr_to_cart(&t(f, &[0.0, FRAC_PI_2, 1.0], &[3]), None).unwrap().to_vec().unwrap();
    for (a, b) in eq.iter().zip([1.0, 0.0, 0.0]) {
        assert!((a - b).abs() < 1e-7);
    }
    let batch = t(f, &[0.0, 0.0, 2.0, 0.0, FRAC_PI_2, 1.0], &[2, 3]);
    let out = plr_to_cart(&batch, None).unwrap();
    assert_eq!(out.shape().dims(), &[2, 3]);
    let v = out.to_vec().unwrap();
    assert_eq!(&v[..3], &pole[..]);
    assert_eq!(&v[3..], &eq[..]);
    assert!(matches!(plr_to_cart(&t(f, &[1.0, 2.0], &[2]), None), Err(Error::InvalidArgument(_))));
}

#[test]
fn pose_examples() {
    let f = host();
    let m = rot_vec_pose_to_mat_pose(&t(f, &[1.0, 2.0, 3.0, 0.0, 0.0, 0.0], &[6]), None).unwrap();
    assert_eq!(m.shape().dims(), &[3, 4]);
    assert_eq!(m.to_vec().unwrap(), vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 3.0]);

    let m = rot_vec_pose_to_mat_pose(&t(f, &[0.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2], &[6]), None).unwrap();
    let expect = [0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    for (a, b) in m.to_vec().unwrap().iter().zip(expect) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
    assert!(matches!(rot_vec_pose_to_mat_pose(&t(f, &[0.0; 3], &[3]), None), Err(Error::InvalidArgument(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polar_norm_is_radius(phi in -2.0 * PI..2.0 * PI, theta in -PI..PI, r in -5.0f64..5.0) {
        let out = plr_to_cart(&t(host(), &[phi, theta, r], &[3]), None).unwrap().to_vec().unwrap();
        let n = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((n - r.abs()).abs() < 1e-7);
    }

    #[test]
    fn rotation_matches_quaternion_oracle(
        pos in prop::array::uniform3(-3.0f64..3.0),
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in 0.0f64..PI,
        tiny in prop::bool::weighted(0.1),
    ) {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt().max(1e-12);
        let scale = if tiny { 1e-9 } else { angle };
        let v = [axis[0] / norm * scale, axis[1] / norm * scale, axis[2] / norm * scale];
        let pose = [pos[0], pos[1], pos[2], v[0], v[1], v[2]];
        let m = rot_vec_pose_to_mat_pose(&t(host(), &pose, &[6]), None).unwrap().to_vec().unwrap();
        let q = quat_rotation(v);
        for r in 0..3 {
            for c in 0..3 {
                prop_assert!((m[r * 4 + c] - q[r][c]).abs() < 1e-6);
            }
            prop_assert_eq!(m[r * 4 + 3], pos[r]);
        }
        // Orthonormal with unit determinant.
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k * 4 + i] * m[k * 4 + j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expect).abs() < 1e-6);
            }
        }
        prop_assert!((det3(&m) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn batched_poses_are_independent() {
    let f = host();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f64> = (0..2 * 3 * 6).map(|_| rng.random_range(-2.0..2.0)).collect();
    let out = rot_vec_pose_to_mat_pose(&t(f, &data, &[2, 3, 6]), None).unwrap();
    assert_eq!(out.shape().dims(), &[2, 3, 3, 4]);
    let all = out.to_vec().unwrap();
    for k in 0..6 {
        let one = rot_vec_pose_to_mat_pose(&t(f, &data[k * 6..k * 6 + 6], &[6]), None).unwrap().to_vec().unwrap();
        assert_eq!(&all[k * 12..k * 12 + 12], &one[..]);
    }
}

#[test]
fn pose_gradients_match_finite_differences() {
    let f = autodiff();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for case in 0..60 {
        let mut pose: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        if case % 3 == 0 {
            // Rotation angle of 1e-6.
            let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            for i in 0..3 {
                pose[3 + i] = dir[i] / n * 1e-6;
            }
        }
        let w: Vec<f64> = (0..12).map(|_| rng.random_range(0.5..1.5)).collect();
        let g = gradcheck::check(
            f,
            |f, xs| {
                let m = rot_vec_pose_to_mat_pose(&xs[0], Some(f))?;
                f.reduce_sum(&f.mul(&m, &f.from_vec(w.clone(), &[3, 4], templar::DType::Float64)?)?, None, false)
            },
            &[t(f, &pose, &[6])],
            1e-6,
        )
        .unwrap();
        worst = worst.max(g.max_rel_err);
    }
    assert!(worst <= 1e-4, "max relative error {worst}");
}

#[test]
fn zero_rotation_has_finite_gradient() {
    let f = autodiff();
    let v = f.variable(&t(f, &[0.5, 0.5, 0.5, 0.0, 0.0, 0.0], &[6])).unwrap();
    let g = f
        .execute_with_gradients(
            |xs| {
                let m = rot_vec_pose_to_mat_pose(&xs[0], Some(f))?;
                // Picks R[1][0], whose derivative in rz is 1 at the identity.
                f.reduce_sum(&f.slice(&f.slice(&m, 0, 1, 2)?, 1, 0, 1)?, None, false)
            },
            &[v],
        )
        .unwrap();
    let d = g.grads[0].to_vec().unwrap();
    assert!(d.iter().all(|x| x.is_finite()));
    assert_eq!(d, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
}

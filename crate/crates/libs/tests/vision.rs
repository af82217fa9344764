mod common;

use common::{scene, t, to_local, DIMS, EXT_MATS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use templar::backend::{autodiff, host};
use templar::{gradcheck, DType, Error};
use templar_libs::{coords_to_voxel_grid, cuboid_signed_distances, scene_sdf, Cuboids};

fn unit_cube(f: templar::BackendRef) -> Cuboids {
    Cuboids {
        ext_mats: t(f, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0], &[1, 3, 4]),
        dims: t(f, &[1.0, 1.0, 1.0], &[1, 3]),
    }
}

fn inside_box(local: [f64; 3], dims: [f64; 3]) -> bool {
    (0..3).all(|i| local[i].abs() < dims[i] / 2.0)
}

/// Distance from `p` to the surface of a centered box, by sampling each face
/// on a grid and repeatedly refining around the closest sample.
fn sampled_surface_distance(p: [f64; 3], dims: [f64; 3]) -> f64 {
    const N: usize = 21;
    let mut best = f64::INFINITY;
    for axis in 0..3 {
        for side in [-1.0, 1.0] {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            let (mut lo_a, mut hi_a) = (-dims[a] / 2.0, dims[a] / 2.0);
            let (mut lo_b, mut hi_b) = (-dims[b] / 2.0, dims[b] / 2.0);
            let mut face_best = f64::INFINITY;
            for _ in 0..8 {
                let (sa, sb) = ((hi_a - lo_a) / (N - 1) as f64, (hi_b - lo_b) / (N - 1) as f64);
                let (mut ba, mut bb) = (lo_a, lo_b);
                for i in 0..N {
                    for j in 0..N {
                        let (u, v) = (lo_a + i as f64 * sa, lo_b + j as f64 * sb);
                        let mut q = [0.0; 3];
                        q[axis] = side * dims[axis] / 2.0;
                        q[a] = u;
                        q[b] = v;
                        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                        if d < face_best {
                            face_best = d;
                            ba = u;
                            bb = v;
                        }
                    }
                }
                lo_a = (ba - sa).max(-dims[a] / 2.0);
                hi_a = (ba + sa).min(dims[a] / 2.0);
                lo_b = (bb - sb).max(-dims[b] / 2.0);
                hi_b = (bb + sb).min(dims[b] / 2.0);
            }
            best = best.min(face_best);
        }
    }
    best
}

fn random_points(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .flat_map(|_| [rng.random_range(-1.6..1.6), rng.random_range(-1.6..1.6), rng.random_range(-0.2..1.5)])
        .collect()
}

#[test]
fn unit_cube_examples() {
    let f = host();
    let c = unit_cube(f);
    let q = t(f, &[0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.5, 0.0, 0.0], &[3, 3]);
    let d = cuboid_signed_distances(&c.ext_mats, &c.dims, &q, None).unwrap();
    assert_eq!(d.shape().dims(), &[3, 1]);
    assert_eq!(d.to_vec().unwrap(), vec![-0.5, 1.0, 0.0]);
    let s = scene_sdf(&c, &q, None).unwrap();
    assert!(s.bit_eq(&d));
}

#[test]
fn min_over_cuboids_picks_the_containing_one() {
    let f = host();
    let c = Cuboids {
        ext_mats: t(
            f,
            &[
                1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, //
                1.0, 0.0, 0.0, -10.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
            ],
            &[2, 3, 4],
        ),
        dims: t(f, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0], &[2, 3]),
    };
    let q = t(f, &[0.1, 0.0, 0.0], &[1, 3]);
    assert_eq!(scene_sdf(&c, &q, None).unwrap().to_vec().unwrap(), vec![-0.4]);
}

#[test]
fn shape_errors() {
    let f = host();
    let c = unit_cube(f);
    let q = t(f, &[0.0, 0.0], &[1, 2]);
    assert!(matches!(cuboid_signed_distances(&c.ext_mats, &c.dims, &q, None), Err(Error::InvalidArgument(_))));
    let bad_dims = t(f, &[1.0, 1.0], &[1, 2]);
    let q = t(f, &[0.0; 3], &[1, 3]);
    assert!(matches!(cuboid_signed_distances(&c.ext_mats, &bad_dims, &q, None), Err(Error::InvalidArgument(_))));
}

#[test]
fn batch_dims_on_queries() {
    let f = host();
    let c = scene(f);
    let pts = random_points(1, 24);
    let flat = scene_sdf(&c, &t(f, &pts, &[24, 3]), None).unwrap().to_vec().unwrap();
    let batched = scene_sdf(&c, &t(f, &pts, &[2, 3, 4, 3]), None).unwrap();
    assert_eq!(batched.shape().dims(), &[2, 3, 4, 1]);
    assert_eq!(batched.to_vec().unwrap(), flat);
}

#[test]
fn sign_matches_point_in_box_oracle() {
    let f = host();
    let n = 10_000;
    let pts = random_points(2, n);
    let d = cuboid_signed_distances(&scene(f).ext_mats, &scene(f).dims, &t(f, &pts, &[n, 3]), None)
        .unwrap()
        .to_vec()
        .unwrap();
    let mut inside_count = 0;
    for i in 0..n {
        let p = [pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]];
        for m in 0..4 {
            let inside = inside_box(to_local(&EXT_MATS[m], p), DIMS[m]);
            inside_count += inside as usize;
            assert_eq!(d[i * 4 + m] < 0.0, inside, "point {p:?} cuboid {m}");
        }
    }
    assert!(inside_count > 100);
}

#[test]
fn outside_magnitude_matches_surface_sampling() {
    let f = host();
    let n = 1000;
    let pts = random_points(3, n);
    let d = cuboid_signed_distances(&scene(f).ext_mats, &scene(f).dims, &t(f, &pts, &[n, 3]), None)
        .unwrap()
        .to_vec()
        .unwrap();
    let mut checked = 0;
    for i in 0..n {
        let p = [pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]];
        for m in 0..4 {
            let local = to_local(&EXT_MATS[m], p);
            if inside_box(local, DIMS[m]) {
                continue;
            }
            let oracle = sampled_surface_distance(local, DIMS[m]);
            assert!((d[i * 4 + m] - oracle).abs() <= 2e-3, "{} vs {oracle}", d[i * 4 + m]);
            checked += 1;
        }
    }
    assert!(checked > 3000);
}

#[test]
fn outside_gradient_is_unit_and_matches_finite_differences() {
    let f = autodiff();
    let c = scene(f);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases = 0;
    while cases < 60 {
        let p = [rng.random_range(-1.6..1.6), rng.random_range(-1.6..1.6), rng.random_range(-0.2..1.5)];
        let d: Vec<f64> = cuboid_signed_distances(&c.ext_mats, &c.dims, &t(f, &p, &[1, 3]), None)
            .unwrap()
            .to_vec()
            .unwrap();
        let mut sorted = d.clone();
        sorted.sort_by(f64::total_cmp);
        // Strictly outside with a clear unique minimizer.
        if sorted[0] < 0.05 || sorted[1] - sorted[0] < 0.01 {
            continue;
        }
        cases += 1;
        let g = gradcheck::check(
            f,
            |f, xs| f.reduce_sum(&scene_sdf(&c, &xs[0], Some(f))?, None, false),
            &[t(f, &p, &[1, 3])],
            1e-6,
        )
        .unwrap();
        assert!(g.max_rel_err <= 1e-4, "{p:?}: {}", g.max_rel_err);
        let norm = g.analytic[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-4, "{p:?}: |grad| = {norm}");
    }
}

#[test]
fn voxel_examples() {
    let f = host();
    let g = coords_to_voxel_grid(&t(f, &[0.3, 0.3, 0.3], &[1, 3]), [2, 2, 2], &t(f, &[5.0], &[1, 1]), None, None).unwrap();
    assert_eq!(g.features.shape().dims(), &[2, 2, 2, 1]);
    let feats = g.features.to_vec().unwrap();
    assert_eq!(feats.iter().filter(|&&v| v != 0.0).count(), 1);
    assert_eq!(feats.iter().sum::<f64>(), 5.0);
    assert_eq!(g.counts.to_vec().unwrap().iter().sum::<f64>(), 1.0);

    let g = coords_to_voxel_grid(
        &t(f, &[0.1, 0.2, 0.3, 0.1, 0.2, 0.3], &[2, 3]),
        [2, 2, 2],
        &t(f, &[1.0, 2.0], &[2, 1]),
        None,
        None,
    )
    .unwrap();
    let feats = g.features.to_vec().unwrap();
    let counts = g.counts.to_vec().unwrap();
    let k = feats.iter().position(|&v| v != 0.0).unwrap();
    assert_eq!(feats[k], 3.0);
    assert_eq!(counts[k], 2.0);
}

#[test]
fn voxel_upper_bound_and_explicit_bounds() {
    let f = host();
    let coords = t(f, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], &[2, 3]);
    let g = coords_to_voxel_grid(&coords, [4, 4, 4], &t(f, &[1.0, 1.0], &[2, 1]), None, None).unwrap();
    let counts = g.counts.to_vec().unwrap();
    assert_eq!(counts[0], 1.0);
    assert_eq!(counts[4 * 4 * 4 - 1], 1.0);
    assert_eq!(g.bounds.0.to_vec().unwrap(), vec![0.0; 3]);
    assert_eq!(g.bounds.1.to_vec().unwrap(), vec![1.0; 3]);

    let lo = t(f, &[-1.0; 3], &[3]);
    let hi = t(f, &[1.0; 3], &[3]);
    let g = coords_to_voxel_grid(&coords, [2, 2, 2], &t(f, &[1.0, 1.0], &[2, 1]), Some((&lo, &hi)), None).unwrap();
    // Both points sit in the upper octant.
    assert_eq!(g.counts.to_vec().unwrap()[7], 2.0);
}

#[test]
fn voxel_degenerate_axis_maps_to_zero() {
    let f = host();
    let coords = t(f, &[0.0, 0.5, 2.0, 1.0, 0.5, 2.0], &[2, 3]);
    let g = coords_to_voxel_grid(&coords, [2, 3, 3], &t(f, &[1.0, 1.0], &[2, 1]), None, None).unwrap();
    let counts = g.counts.to_vec().unwrap();
    // (0,0,0) and (1,0,0).
    assert_eq!(counts[0], 1.0);
    assert_eq!(counts[9], 1.0);
    assert_eq!(counts.iter().sum::<f64>(), 2.0);
}

#[test]
fn voxel_errors() {
    let f = host();
    let empty = f.zeros(&[0, 3], DType::Float64).unwrap();
    let feats = f.zeros(&[0, 1], DType::Float64).unwrap();
    assert!(matches!(coords_to_voxel_grid(&empty, [2, 2, 2], &feats, None, None), Err(Error::InvalidArgument(_))));
    let coords = t(f, &[0.0; 6], &[2, 3]);
    let feats = t(f, &[1.0; 3], &[3, 1]);
    assert!(matches!(coords_to_voxel_grid(&coords, [2, 2, 2], &feats, None, None), Err(Error::InvalidArgument(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn voxel_grid_conserves_mass_and_count(
        n in 1usize..60,
        c in 1usize..4,
        res in prop::array::uniform3(1usize..6),
        seed in any::<u64>(),
    ) {
        let f = host();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<f64> = (0..n * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let feats: Vec<f64> = (0..n * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = coords_to_voxel_grid(&t(f, &coords, &[n, 3]), res, &t(f, &feats, &[n, c]), None, None).unwrap();
        let grid = g.features.to_vec().unwrap();
        let counts = g.counts.to_vec().unwrap();
        for ch in 0..c {
            let total: f64 = grid.iter().skip(ch).step_by(c).sum();
            let expect: f64 = feats.iter().skip(ch).step_by(c).sum();
            prop_assert!((total - expect).abs() <= 1e-6);
        }
        prop_assert!((counts.iter().sum::<f64>() - n as f64).abs() <= 1e-6);
        // Features vanish where there are no points.
        for (v, k) in counts.iter().enumerate() {
            if *k == 0.0 {
                prop_assert!(grid[v * c..(v + 1) * c].iter().all(|x| *x == 0.0));
            }
        }
    }
}

//! Cuboid signed distances and voxel-grid scattering.

use templar::handler::get_framework;
use templar::{BackendRef, Error, Reduction, Result, Tensor};

fn bad(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

/// Signed distance from each query to each cuboid.
///
/// `ext_mats` is `[M, 3, 4]`, mapping world points into each cuboid's local
/// frame, `dims` is `[M, 3]` full edge lengths and `queries` is `[..., 3]`.
/// Returns `[..., M]`: negative inside, zero on the surface, Euclidean
/// distance outside.
pub fn cuboid_signed_distances(
    ext_mats: &Tensor,
    dims: &Tensor,
    queries: &Tensor,
    f: Option<BackendRef>,
) -> Result<Tensor> {
    let f = get_framework(&[ext_mats, dims, queries], f)?;
    let m = match ext_mats.shape().dims() {
        [m, 3, 4] => *m,
        _ => return Err(bad(format!("ext_mats must be [M, 3, 4], got {}", ext_mats.shape()))),
    };
    if dims.shape().dims() != [m, 3] {
        return Err(bad(format!("dims must be [{m}, 3], got {}", dims.shape())));
    }
    let qd = queries.shape().dims();
    if qd.last() != Some(&3) {
        return Err(bad(format!("queries must be [..., 3], got {}", queries.shape())));
    }
    let lead = &qd[..qd.len() - 1];

    let rot = f.reshape(&f.slice(ext_mats, -1, 0, 3)?, &[(m * 3) as isize, 3])?;
    let trans = f.reshape(&f.slice(ext_mats, -1, 3, 4)?, &[m as isize, 3])?;
    let flat = f.reshape(queries, &[-1, 3])?;
    let local = f.matmul(&flat, &f.transpose(&rot, None)?)?;
    let mut shape: Vec<isize> = lead.iter().map(|&d| d as isize).collect();
    shape.extend([m as isize, 3]);
    let local = f.add(&f.reshape(&local, &shape)?, &trans)?;

    let q = f.sub(&f.abs(&local)?, &f.mul(dims, 0.5)?)?;
    let pos = f.maximum(&q, 0.0)?;
    let outside = f.sqrt(&f.reduce_sum(&f.mul(&pos, &pos)?, Some(-1), false)?)?;
    let inside = f.minimum(&f.reduce_max(&q, Some(-1), false)?, 0.0)?;
    f.add(&outside, &inside)
}

/// Cuboids making up a scene.
#[derive(Debug, Clone)]
pub struct Cuboids {
    pub ext_mats: Tensor,
    pub dims: Tensor,
}

/// Minimum signed distance over all cuboids, `[..., 1]`.
pub fn scene_sdf(cuboids: &Cuboids, queries: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    let f = get_framework(&[&cuboids.ext_mats, &cuboids.dims, queries], f)?;
    let d = cuboid_signed_distances(&cuboids.ext_mats, &cuboids.dims, queries, Some(f))?;
    f.reduce_min(&d, Some(-1), true)
}

/// Output of [`coords_to_voxel_grid`].
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    /// `[rx, ry, rz, C]` summed features.
    pub features: Tensor,
    /// `[rx, ry, rz, 1]` points per voxel.
    pub counts: Tensor,
    /// Lower and upper corners, each `[3]`.
    pub bounds: (Tensor, Tensor),
}

/// Scatters points into a voxel grid of resolution `res`, summing features.
///
/// Leading axes of `coords` (`[..., 3]`) and `features` (`[..., C]`) are
/// flattened into one point set. Bounds default to the component-wise
/// extent of the points. A point on the upper bound lands in the last voxel,
/// and an axis with zero extent maps every point to index 0.
pub fn coords_to_voxel_grid(
    coords: &Tensor,
    res: [usize; 3],
    features: &Tensor,
    bounds: Option<(&Tensor, &Tensor)>,
    f: Option<BackendRef>,
) -> Result<VoxelGrid> {
    let f = get_framework(&[coords, features], f)?;
    let cd = coords.shape().dims();
    if cd.last() != Some(&3) {
        return Err(bad(format!("coords must be [..., 3], got {}", coords.shape())));
    }
    let n: usize = cd[..cd.len() - 1].iter().product();
    if n == 0 {
        return Err(bad("coords_to_voxel_grid needs at least one point".into()));
    }
    let fd = features.shape().dims();
    let c = match fd.last() {
        Some(&c) if fd[..fd.len() - 1].iter().product::<usize>() == n => c,
        _ => {
            return Err(bad(format!(
                "features {} do not pair with coords {}",
                features.shape(),
                coords.shape()
            )))
        }
    };
    if res.contains(&0) {
        return Err(bad(format!("voxel resolution must be positive, got {res:?}")));
    }

    let pts = f.reshape(coords, &[-1, 3])?;
    let feats = f.reshape(features, &[n as isize, c as isize])?;
    let (lo, hi) = match bounds {
        Some((lo, hi)) => (lo.clone(), hi.clone()),
        None => (f.reduce_min(&pts, Some(0), false)?, f.reduce_max(&pts, Some(0), false)?),
    };
    let extent = f.sub(&hi, &lo)?;
    let spread = f.greater(&extent, 0.0)?;
    let extent = f.select(&spread, &extent, 1.0)?;
    let resv = f.from_vec(res.iter().map(|&r| r as f64).collect(), &[3], pts.dtype())?;
    let scaled = f.mul(&f.div(&f.sub(&pts, &lo)?, &extent)?, &resv)?;
    let upper = f.sub(&resv, 1.0)?;
    let idx = f.minimum(&f.maximum(&f.floor(&scaled)?, 0.0)?, &upper)?;
    let idx = f.cast(&idx, "int64")?;

    let ones = f.ones(&[n, 1], feats.dtype())?;
    let grid = f.scatter_nd(&idx, &feats, &[res[0], res[1], res[2], c], Reduction::Sum)?;
    let counts = f.scatter_nd(&idx, &ones, &[res[0], res[1], res[2], 1], Reduction::Sum)?;
    Ok(VoxelGrid {
        features: grid,
        counts,
        bounds: (lo, hi),
    })
}

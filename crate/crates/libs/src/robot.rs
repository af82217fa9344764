//! Spline paths, rigid body sampling and path length.

use templar::backend::host;
use templar::handler::get_framework;
use templar::{BackendRef, DType, Error, Result, Tensor};

fn bad(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

/// Times given as `[n]` or `[n, 1]`.
fn times(t: &Tensor, what: &str) -> Result<Vec<f64>> {
    match t.shape().dims() {
        [_] | [_, 1] => t.to_vec(),
        _ => Err(bad(format!("{what} must be [n] or [n, 1], got {}", t.shape()))),
    }
}

/// Natural cubic spline basis `B` of shape `[S, A]`, so that the spline
/// through values `Y` (`[A, D]`) sampled at `query` is `B · Y`.
///
/// The interior second derivatives solve `T m = R y`; the basis is built on
/// the host backend from `inv(T) · R`.
pub fn spline_basis(anchor_times: &[f64], query: &[f64]) -> Result<Vec<Vec<f64>>> {
    let a = anchor_times.len();
    if a < 2 {
        return Err(bad(format!("a spline needs at least 2 anchors, got {a}")));
    }
    if anchor_times.iter().any(|t| !t.is_finite()) || anchor_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("anchor times must be finite and strictly increasing".into()));
    }
    let (t0, t1) = (anchor_times[0], anchor_times[a - 1]);
    if let Some(q) = query.iter().find(|&&q| !(q >= t0 && q <= t1)) {
        return Err(bad(format!("query time {q} lies outside [{t0}, {t1}]")));
    }
    let h: Vec<f64> = anchor_times.windows(2).map(|w| w[1] - w[0]).collect();

    // Second derivatives as linear maps of the anchor values: m[i] = Σ_k c[i][k] y[k].
    let mut c = vec![vec![0.0; a]; a];
    let n = a - 2;
    if n > 0 {
        let mut tri = vec![0.0; n * n];
        let mut rhs = vec![0.0; n * a];
        for r in 0..n {
            let i = r + 1;
            tri[r * n + r] = (h[i - 1] + h[i]) / 3.0;
            if r > 0 {
                tri[r * n + r - 1] = h[i - 1] / 6.0;
            }
            if r + 1 < n {
                tri[r * n + r + 1] = h[i] / 6.0;
            }
            rhs[r * a + i - 1] = 1.0 / h[i - 1];
            rhs[r * a + i] = -1.0 / h[i - 1] - 1.0 / h[i];
            rhs[r * a + i + 1] = 1.0 / h[i];
        }
        let f = host();
        let tri = f.from_vec(tri, &[n, n], DType::Float64)?;
        let rhs = f.from_vec(rhs, &[n, a], DType::Float64)?;
        let m = f.matmul(&f.inv(&tri)?, &rhs)?.to_vec()?;
        for r in 0..n {
            c[r + 1].copy_from_slice(&m[r * a..(r + 1) * a]);
        }
    }

    Ok(query
        .iter()
        .map(|&q| {
            let i = anchor_times[..a - 1]
                .iter()
                .rposition(|&t| t <= q)
                .unwrap_or(0)
                .min(a - 2);
            let hi = h[i];
            let u = (q - anchor_times[i]) / hi;
            let w = 1.0 - u;
            let cw = hi * hi / 6.0 * (w * w * w - w);
            let cu = hi * hi / 6.0 * (u * u * u - u);
            let mut row: Vec<f64> = (0..a).map(|k| cw * c[i][k] + cu * c[i + 1][k]).collect();
            row[i] += w;
            row[i + 1] += u;
            row
        })
        .collect())
}

/// Samples the natural cubic spline through `anchor_values` (`[A, D]`) at
/// `anchor_times` (`[A, 1]`) for each of `query_times` (`[S, 1]`), giving
/// `[S, D]`. Linear in `anchor_values`; the times are read on the host.
pub fn sample_spline_path(
    anchor_times: &Tensor,
    anchor_values: &Tensor,
    query_times: &Tensor,
    f: Option<BackendRef>,
) -> Result<Tensor> {
    let f = get_framework(&[anchor_values], f)?;
    let at = times(anchor_times, "anchor_times")?;
    let qt = times(query_times, "query_times")?;
    match anchor_values.shape().dims() {
        [a, _] if *a == at.len() => {}
        _ => {
            return Err(bad(format!(
                "anchor_values must be [{}, D], got {}",
                at.len(),
                anchor_values.shape()
            )))
        }
    }
    let basis = spline_basis(&at, &qt)?;
    let flat: Vec<f64> = basis.into_iter().flatten().collect();
    let b = f.from_vec(flat, &[qt.len(), at.len()], anchor_values.dtype())?;
    f.matmul(&b, anchor_values)
}

/// A rigid robot described by points in its own frame.
#[derive(Debug, Clone)]
pub struct RigidMobile {
    rel_body_points: Tensor,
}

impl RigidMobile {
    /// `rel_body_points` is `[P, 3]` with `P >= 1`.
    pub fn new(rel_body_points: Tensor) -> Result<Self> {
        match rel_body_points.shape().dims() {
            [p, 3] if *p >= 1 => Ok(RigidMobile { rel_body_points }),
            _ => Err(bad(format!(
                "body points must be [P, 3], got {}",
                rel_body_points.shape()
            ))),
        }
    }

    pub fn rel_body_points(&self) -> &Tensor {
        &self.rel_body_points
    }

    pub fn num_points(&self) -> usize {
        self.rel_body_points.shape().dims()[0]
    }

    /// World positions `R · b + t` of every body point for each pose in
    /// `inv_ext_mats` (`[..., 3, 4]`), giving `[..., P, 3]`.
    pub fn sample_body(&self, inv_ext_mats: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
        let f = get_framework(&[inv_ext_mats, &self.rel_body_points], f)?;
        let d = inv_ext_mats.shape().dims();
        if d.len() < 2 || d[d.len() - 2..] != [3, 4] {
            return Err(bad(format!("poses must be [..., 3, 4], got {}", inv_ext_mats.shape())));
        }
        let rot = f.slice(inv_ext_mats, -1, 0, 3)?;
        let t = f.slice(inv_ext_mats, -1, 3, 4)?;
        let world = f.add(&f.matmul(&rot, &f.transpose(&self.rel_body_points, None)?)?, &t)?;
        let rank = world.rank() as isize;
        let mut perm: Vec<isize> = (0..rank - 2).collect();
        perm.extend([rank - 1, rank - 2]);
        f.transpose(&world, Some(&perm))
    }
}

/// Squared per-coordinate steps are floored at this value before the root.
pub const LENGTH_FLOOR: f64 = 1e-12;

/// Total length of the trajectories in `points` (`[T, ..., 3]`, time
/// leading), summed over all trailing batch axes.
pub fn compute_length(points: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    let f = get_framework(&[points], f)?;
    let d = points.shape().dims();
    if d.len() < 2 || d[0] < 2 {
        return Err(bad(format!("compute_length needs [T >= 2, ..., 3], got {}", points.shape())));
    }
    let t = d[0];
    let start = f.slice(points, 0, 0, t - 1)?;
    let end = f.slice(points, 0, 1, t)?;
    let step = f.sub(&end, &start)?;
    let sq = f.maximum(&f.mul(&step, &step)?, LENGTH_FLOOR)?;
    let dist = f.pow(&f.reduce_sum(&sq, Some(-1), false)?, 0.5)?;
    f.reduce_sum(&dist, None, false)
}

//! Planning scene files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use templar::{BackendRef, DType, Tensor};
use templar_libs::{Cuboids, RigidMobile};

use crate::{DemoError, Result};

const ORTHO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuboidConfig {
    /// World to cuboid-local transform.
    pub ext_mat: [[f64; 4]; 3],
    /// Full edge lengths.
    pub dims: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub cuboids: Vec<CuboidConfig>,
    /// `[x, y, z, rx, ry, rz]`.
    pub start_pose: [f64; 6],
    pub goal_pose: [f64; 6],
    pub rel_body_points: Vec<[f64; 3]>,
}

impl SceneConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| DemoError::Read { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: SceneConfig = serde_json::from_str(text).map_err(|e| DemoError::Scene(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DemoError::Scene(m));
        if self.rel_body_points.is_empty() {
            return bad("rel_body_points is empty".into());
        }
        let finite = self.start_pose.iter().chain(&self.goal_pose).all(|v| v.is_finite())
            && self.rel_body_points.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return bad("poses and body points must be finite".into());
        }
        for (i, c) in self.cuboids.iter().enumerate() {
            if !c.dims.iter().all(|d| d.is_finite() && *d > 0.0) {
                return bad(format!("cuboid {i}: dims must be positive, got {:?}", c.dims));
            }
            if !c.ext_mat.iter().flatten().all(|v| v.is_finite()) {
                return bad(format!("cuboid {i}: ext_mat has non-finite entries"));
            }
            for a in 0..3 {
                for b in 0..3 {
                    let dot: f64 = (0..3).map(|k| c.ext_mat[k][a] * c.ext_mat[k][b]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    if (dot - want).abs() > ORTHO_TOL {
                        return bad(format!("cuboid {i}: rotation block is not orthonormal"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `None` for a scene without obstacles.
    pub fn cuboids(&self, f: BackendRef) -> Result<Option<Cuboids>> {
        if self.cuboids.is_empty() {
            return Ok(None);
        }
        let m = self.cuboids.len();
        let ext = self.cuboids.iter().flat_map(|c| c.ext_mat.iter().flatten().copied()).collect();
        let dims = self.cuboids.iter().flat_map(|c| c.dims).collect();
        Ok(Some(Cuboids {
            ext_mats: f.from_vec(ext, &[m, 3, 4], DType::Float64)?,
            dims: f.from_vec(dims, &[m, 3], DType::Float64)?,
        }))
    }

    pub fn robot(&self, f: BackendRef) -> Result<RigidMobile> {
        let p = self.rel_body_points.len();
        let pts = self.rel_body_points.iter().flatten().copied().collect();
        Ok(RigidMobile::new(f.from_vec(pts, &[p, 3], DType::Float64)?)?)
    }

    pub fn poses(&self, f: BackendRef) -> Result<(Tensor, Tensor)> {
        Ok((
            f.from_vec(self.start_pose.to_vec(), &[6], DType::Float64)?,
            f.from_vec(self.goal_pose.to_vec(), &[6], DType::Float64)?,
        ))
    }
}

//! Differentiable mechanics, vision, robotics and control functions.
//!
//! Everything here is written against a [`templar::BackendRef`], so the
//! same code runs on any backend and differentiates on the autodiff one.
//! Functions take a trailing `f: Option<BackendRef>`; with `None` the backend
//! is resolved through [`templar::handler`].

pub mod gym;
pub mod mech;
pub mod robot;
pub mod vision;

pub use gym::{pendulum_step, rollout, wrap_angle, PendulumState};
pub use mech::{plr_to_cart, rot_vec_pose_to_mat_pose};
pub use robot::{compute_length, sample_spline_path, spline_basis, RigidMobile};
pub use vision::{coords_to_voxel_grid, cuboid_signed_distances, scene_sdf, Cuboids, VoxelGrid};

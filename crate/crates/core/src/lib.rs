//! Deterministic camera-to-BEV geometry.
//!
//! The crate turns per-camera metric depth and patch features into
//! bird's-eye-view representations:
//!
//! - [`depth`]: metric depth image to per-patch categorical depth distribution.
//! - [`lift`]: outer-product frustum lift, pillar sum-pooling and bilinear voxel lift.
//! - [`pseudolidar`]: depth images to a single ego-frame point cloud.
//! - [`voxel`]: binary occupancy grids and their BEV reduction.
//! - [`eval`]: footprint rasterization and IoU.
//! - [`synth`]: analytic scenes with an exact depth renderer, used as ground truth.
//! - [`formats`]: the on-disk DMAP / TNSR / GRID / PLY / JSON formats.

pub mod depth;
pub mod error;
pub mod eval;
pub mod formats;
pub mod geometry;
pub mod grid;
pub mod lift;
pub mod pseudolidar;
pub mod synth;
pub mod voxel;

pub use error::{Error, Result};

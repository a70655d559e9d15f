//! Lifting per-patch image features into 3D and pooling them onto the BEV plane.
//!
//! Two routes are provided:
//!
//! - [`build_frustum`] + [`splat_pool`]: every patch feature is weighted by the
//!   patch's depth distribution at each bin center depth, and the resulting
//!   frustum cells are sum-pooled into the BEV pillar that contains them.
//! - [`bilinear_voxel_lift`]: every voxel center is projected into every
//!   camera and the patch-feature grid is bilinearly sampled there, with
//!   patch centers as sample nodes.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::depth::{bin_center_depth, BinSpec, DepthDistribution};
use crate::geometry::{project_point, unproject_pixel, CameraIntrinsics, CameraRig, RigidPose};
use crate::grid::VoxelGridSpec;
use crate::{Error, Result};

/// Per-patch activations laid out `[channel][patch_row][patch_col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    patch_rows: usize,
    patch_cols: usize,
    values: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, patch_rows: usize, patch_cols: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != channels * patch_rows * patch_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{patch_rows}x{patch_cols} feature map",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("feature map has non-finite values".into()));
        }
        Ok(Self {
            channels,
            patch_rows,
            patch_cols,
            values,
        })
    }

    pub fn filled(channels: usize, patch_rows: usize, patch_cols: usize, value: f32) -> Result<Self> {
        Self::new(channels, patch_rows, patch_cols, vec![value; channels * patch_rows * patch_cols])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn patch_rows(&self) -> usize {
        self.patch_rows
    }

    pub fn patch_cols(&self) -> usize {
        self.patch_cols
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.channels, self.patch_rows, self.patch_cols]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.values[(channel * self.patch_rows + row) * self.patch_cols + col]
    }
}

/// Depth-weighted features on a camera frustum.
///
/// `values` is `[channel][bin][patch_row][patch_col]`; `points` holds the
/// ego-frame position of each `[bin][patch_row][patch_col]` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FrustumVolume {
    channels: usize,
    n_bins: usize,
    patch_rows: usize,
    patch_cols: usize,
    values: Vec<f32>,
    points: Vec<Vector3<f64>>,
}

impl FrustumVolume {
    /// Assembles a frustum from raw parts. Mostly useful for tests and tools
    /// that produce frusta without a camera.
    pub fn from_parts(
        channels: usize,
        n_bins: usize,
        patch_rows: usize,
        patch_cols: usize,
        values: Vec<f32>,
        points: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        let cells = n_bins * patch_rows * patch_cols;
        if points.len() != cells || values.len() != channels * cells {
            return Err(Error::ShapeMismatch(format!(
                "frustum {channels}x{n_bins}x{patch_rows}x{patch_cols} got {} values and {} points",
                values.len(),
                points.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidParameter("frustum has non-finite entries".into()));
        }
        Ok(Self {
            channels,
            n_bins,
            patch_rows,
            patch_cols,
            values,
            points,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.channels, self.n_bins, self.patch_rows, self.patch_cols]
    }

    /// Number of frustum cells (bins x patch rows x patch cols).
    pub fn cells(&self) -> usize {
        self.points.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    #[inline]
    pub fn value(&self, channel: usize, cell: usize) -> f32 {
        self.values[channel * self.points.len() + cell]
    }
}

/// Intrinsics matching a `patch_rows x patch_cols` grid of `patch`-pixel patches.
fn patch_intrinsics(intr: &CameraIntrinsics, patch: usize, patch_rows: usize, patch_cols: usize) -> CameraIntrinsics {
    intr.rescaled(patch_cols * patch, patch_rows * patch)
}

pub fn build_frustum(
    feat: &FeatureMap,
    dist: &DepthDistribution,
    intr: &CameraIntrinsics,
    pose: &RigidPose,
    patch: usize,
    bins: &BinSpec,
) -> Result<FrustumVolume> {
    if feat.patch_rows != dist.patch_rows() || feat.patch_cols != dist.patch_cols() {
        return Err(Error::ShapeMismatch(format!(
            "feature map is {}x{} patches but depth distribution is {}x{}",
            feat.patch_rows,
            feat.patch_cols,
            dist.patch_rows(),
            dist.patch_cols()
        )));
    }
    if dist.n_bins() != bins.n_bins {
        return Err(Error::ShapeMismatch(format!(
            "depth distribution has {} bins, bin spec has {}",
            dist.n_bins(),
            bins.n_bins
        )));
    }
    if patch == 0 {
        return Err(Error::InvalidParameter("patch size must be positive".into()));
    }
    let (rows, cols, n_bins, channels) = (feat.patch_rows, feat.patch_cols, bins.n_bins, feat.channels);
    let intr = patch_intrinsics(intr, patch, rows, cols);
    let half = patch as f64 / 2.0;

    let mut points = Vec::with_capacity(n_bins * rows * cols);
    for d in 0..n_bins {
        let depth = bin_center_depth(bins, d)?;
        for h in 0..rows {
            let v = (h * patch) as f64 + half;
            for w in 0..cols {
                let u = (w * patch) as f64 + half;
                points.push(pose.apply(&unproject_pixel(&intr, u, v, depth)?));
            }
        }
    }

    let plane = rows * cols;
    let mut values = Vec::with_capacity(channels * n_bins * plane);
    for c in 0..channels {
        let f = &feat.values[c * plane..(c + 1) * plane];
        for d in 0..n_bins {
            let p = &dist.values()[d * plane..(d + 1) * plane];
            values.extend(f.iter().zip(p).map(|(a, b)| a * b));
        }
    }
    FrustumVolume::from_parts(channels, n_bins, rows, cols, values, points)
}

/// BEV features laid out `[channel][x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BevFeatureGrid {
    channels: usize,
    x_cells: usize,
    y_cells: usize,
    values: Vec<f32>,
}

impl BevFeatureGrid {
    pub fn new(channels: usize, x_cells: usize, y_cells: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != channels * x_cells * y_cells {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{x_cells}x{y_cells} BEV grid",
                values.len()
            )));
        }
        Ok(Self {
            channels,
            x_cells,
            y_cells,
            values,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.channels, self.x_cells, self.y_cells]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, channel: usize, x: usize, y: usize) -> f32 {
        self.values[(channel * self.x_cells + x) * self.y_cells + y]
    }

    pub fn channel_sum(&self, channel: usize) -> f64 {
        let n = self.x_cells * self.y_cells;
        self.values[channel * n..(channel + 1) * n].iter().map(|&v| v as f64).sum()
    }
}

/// Sum-pools every frustum cell into the BEV pillar containing its (x, y).
///
/// Cells outside the grid's x/y extent are dropped; z is ignored. All frusta
/// must carry `channels` channels. Accumulation runs in f64 in a fixed order
/// (frustum, then bin, row, column) so the result is bitwise reproducible.
pub fn splat_pool(frusta: &[FrustumVolume], channels: usize, grid: &VoxelGridSpec) -> Result<BevFeatureGrid> {
    for f in frusta {
        if f.channels != channels {
            return Err(Error::ChannelMismatch {
                expected: channels,
                got: f.channels,
            });
        }
    }
    let (nx, ny) = (grid.x.cells, grid.y.cells);
    let plane = nx * ny;
    let mut acc = vec![0f64; channels * plane];
    for f in frusta {
        let cells = f.cells();
        for (cell, p) in f.points.iter().enumerate() {
            let Some((i, j)) = grid.bev_index(p.x, p.y) else {
                continue;
            };
            for c in 0..channels {
                acc[c * plane + i * ny + j] += f.values[c * cells + cell] as f64;
            }
        }
    }
    BevFeatureGrid::new(channels, nx, ny, acc.into_iter().map(|v| v as f32).collect())
}

/// 3D features laid out `[channel][x][y][z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelFeatures {
    channels: usize,
    dims: [usize; 3],
    values: Vec<f32>,
}

impl VoxelFeatures {
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `[channels, x, y, z]`
    pub fn dims(&self) -> [usize; 4] {
        [self.channels, self.dims[0], self.dims[1], self.dims[2]]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, channel: usize, x: usize, y: usize, z: usize) -> f32 {
        let [nx, ny, nz] = self.dims;
        self.values[((channel * nx + x) * ny + y) * nz + z]
    }
}

/// The four nodes and weights for bilinear sampling at patch-grid coordinate
/// `(gx, gy)`, where integer coordinates are patch centers.
///
/// Coordinates are clamped to the node hull, so samples between the image
/// border and the outermost patch centers replicate the border patches.
/// Entries are `(col, row, weight)`.
pub fn bilinear_weights(gx: f64, gy: f64, cols: usize, rows: usize) -> [(usize, usize, f64); 4] {
    let gx = gx.clamp(0.0, (cols - 1) as f64);
    let gy = gy.clamp(0.0, (rows - 1) as f64);
    let x0 = gx.floor() as usize;
    let y0 = gy.floor() as usize;
    let x1 = (x0 + 1).min(cols - 1);
    let y1 = (y0 + 1).min(rows - 1);
    let tx = gx - x0 as f64;
    let ty = gy - y0 as f64;
    [
        (x0, y0, (1.0 - tx) * (1.0 - ty)),
        (x1, y0, tx * (1.0 - ty)),
        (x0, y1, (1.0 - tx) * ty),
        (x1, y1, tx * ty),
    ]
}

/// Adds the bilinear sample of every channel at `(gx, gy)` into `out`.
pub fn sample_bilinear(feat: &FeatureMap, gx: f64, gy: f64, out: &mut [f64]) {
    let weights = bilinear_weights(gx, gy, feat.patch_cols, feat.patch_rows);
    for (c, slot) in out.iter_mut().enumerate().take(feat.channels) {
        *slot += weights
            .iter()
            .map(|&(col, row, w)| w * feat.get(c, row, col) as f64)
            .sum::<f64>();
    }
}

pub fn bilinear_voxel_lift(
    feats: &[FeatureMap],
    rig: &CameraRig,
    patch: usize,
    grid: &VoxelGridSpec,
) -> Result<VoxelFeatures> {
    if feats.len() != rig.len() {
        return Err(Error::RigMismatch {
            cameras: rig.len(),
            inputs: feats.len(),
        });
    }
    if patch == 0 {
        return Err(Error::InvalidParameter("patch size must be positive".into()));
    }
    let channels = feats[0].channels;
    for f in feats {
        if f.channels != channels {
            return Err(Error::ChannelMismatch {
                expected: channels,
                got: f.channels,
            });
        }
    }

    // Ego-to-camera poses and the intrinsics at feature-grid resolution.
    let cameras: Vec<(CameraIntrinsics, RigidPose)> = rig
        .cameras()
        .iter()
        .zip(feats)
        .map(|((intr, pose), f)| (patch_intrinsics(intr, patch, f.patch_rows, f.patch_cols), pose.inverse()))
        .collect();

    let [nx, ny, nz] = grid.dims();
    let voxels = nx * ny * nz;
    let per_voxel: Vec<Vec<f64>> = (0..voxels)
        .into_par_iter()
        .map(|idx| {
            let (x, y, z) = (idx / (ny * nz), (idx / nz) % ny, idx % nz);
            let center = Vector3::new(grid.x.center(x), grid.y.center(y), grid.z.center(z));
            let mut acc = vec![0f64; channels];
            let mut hits = 0usize;
            for ((intr, to_cam), feat) in cameras.iter().zip(feats) {
                let Ok(q) = project_point(intr, &to_cam.apply(&center)) else {
                    continue;
                };
                if !(q.u >= 0.0 && q.u < intr.width as f64 && q.v >= 0.0 && q.v < intr.height as f64) {
                    continue;
                }
                let gx = q.u / patch as f64 - 0.5;
                let gy = q.v / patch as f64 - 0.5;
                sample_bilinear(feat, gx, gy, &mut acc);
                hits += 1;
            }
            if hits > 1 {
                acc.iter_mut().for_each(|v| *v /= hits as f64);
            }
            acc
        })
        .collect();

    let mut values = vec![0f32; channels * voxels];
    for (idx, acc) in per_voxel.iter().enumerate() {
        for (c, &v) in acc.iter().enumerate() {
            values[c * voxels + idx] = v as f32;
        }
    }
    Ok(VoxelFeatures {
        channels,
        dims: [nx, ny, nz],
        values,
    })
}

//! Analytic scenes and an exact depth renderer.
//!
//! A scene is an optional ground plane (ego z = 0) plus yaw-rotated boxes
//! standing on it, observed by a camera rig. Rays are cast through pixel
//! centers and intersected analytically, so rendered depth is exact up to
//! floating-point rounding and can be used as ground truth for every other
//! stage.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::depth::DepthImage;
use crate::eval::{rasterize_boxes, VehicleBox};
use crate::geometry::{pixel_center, CameraIntrinsics, CameraRig, RigidPose};
use crate::grid::VoxelGridSpec;
use crate::pseudolidar::RgbImage;
use crate::voxel::BevMask;
use crate::{Error, Result};

/// Retries per box before [`generate_scene`] gives up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

/// A vehicle footprint extruded between two ego heights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneBox {
    pub footprint: VehicleBox,
    pub z_min: f64,
    pub z_max: f64,
}

impl SceneBox {
    pub fn new(footprint: VehicleBox, z_min: f64, z_max: f64) -> Result<Self> {
        let b = Self {
            footprint,
            z_min,
            z_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        self.footprint.validate()?;
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.z_max > self.z_min) {
            return Err(Error::InvalidParameter(format!(
                "box height range [{}, {}] is empty",
                self.z_min, self.z_max
            )));
        }
        Ok(())
    }

    /// Entry distance of the ray `origin + t * dir` (ego frame) into the
    /// box, or `None` on a miss. If the origin is inside the box the exit
    /// distance is returned instead.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let b = &self.footprint;
        let (s, c) = b.yaw.sin_cos();
        let dx = origin.x - b.center[0];
        let dy = origin.y - b.center[1];
        let o = [c * dx + s * dy, -s * dx + c * dy, origin.z];
        let d = [c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z];
        let lo = [-b.length / 2.0, -b.width / 2.0, self.z_min];
        let hi = [b.length / 2.0, b.width / 2.0, self.z_max];

        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for k in 0..3 {
            if d[k] == 0.0 {
                if o[k] < lo[k] || o[k] > hi[k] {
                    return None;
                }
                continue;
            }
            let t0 = (lo[k] - o[k]) / d[k];
            let t1 = (hi[k] - o[k]) / d[k];
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
        }
        if t_near > t_far || t_far <= 0.0 {
            return None;
        }
        Some(if t_near > 0.0 { t_near } else { t_far })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub ground_plane: bool,
    pub boxes: Vec<SceneBox>,
    pub rig: CameraRig,
    pub seed: u64,
}

impl SceneSpec {
    pub fn footprints(&self) -> Vec<VehicleBox> {
        self.boxes.iter().map(|b| b.footprint).collect()
    }
}

/// What a rendered pixel's ray hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hit {
    Box(usize),
    Ground,
}

/// Nearest hit of an ego-frame ray. Ties go to the lowest box index, then
/// to the ground plane.
pub fn cast_ray(scene: &SceneSpec, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, Hit)> {
    let mut best: Option<(f64, Hit)> = None;
    for (i, b) in scene.boxes.iter().enumerate() {
        if let Some(t) = b.intersect(origin, dir) {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, Hit::Box(i)));
            }
        }
    }
    if scene.ground_plane && dir.z != 0.0 {
        let t = -origin.z / dir.z;
        if t > 0.0 && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, Hit::Ground));
        }
    }
    best
}

fn camera_at(scene: &SceneSpec, cam_index: usize) -> Result<(CameraIntrinsics, RigidPose)> {
    scene.rig.camera(cam_index).copied()
}

/// Renders plane depth and the hit attribution for every pixel.
pub fn render_hits(
    scene: &SceneSpec,
    cam_index: usize,
    out_dims: (usize, usize),
) -> Result<(DepthImage, Vec<Option<Hit>>)> {
    let (height, width) = out_dims;
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter("render size must be at least 1x1".into()));
    }
    let (intr, pose) = camera_at(scene, cam_index)?;
    let intr = intr.rescaled(width, height);
    let origin = *pose.translation();

    let rows: Vec<Vec<Option<(f64, Hit)>>> = (0..height)
        .into_par_iter()
        .map(|row| {
            let v = pixel_center(row);
            (0..width)
                .map(|col| {
                    // Unit camera-frame z, so the ray parameter is plane depth.
                    let dir_cam = Vector3::new((pixel_center(col) - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
                    cast_ray(scene, &origin, &pose.apply_direction(&dir_cam))
                })
                .collect()
        })
        .collect();

    let mut depth = Vec::with_capacity(height * width);
    let mut hits = Vec::with_capacity(height * width);
    for hit in rows.into_iter().flatten() {
        depth.push(hit.map_or(0.0, |(t, _)| t));
        hits.push(hit.map(|(_, h)| h));
    }
    Ok((DepthImage::new(height, width, depth)?, hits))
}

pub fn render_depth(scene: &SceneSpec, cam_index: usize, out_dims: (usize, usize)) -> Result<DepthImage> {
    render_hits(scene, cam_index, out_dims).map(|(d, _)| d)
}

/// Flat color of box `index`; the ground is mid gray and empty sky black.
pub fn box_color(index: usize) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 8] = [
        [230, 25, 75],
        [60, 180, 75],
        [255, 225, 25],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
        [240, 50, 230],
    ];
    PALETTE[index % PALETTE.len()]
}

pub const GROUND_COLOR: [u8; 3] = [128, 128, 128];

/// Flat-shaded color image matching [`render_depth`] pixel for pixel.
pub fn render_rgb(scene: &SceneSpec, cam_index: usize, out_dims: (usize, usize)) -> Result<RgbImage> {
    let (_, hits) = render_hits(scene, cam_index, out_dims)?;
    let pixels = hits
        .iter()
        .map(|h| match h {
            Some(Hit::Box(i)) => box_color(*i),
            Some(Hit::Ground) => GROUND_COLOR,
            None => [0, 0, 0],
        })
        .collect();
    RgbImage::new(out_dims.0, out_dims.1, pixels)
}

/// Six level cameras at 60 degree yaw spacing, 1.6 m above the ground,
/// 1600x900 pixels with a ~65 degree horizontal field of view.
pub fn surround_rig() -> CameraRig {
    let intr = CameraIntrinsics {
        fx: 1260.0,
        fy: 1260.0,
        cx: 800.0,
        cy: 450.0,
        width: 1600,
        height: 900,
    };
    let cameras = (0..6)
        .map(|k| {
            let yaw = k as f64 * TAU / 6.0;
            let position = Vector3::new(yaw.cos(), yaw.sin(), 1.6);
            (intr, RigidPose::looking_along(yaw, 0.0, position))
        })
        .collect();
    CameraRig::new(cameras).expect("surround rig is valid")
}

/// Region around the ego origin kept free of boxes so that no camera starts inside one.
pub fn ego_keepout() -> VehicleBox {
    VehicleBox {
        center: [0.0, 0.0],
        length: 6.0,
        width: 4.0,
        yaw: 0.0,
    }
}

/// Random car-like boxes on a ground plane around a [`surround_rig`].
///
/// Box centers are uniform in `[-extent, extent]^2`; footprints never
/// overlap each other or the ego keep-out region.
pub fn generate_scene(seed: u64, n_boxes: usize, extent: f64) -> Result<SceneSpec> {
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::InvalidParameter(format!("extent must be positive, got {extent}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keepout = ego_keepout();
    let mut boxes: Vec<SceneBox> = Vec::with_capacity(n_boxes);
    for index in 0..n_boxes {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let footprint = VehicleBox {
                center: [rng.random_range(-extent..=extent), rng.random_range(-extent..=extent)],
                length: rng.random_range(3.5..=5.5),
                width: rng.random_range(1.6..=2.2),
                yaw: rng.random_range(0.0..TAU),
            };
            let z_max = rng.random_range(1.4..=2.0);
            if footprint.overlaps(&keepout) || boxes.iter().any(|b| b.footprint.overlaps(&footprint)) {
                continue;
            }
            placed = Some(SceneBox {
                footprint,
                z_min: 0.0,
                z_max,
            });
            break;
        }
        boxes.push(placed.ok_or(Error::PlacementFailure {
            index,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?);
    }
    Ok(SceneSpec {
        ground_plane: true,
        boxes,
        rig: surround_rig(),
        seed,
    })
}

pub fn scene_truth_mask(scene: &SceneSpec, spec: &VoxelGridSpec) -> BevMask {
    rasterize_boxes(&scene.footprints(), spec)
}

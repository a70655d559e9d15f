//! Pinhole cameras, rigid poses and the projection primitives.
//!
//! Conventions used throughout the crate:
//!
//! - camera frame: +x right, +y down, +z forward;
//! - ego frame: +x forward, +y left, +z up;
//! - integer pixel `(col, row)` has its continuous center at `(col + 0.5, row + 0.5)`;
//! - a depth value is the camera-frame z coordinate (plane depth), not ray length.
//!
//! No lens distortion is modelled.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// Tolerance for the orthonormality and determinant checks on [`RigidPose`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Continuous coordinate of the center of integer pixel `index`.
#[inline]
pub fn pixel_center(index: usize) -> f64 {
    index as f64 + 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive and finite, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidParameter("principal point must be finite".into()));
        }
        if self.width < 1 || self.height < 1 {
            return Err(Error::InvalidParameter(format!(
                "image size must be at least 1x1, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Intrinsics for the same camera sampled at `width` x `height` pixels.
    ///
    /// `fx` and `cx` scale by `width / self.width`, `fy` and `cy` by
    /// `height / self.height`. Returns `self` unchanged when the sizes agree.
    pub fn rescaled(&self, width: usize, height: usize) -> Self {
        if width == self.width as usize && height == self.height as usize {
            return *self;
        }
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width: width as u32,
            height: height as u32,
        }
    }
}

/// Camera-to-ego rigid transform: `p_ego = rotation * p_cam + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("pose has non-finite entries".into()));
        }
        let gram = rotation.transpose() * rotation;
        let off = (gram - Matrix3::identity()).abs().max();
        if off > ROTATION_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "rotation is not orthonormal (max |RᵀR - I| = {off:e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Rotates a direction without translating it.
    #[inline]
    pub fn apply_direction(&self, d: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * d
    }

    /// Pose of a level camera at `position` whose optical axis points along
    /// ego-frame heading `yaw` (radians, counter-clockwise from +x), tilted
    /// down by `pitch` radians.
    pub fn looking_along(yaw: f64, pitch: f64, position: Vector3<f64>) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        // Camera axes expressed in the ego frame.
        let forward = Vector3::new(cy * cp, sy * cp, -sp);
        let right = Vector3::new(sy, -cy, 0.0);
        let down = forward.cross(&right);
        Self {
            rotation: Matrix3::from_columns(&[right, down, forward]),
            translation: position,
        }
    }
}

/// Rotation by `angle` radians about +z.
pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// An ordered, non-empty list of calibrated cameras.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    cameras: Vec<(CameraIntrinsics, RigidPose)>,
}

impl CameraRig {
    pub fn new(cameras: Vec<(CameraIntrinsics, RigidPose)>) -> Result<Self> {
        if cameras.is_empty() {
            return Err(Error::InvalidParameter("camera rig needs at least one camera".into()));
        }
        for (intr, _) in &cameras {
            intr.validate()?;
        }
        Ok(Self { cameras })
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn camera(&self, index: usize) -> Result<&(CameraIntrinsics, RigidPose)> {
        self.cameras.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.cameras.len(),
        })
    }

    pub fn cameras(&self) -> &[(CameraIntrinsics, RigidPose)] {
        &self.cameras
    }
}

/// Camera-frame point at plane depth `z` behind continuous pixel `(u, v)`.
pub fn unproject_pixel(intr: &CameraIntrinsics, u: f64, v: f64, z: f64) -> Result<Vector3<f64>> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::NonPositiveDepth(z));
    }
    Ok(Vector3::new(
        (u - intr.cx) * z / intr.fx,
        (v - intr.cy) * z / intr.fy,
        z,
    ))
}

/// A projected point: continuous pixel coordinates plus camera-frame depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Forward pinhole projection. The result may lie outside the image.
pub fn project_point(intr: &CameraIntrinsics, p: &Vector3<f64>) -> Result<ImagePoint> {
    if p.z.is_nan() || p.z <= 0.0 {
        return Err(Error::NonPositiveDepth(p.z));
    }
    Ok(ImagePoint {
        u: intr.fx * p.x / p.z + intr.cx,
        v: intr.fy * p.y / p.z + intr.cy,
        depth: p.z,
    })
}

pub fn transform_points(pose: &RigidPose, pts: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    pts.iter().map(|p| pose.apply(p)).collect()
}

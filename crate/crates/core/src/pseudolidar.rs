//! Pseudo-LiDAR: unprojecting dense metric depth into one ego-frame point cloud.

use nalgebra::Vector3;

use crate::depth::DepthImage;
use crate::geometry::{pixel_center, unproject_pixel, CameraIntrinsics, RigidPose};
use crate::{Error, Result};

/// Row-major RGB image used to decorate points.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {height}x{width} RGB image",
                pixels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// Ego-frame points with their source camera and optional colors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    colors: Option<Vec<[u8; 3]>>,
    camera_ids: Vec<u8>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>, colors: Option<Vec<[u8; 3]>>, camera_ids: Vec<u8>) -> Result<Self> {
        if camera_ids.len() != points.len() {
            return Err(Error::InconsistentAttributes(format!(
                "{} camera ids for {} points",
                camera_ids.len(),
                points.len()
            )));
        }
        if let Some(c) = &colors {
            if c.len() != points.len() {
                return Err(Error::InconsistentAttributes(format!(
                    "{} colors for {} points",
                    c.len(),
                    points.len()
                )));
            }
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidParameter("point cloud has non-finite coordinates".into()));
        }
        Ok(Self {
            points,
            colors,
            camera_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn camera_ids(&self) -> &[u8] {
        &self.camera_ids
    }

    pub fn has_colors(&self) -> bool {
        self.colors.is_some()
    }

    /// Same cloud with every point attributed to `camera`.
    pub fn with_camera_id(mut self, camera: u8) -> Self {
        self.camera_ids.iter_mut().for_each(|c| *c = camera);
        self
    }
}

/// Unprojects every valid pixel at its center and moves it into the ego frame.
///
/// When the depth image is smaller or larger than the calibrated image, the
/// intrinsics are rescaled to the depth resolution first. Points come out in
/// row-major scan order, all attributed to camera 0.
pub fn depth_to_cloud(
    depth: &DepthImage,
    intr: &CameraIntrinsics,
    pose: &RigidPose,
    rgb: Option<&RgbImage>,
) -> Result<PointCloud> {
    if let Some(img) = rgb {
        if img.height != depth.height() || img.width != depth.width() {
            return Err(Error::DimensionMismatch(format!(
                "RGB image is {}x{} but depth is {}x{}",
                img.height,
                img.width,
                depth.height(),
                depth.width()
            )));
        }
    }
    let intr = intr.rescaled(depth.width(), depth.height());
    let n = depth.valid_count();
    let mut points = Vec::with_capacity(n);
    let mut colors = rgb.map(|_| Vec::with_capacity(n));

    for row in 0..depth.height() {
        for col in 0..depth.width() {
            let z = depth.get(row, col);
            if z <= 0.0 {
                continue;
            }
            let p = unproject_pixel(&intr, pixel_center(col), pixel_center(row), z)?;
            points.push(pose.apply(&p));
            if let (Some(out), Some(img)) = (colors.as_mut(), rgb) {
                out.push(img.pixels[row * img.width + col]);
            }
        }
    }
    let ids = vec![0; points.len()];
    PointCloud::new(points, colors, ids)
}

/// Concatenates per-camera clouds; cloud `i` gets camera id `i`.
pub fn merge_clouds(clouds: &[PointCloud]) -> Result<PointCloud> {
    if clouds.len() > u8::MAX as usize + 1 {
        return Err(Error::InvalidParameter(format!(
            "at most 256 cameras can be merged, got {}",
            clouds.len()
        )));
    }
    let colored = clouds.first().is_some_and(PointCloud::has_colors);
    if clouds.iter().any(|c| c.has_colors() != colored) {
        return Err(Error::InconsistentAttributes(
            "either all clouds carry colors or none do".into(),
        ));
    }
    let total = clouds.iter().map(PointCloud::len).sum();
    let mut points = Vec::with_capacity(total);
    let mut ids = Vec::with_capacity(total);
    let mut colors = colored.then(|| Vec::with_capacity(total));
    for (i, cloud) in clouds.iter().enumerate() {
        points.extend_from_slice(&cloud.points);
        ids.extend(std::iter::repeat_n(i as u8, cloud.len()));
        if let (Some(out), Some(c)) = (colors.as_mut(), cloud.colors.as_ref()) {
            out.extend_from_slice(c);
        }
    }
    PointCloud::new(points, colors, ids)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudStats {
    pub count: usize,
    /// `None` for an empty cloud.
    pub bbox: Option<Aabb>,
    /// Point count per camera id, indexed by id up to the largest present.
    pub per_camera: Vec<usize>,
}

pub fn cloud_stats(cloud: &PointCloud) -> CloudStats {
    let bbox = cloud.points.split_first().map(|(first, rest)| {
        rest.iter().fold(Aabb { min: *first, max: *first }, |b, p| Aabb {
            min: b.min.inf(p),
            max: b.max.sup(p),
        })
    });
    let mut per_camera = Vec::new();
    for &id in &cloud.camera_ids {
        let id = id as usize;
        if per_camera.len() <= id {
            per_camera.resize(id + 1, 0);
        }
        per_camera[id] += 1;
    }
    CloudStats {
        count: cloud.len(),
        bbox,
        per_camera,
    }
}

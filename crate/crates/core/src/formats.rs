//! On-disk formats.
//!
//! All binary formats are little-endian with a 4-byte magic and a `u32`
//! version (currently 1):
//!
//! ```text
//! DMAP  "DMAP" u32 version  u32 H  u32 W            H*W f32 (row-major)
//! TNSR  "TNSR" u32 version  u32 ndim  ndim*u32 dims  prod(dims) f32 (last dim fastest)
//! GRID  "GRID" u32 version  u32 ndim  ndim*u32 dims  prod(dims) u8 in {0, 1}
//! ```
//!
//! Point clouds are binary little-endian PLY with `float x, y, z`, optional
//! `uchar red, green, blue` and a `uchar cam` source-camera index.
//!
//! Scenes and manifests are strict UTF-8 JSON; unknown fields are rejected.
//!
//! Depth and point coordinates are held as `f64` in memory and stored as
//! `f32`, so encoding is exact only for values that are already
//! `f32`-representable (anything decoded from a file is).

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::depth::{DepthDistribution, DepthImage};
use crate::eval::{ScoreMap, VehicleBox};
use crate::geometry::{CameraIntrinsics, CameraRig, RigidPose};
use crate::lift::{BevFeatureGrid, FeatureMap, VoxelFeatures};
use crate::pseudolidar::PointCloud;
use crate::synth::{SceneBox, SceneSpec};
use crate::voxel::{BevMask, OccupancyGrid};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const DMAP_MAGIC: &[u8; 4] = b"DMAP";
pub const TNSR_MAGIC: &[u8; 4] = b"TNSR";
pub const GRID_MAGIC: &[u8; 4] = b"GRID";

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::format(
                self.bytes.len(),
                format!("unexpected end of data reading {what}"),
            )),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != magic {
            return Err(Error::format(0, format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            )));
        }
        let at = self.pos;
        let version = self.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::format(at, format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn dims(&mut self) -> Result<Vec<usize>> {
        let at = self.pos;
        let ndim = self.u32("ndim")? as usize;
        if ndim == 0 || ndim > 8 {
            return Err(Error::format(at, format!("unsupported ndim {ndim}")));
        }
        (0..ndim).map(|_| self.u32("dims").map(|d| d as usize)).collect()
    }

    fn element_count(&self, dims: &[usize], elem_size: usize) -> Result<usize> {
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|n| n.checked_mul(elem_size).is_some())
            .ok_or_else(|| Error::format(self.pos, "dimensions overflow"))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(
                self.pos,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn f32_values(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub fn encode_dmap(img: &DepthImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * img.values().len());
    out.extend_from_slice(DMAP_MAGIC);
    push_u32(&mut out, FORMAT_VERSION as usize);
    push_u32(&mut out, img.height());
    push_u32(&mut out, img.width());
    for &v in img.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_dmap(bytes: &[u8]) -> Result<DepthImage> {
    let mut r = Reader::new(bytes);
    r.header(DMAP_MAGIC)?;
    let height = r.u32("height")? as usize;
    let width = r.u32("width")? as usize;
    let n = r.element_count(&[height, width], 4)?;
    let start = r.pos;
    let values: Vec<f64> = f32_values(r.take(4 * n, "depth values")?)
        .into_iter()
        .map(f64::from)
        .collect();
    r.finish()?;
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::format(start + 4 * i, format!("invalid depth {}", values[i])));
    }
    DepthImage::new(height, width, values)
}

/// A dense `f32` tensor as stored in TNSR files.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if dims.iter().product::<usize>() != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for dims {dims:?}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    fn expect_rank(&self, rank: usize, what: &str) -> Result<()> {
        if self.dims.len() != rank {
            return Err(Error::ShapeMismatch(format!(
                "{what} needs a rank-{rank} tensor, got dims {:?}",
                self.dims
            )));
        }
        Ok(())
    }
}

pub fn encode_tnsr(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * t.dims.len() + 4 * t.data.len());
    out.extend_from_slice(TNSR_MAGIC);
    push_u32(&mut out, FORMAT_VERSION as usize);
    push_u32(&mut out, t.dims.len());
    for &d in &t.dims {
        push_u32(&mut out, d);
    }
    for &v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_tnsr(bytes: &[u8]) -> Result<Tensor> {
    let mut r = Reader::new(bytes);
    r.header(TNSR_MAGIC)?;
    let dims = r.dims()?;
    let n = r.element_count(&dims, 4)?;
    let data = f32_values(r.take(4 * n, "tensor values")?);
    r.finish()?;
    Ok(Tensor { dims, data })
}

/// A dense binary grid as stored in GRID files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub dims: Vec<usize>,
    pub data: Vec<bool>,
}

pub fn encode_grid(g: &Grid) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * g.dims.len() + g.data.len());
    out.extend_from_slice(GRID_MAGIC);
    push_u32(&mut out, FORMAT_VERSION as usize);
    push_u32(&mut out, g.dims.len());
    for &d in &g.dims {
        push_u32(&mut out, d);
    }
    out.extend(g.data.iter().map(|&b| b as u8));
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<Grid> {
    let mut r = Reader::new(bytes);
    r.header(GRID_MAGIC)?;
    let dims = r.dims()?;
    let n = r.element_count(&dims, 1)?;
    let start = r.pos;
    let raw = r.take(n, "grid values")?;
    r.finish()?;
    if let Some(i) = raw.iter().position(|&b| b > 1) {
        return Err(Error::format(start + i, format!("grid value {} is not 0 or 1", raw[i])));
    }
    Ok(Grid {
        dims,
        data: raw.iter().map(|&b| b == 1).collect(),
    })
}

impl From<&DepthDistribution> for Tensor {
    fn from(d: &DepthDistribution) -> Self {
        Tensor {
            dims: d.dims().to_vec(),
            data: d.values().to_vec(),
        }
    }
}

impl TryFrom<Tensor> for DepthDistribution {
    type Error = Error;

    fn try_from(t: Tensor) -> Result<Self> {
        t.expect_rank(3, "depth distribution")?;
        DepthDistribution::new(t.dims[0], t.dims[1], t.dims[2], t.data)
    }
}

impl From<&FeatureMap> for Tensor {
    fn from(f: &FeatureMap) -> Self {
        Tensor {
            dims: f.dims().to_vec(),
            data: f.values().to_vec(),
        }
    }
}

impl TryFrom<Tensor> for FeatureMap {
    type Error = Error;

    fn try_from(t: Tensor) -> Result<Self> {
        t.expect_rank(3, "feature map")?;
        FeatureMap::new(t.dims[0], t.dims[1], t.dims[2], t.data)
    }
}

impl From<&BevFeatureGrid> for Tensor {
    fn from(g: &BevFeatureGrid) -> Self {
        Tensor {
            dims: g.dims().to_vec(),
            data: g.values().to_vec(),
        }
    }
}

impl From<&VoxelFeatures> for Tensor {
    fn from(v: &VoxelFeatures) -> Self {
        Tensor {
            dims: v.dims().to_vec(),
            data: v.values().to_vec(),
        }
    }
}

impl From<&ScoreMap> for Tensor {
    fn from(s: &ScoreMap) -> Self {
        Tensor {
            dims: s.dims().to_vec(),
            data: s.values().to_vec(),
        }
    }
}

impl TryFrom<Tensor> for ScoreMap {
    type Error = Error;

    /// Accepts `[X, Y]` or a single-channel `[1, X, Y]` tensor.
    fn try_from(t: Tensor) -> Result<Self> {
        match t.dims.as_slice() {
            [x, y] | [1, x, y] => ScoreMap::new(*x, *y, t.data),
            _ => Err(Error::ShapeMismatch(format!(
                "score map needs dims [X, Y] or [1, X, Y], got {:?}",
                t.dims
            ))),
        }
    }
}

impl From<&BevMask> for Grid {
    fn from(m: &BevMask) -> Self {
        Grid {
            dims: m.dims().to_vec(),
            data: m.values().to_vec(),
        }
    }
}

impl TryFrom<Grid> for BevMask {
    type Error = Error;

    fn try_from(g: Grid) -> Result<Self> {
        match g.dims.as_slice() {
            [x, y] => BevMask::from_values(*x, *y, g.data),
            _ => Err(Error::ShapeMismatch(format!(
                "BEV mask needs a 2D grid, got dims {:?}",
                g.dims
            ))),
        }
    }
}

impl From<&OccupancyGrid> for Grid {
    fn from(o: &OccupancyGrid) -> Self {
        Grid {
            dims: o.dims().to_vec(),
            data: o.values().to_vec(),
        }
    }
}

const PLY_PLAIN: &[&str] = &["property float x", "property float y", "property float z", "property uchar cam"];
const PLY_COLORED: &[&str] = &[
    "property float x",
    "property float y",
    "property float z",
    "property uchar red",
    "property uchar green",
    "property uchar blue",
    "property uchar cam",
];

pub fn encode_ply(cloud: &PointCloud) -> Vec<u8> {
    let props = if cloud.has_colors() { PLY_COLORED } else { PLY_PLAIN };
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n",
        cloud.len()
    );
    for p in props {
        header.push_str(p);
        header.push('\n');
    }
    header.push_str("end_header\n");

    let stride = if cloud.has_colors() { 16 } else { 13 };
    let mut out = Vec::with_capacity(header.len() + stride * cloud.len());
    out.extend_from_slice(header.as_bytes());
    for (i, p) in cloud.points().iter().enumerate() {
        for c in p.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        if let Some(colors) = cloud.colors() {
            out.extend_from_slice(&colors[i]);
        }
        out.push(cloud.camera_ids()[i]);
    }
    out
}

pub fn decode_ply(bytes: &[u8]) -> Result<PointCloud> {
    let mut pos = 0usize;
    let next_line = |pos: &mut usize| -> Result<(usize, &str)> {
        let start = *pos;
        let len = bytes[start..]
            .iter()
            .take(256)
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format(start, "unterminated PLY header line"))?;
        *pos = start + len + 1;
        std::str::from_utf8(&bytes[start..start + len])
            .map(|s| (start, s))
            .map_err(|_| Error::format(start, "PLY header is not UTF-8"))
    };
    let expect = |got: (usize, &str), want: &str| {
        if got.1 == want {
            Ok(())
        } else {
            Err(Error::format(got.0, format!("expected {want:?}, found {:?}", got.1)))
        }
    };

    expect(next_line(&mut pos)?, "ply")?;
    expect(next_line(&mut pos)?, "format binary_little_endian 1.0")?;
    let (at, line) = next_line(&mut pos)?;
    let count: usize = line
        .strip_prefix("element vertex ")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::format(at, format!("expected vertex count, found {line:?}")))?;

    let mut props = Vec::new();
    loop {
        let (at, line) = next_line(&mut pos)?;
        if line == "end_header" {
            break;
        }
        if props.len() == PLY_COLORED.len() {
            return Err(Error::format(at, "too many PLY properties"));
        }
        props.push((at, line));
    }
    let colored = match props.len() {
        4 => false,
        7 => true,
        _ => return Err(Error::format(pos, format!("unsupported PLY layout with {} properties", props.len()))),
    };
    let layout = if colored { PLY_COLORED } else { PLY_PLAIN };
    for (&(at, line), want) in props.iter().zip(layout) {
        expect((at, line), want)?;
    }

    let stride = if colored { 16 } else { 13 };
    let body = &bytes[pos..];
    let needed = count
        .checked_mul(stride)
        .ok_or_else(|| Error::format(pos, "vertex count overflows"))?;
    if body.len() < needed {
        return Err(Error::format(bytes.len(), format!(
            "PLY body holds {} bytes, {count} vertices need {needed}",
            body.len()
        )));
    }
    if body.len() > needed {
        return Err(Error::format(pos + needed, "trailing bytes after PLY body"));
    }

    let mut points = Vec::with_capacity(count);
    let mut colors = colored.then(|| Vec::with_capacity(count));
    let mut ids = Vec::with_capacity(count);
    for (i, rec) in body.chunks_exact(stride).enumerate() {
        let xyz = f32_values(&rec[..12]);
        let p = Vector3::new(xyz[0] as f64, xyz[1] as f64, xyz[2] as f64);
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::format(pos + i * stride, "non-finite point coordinate"));
        }
        points.push(p);
        if let Some(c) = colors.as_mut() {
            c.push([rec[12], rec[13], rec[14]]);
        }
        ids.push(rec[stride - 1]);
    }
    PointCloud::new(points, colors, ids)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsJson {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseJson {
    /// Row-major 3x3 camera-to-ego rotation.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraJson {
    intrinsics: IntrinsicsJson,
    pose: PoseJson,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RigJson {
    cameras: Vec<CameraJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxJson {
    center: [f64; 2],
    length: f64,
    width: f64,
    yaw: f64,
    z_min: f64,
    z_max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneJson {
    ground_plane: bool,
    boxes: Vec<BoxJson>,
    rig: RigJson,
    seed: u64,
}

fn json_offset(text: &str, e: &serde_json::Error) -> usize {
    // serde_json reports 1-based line and column.
    let line_start: usize = text
        .split_inclusive('\n')
        .take(e.line().saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + e.column().saturating_sub(1)).min(text.len())
}

fn parse_json<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::format(e.valid_up_to(), "file is not valid UTF-8"))?;
    serde_json::from_str(text).map_err(|e| Error::format(json_offset(text, &e), e.to_string()))
}

pub fn encode_scene(scene: &SceneSpec) -> String {
    let json = SceneJson {
        ground_plane: scene.ground_plane,
        seed: scene.seed,
        boxes: scene
            .boxes
            .iter()
            .map(|b| BoxJson {
                center: b.footprint.center,
                length: b.footprint.length,
                width: b.footprint.width,
                yaw: b.footprint.yaw,
                z_min: b.z_min,
                z_max: b.z_max,
            })
            .collect(),
        rig: RigJson {
            cameras: scene
                .rig
                .cameras()
                .iter()
                .map(|(i, p)| {
                    let r = p.rotation();
                    CameraJson {
                        intrinsics: IntrinsicsJson {
                            fx: i.fx,
                            fy: i.fy,
                            cx: i.cx,
                            cy: i.cy,
                            width: i.width,
                            height: i.height,
                        },
                        pose: PoseJson {
                            rotation: std::array::from_fn(|row| std::array::from_fn(|col| r[(row, col)])),
                            translation: [p.translation().x, p.translation().y, p.translation().z],
                        },
                    }
                })
                .collect(),
        },
    };
    let mut text = serde_json::to_string_pretty(&json).expect("scene serializes");
    text.push('\n');
    text
}

/// Parses a scene and validates every domain invariant. Semantic violations
/// are reported as format errors at offset 0.
pub fn decode_scene(bytes: &[u8]) -> Result<SceneSpec> {
    let json: SceneJson = parse_json(bytes)?;
    let semantic = |e: Error| Error::format(0, e.to_string());
    let cameras = json
        .rig
        .cameras
        .into_iter()
        .map(|c| {
            let i = c.intrinsics;
            let intr = CameraIntrinsics::new(i.fx, i.fy, i.cx, i.cy, i.width, i.height)?;
            let r = c.pose.rotation;
            let rotation = Matrix3::from_fn(|row, col| r[row][col]);
            let pose = RigidPose::new(rotation, Vector3::from(c.pose.translation))?;
            Ok((intr, pose))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(semantic)?;
    let boxes = json
        .boxes
        .into_iter()
        .map(|b| SceneBox::new(VehicleBox::new(b.center, b.length, b.width, b.yaw)?, b.z_min, b.z_max))
        .collect::<Result<Vec<_>>>()
        .map_err(semantic)?;
    Ok(SceneSpec {
        ground_plane: json.ground_plane,
        boxes,
        rig: CameraRig::new(cameras).map_err(semantic)?,
        seed: json.seed,
    })
}

/// One evaluation frame. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub scene: PathBuf,
    /// DMAP files in rig camera order.
    pub depth: Vec<PathBuf>,
    /// Optional TNSR score map; without it the frame is scored from its
    /// pseudo-LiDAR occupancy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<PathBuf>,
    pub truth: PathBuf,
}

impl FrameRecord {
    /// Same record with every path joined onto `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        Self {
            scene: base.join(&self.scene),
            depth: self.depth.iter().map(|p| base.join(p)).collect(),
            score: self.score.as_ref().map(|p| base.join(p)),
            truth: base.join(&self.truth),
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        std::iter::once(self.scene.as_path())
            .chain(self.depth.iter().map(PathBuf::as_path))
            .chain(self.score.as_deref())
            .chain(std::iter::once(self.truth.as_path()))
    }
}

pub fn encode_manifest(frames: &[FrameRecord]) -> String {
    let mut text = serde_json::to_string_pretty(frames).expect("manifest serializes");
    text.push('\n');
    text
}

pub fn decode_manifest(bytes: &[u8]) -> Result<Vec<FrameRecord>> {
    parse_json(bytes)
}

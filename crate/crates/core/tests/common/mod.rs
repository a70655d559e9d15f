//! Brute-force reference implementations shared by the integration tests.
//!
//! Each oracle is written independently of the library code path it checks:
//! plain scalar loops over raw arrays, no shared helpers beyond the public
//! data accessors.

#![allow(dead_code)]

use bevkit::depth::{BinSpec, DepthImage};
use bevkit::eval::VehicleBox;
use bevkit::geometry::CameraRig;
use bevkit::grid::VoxelGridSpec;
use bevkit::lift::{FeatureMap, FrustumVolume};
use bevkit::pseudolidar::PointCloud;
use bevkit::synth::SceneSpec;
use nalgebra::Vector3;

/// Per-pixel histogram: loop over every pixel, filter range, count, normalize.
/// Output layout `[bin][patch_row][patch_col]`.
pub fn histogram_oracle(img: &DepthImage, bins: &BinSpec, patch: usize) -> Vec<f32> {
    let rows = img.height() / patch;
    let cols = img.width() / patch;
    let width = (bins.d_max - bins.d_min) / bins.n_bins as f64;
    let mut counts = vec![vec![0u64; bins.n_bins]; rows * cols];
    for r in 0..img.height() {
        for c in 0..img.width() {
            let d = img.values()[r * img.width() + c];
            if d == 0.0 || d < bins.d_min || d >= bins.d_max {
                continue;
            }
            let mut b = ((d - bins.d_min) / width).floor() as usize;
            if b >= bins.n_bins {
                b = bins.n_bins - 1;
            }
            counts[(r / patch) * cols + c / patch][b] += 1;
        }
    }
    let mut out = vec![0f32; bins.n_bins * rows * cols];
    for (p, hist) in counts.iter().enumerate() {
        let total: u64 = hist.iter().sum();
        if total == 0 {
            continue;
        }
        for (b, &n) in hist.iter().enumerate() {
            out[b * rows * cols + p] = (n as f64 / total as f64) as f32;
        }
    }
    out
}

fn cell_of(min: f64, max: f64, cells: usize, v: f64) -> Option<usize> {
    if v < min || v >= max {
        return None;
    }
    let i = ((v - min) / ((max - min) / cells as f64)).floor() as usize;
    if i >= cells {
        None
    } else {
        Some(i)
    }
}

/// Dense `[x][y][z]` occupancy by per-point floor indexing.
pub fn voxelize_oracle(points: &[Vector3<f64>], g: &VoxelGridSpec) -> Vec<bool> {
    let (nx, ny, nz) = (g.x.cells, g.y.cells, g.z.cells);
    let mut out = vec![false; nx * ny * nz];
    for p in points {
        let (Some(i), Some(j), Some(k)) = (
            cell_of(g.x.min, g.x.max, nx, p.x),
            cell_of(g.y.min, g.y.max, ny, p.y),
            cell_of(g.z.min, g.z.max, nz, p.z),
        ) else {
            continue;
        };
        out[(i * ny + j) * nz + k] = true;
    }
    out
}

/// Dense `[channel][x][y]` sum over every frustum cell.
pub fn splat_oracle(frusta: &[FrustumVolume], channels: usize, g: &VoxelGridSpec) -> Vec<f64> {
    let (nx, ny) = (g.x.cells, g.y.cells);
    let mut out = vec![0f64; channels * nx * ny];
    for f in frusta {
        let n = f.points().len();
        for cell in 0..n {
            let p = f.points()[cell];
            let (Some(i), Some(j)) = (cell_of(g.x.min, g.x.max, nx, p.x), cell_of(g.y.min, g.y.max, ny, p.y)) else {
                continue;
            };
            for c in 0..channels {
                out[(c * nx + i) * ny + j] += f.values()[c * n + cell] as f64;
            }
        }
    }
    out
}

/// Point-in-rotated-rectangle by projecting onto the box axes.
fn inside_box(b: &VehicleBox, x: f64, y: f64) -> bool {
    let ax = [b.yaw.cos(), b.yaw.sin()];
    let ay = [-b.yaw.sin(), b.yaw.cos()];
    let d = [x - b.center[0], y - b.center[1]];
    let lx = d[0] * ax[0] + d[1] * ax[1];
    let ly = d[0] * ay[0] + d[1] * ay[1];
    lx.abs() <= b.length / 2.0 + bevkit::eval::FOOTPRINT_EPS && ly.abs() <= b.width / 2.0 + bevkit::eval::FOOTPRINT_EPS
}

/// Every cell against every box.
pub fn rasterize_oracle(boxes: &[VehicleBox], g: &VoxelGridSpec) -> Vec<bool> {
    let (nx, ny) = (g.x.cells, g.y.cells);
    let sx = (g.x.max - g.x.min) / nx as f64;
    let sy = (g.y.max - g.y.min) / ny as f64;
    let mut out = vec![false; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let cx = g.x.min + (i as f64 + 0.5) * sx;
            let cy = g.y.min + (j as f64 + 0.5) * sy;
            out[i * ny + j] = boxes.iter().any(|b| inside_box(b, cx, cy));
        }
    }
    out
}

/// Scalar reference for the bilinear voxel lift. Output `[channel][x][y][z]`.
pub fn bilinear_lift_oracle(feats: &[FeatureMap], rig: &CameraRig, patch: usize, g: &VoxelGridSpec) -> Vec<f64> {
    let channels = feats[0].channels();
    let (nx, ny, nz) = (g.x.cells, g.y.cells, g.z.cells);
    let mut out = vec![0f64; channels * nx * ny * nz];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let p = [
                    g.x.min + (i as f64 + 0.5) * (g.x.max - g.x.min) / nx as f64,
                    g.y.min + (j as f64 + 0.5) * (g.y.max - g.y.min) / ny as f64,
                    g.z.min + (k as f64 + 0.5) * (g.z.max - g.z.min) / nz as f64,
                ];
                let mut sum = vec![0f64; channels];
                let mut n = 0usize;
                for ((intr, pose), f) in rig.cameras().iter().zip(feats) {
                    let r = pose.rotation();
                    let t = pose.translation();
                    let d = [p[0] - t.x, p[1] - t.y, p[2] - t.z];
                    // Rᵀ d
                    let cam: Vec<f64> = (0..3).map(|a| (0..3).map(|b| r[(b, a)] * d[b]).sum()).collect();
                    if cam[2] <= 0.0 {
                        continue;
                    }
                    let w_img = (f.patch_cols() * patch) as f64;
                    let h_img = (f.patch_rows() * patch) as f64;
                    let sx = w_img / intr.width as f64;
                    let sy = h_img / intr.height as f64;
                    let u = intr.fx * sx * cam[0] / cam[2] + intr.cx * sx;
                    let v = intr.fy * sy * cam[1] / cam[2] + intr.cy * sy;
                    if u < 0.0 || u >= w_img || v < 0.0 || v >= h_img {
                        continue;
                    }
                    let gx = (u / patch as f64 - 0.5).max(0.0).min((f.patch_cols() - 1) as f64);
                    let gy = (v / patch as f64 - 0.5).max(0.0).min((f.patch_rows() - 1) as f64);
                    let x0 = gx.floor() as usize;
                    let y0 = gy.floor() as usize;
                    let x1 = if x0 + 1 < f.patch_cols() { x0 + 1 } else { x0 };
                    let y1 = if y0 + 1 < f.patch_rows() { y0 + 1 } else { y0 };
                    let ax = gx - x0 as f64;
                    let ay = gy - y0 as f64;
                    for (c, s) in sum.iter_mut().enumerate() {
                        let f00 = f.get(c, y0, x0) as f64;
                        let f10 = f.get(c, y0, x1) as f64;
                        let f01 = f.get(c, y1, x0) as f64;
                        let f11 = f.get(c, y1, x1) as f64;
                        *s += f00 * (1.0 - ax) * (1.0 - ay) + f10 * ax * (1.0 - ay) + f01 * (1.0 - ax) * ay + f11 * ax * ay;
                    }
                    n += 1;
                }
                for c in 0..channels {
                    if n > 0 {
                        out[((c * nx + i) * ny + j) * nz + k] = sum[c] / n as f64;
                    }
                }
            }
        }
    }
    out
}

/// Signed distance from an ego point to the closest scene surface.
pub fn surface_distance(scene: &SceneSpec, p: &Vector3<f64>) -> f64 {
    let mut best = f64::INFINITY;
    if scene.ground_plane {
        best = p.z.abs();
    }
    for b in &scene.boxes {
        let f = &b.footprint;
        let (s, c) = f.yaw.sin_cos();
        let dx = p.x - f.center[0];
        let dy = p.y - f.center[1];
        let local = [c * dx + s * dy, -s * dx + c * dy, p.z - 0.5 * (b.z_min + b.z_max)];
        let half = [f.length / 2.0, f.width / 2.0, 0.5 * (b.z_max - b.z_min)];
        let q: Vec<f64> = (0..3).map(|k| local[k].abs() - half[k]).collect();
        let outside = q.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
        let inside = q[0].max(q[1]).max(q[2]).min(0.0);
        let sdf = outside + inside;
        if sdf.abs() < best.abs() {
            best = sdf;
        }
    }
    best
}

/// Area of the intersection of two convex polygons (Sutherland-Hodgman clip).
pub fn convex_intersection_area(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut poly: Vec<[f64; 2]> = a.to_vec();
    for k in 0..b.len() {
        if poly.is_empty() {
            break;
        }
        let e0 = b[k];
        let e1 = b[(k + 1) % b.len()];
        let side = |p: &[f64; 2]| (e1[0] - e0[0]) * (p[1] - e0[1]) - (e1[1] - e0[1]) * (p[0] - e0[0]);
        let input = std::mem::take(&mut poly);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (sc, sp) = (side(&cur), side(&prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    let t = sp / (sp - sc);
                    poly.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
                }
                poly.push(cur);
            } else if sp >= 0.0 {
                let t = sp / (sp - sc);
                poly.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
            }
        }
    }
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1])
        .sum::<f64>()
        .abs()
}

/// Counter-clockwise footprint corners computed from scratch.
pub fn footprint_polygon(b: &VehicleBox) -> Vec<[f64; 2]> {
    let (s, c) = b.yaw.sin_cos();
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|(a, w)| {
            let lx = a * b.length / 2.0;
            let ly = w * b.width / 2.0;
            [b.center[0] + c * lx - s * ly, b.center[1] + s * lx + c * ly]
        })
        .collect()
}

pub fn cloud_of(points: Vec<Vector3<f64>>) -> PointCloud {
    let n = points.len();
    PointCloud::new(points, None, vec![0; n]).unwrap()
}

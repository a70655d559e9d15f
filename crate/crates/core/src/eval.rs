//! Ground-truth footprint rasterization and BEV IoU.

use nalgebra::Vector2;

use crate::grid::VoxelGridSpec;
use crate::voxel::BevMask;
use crate::{Error, Result};

/// Default score threshold.
pub const DEFAULT_TAU: f64 = 0.5;

/// Slack on the boundary-inclusive point-in-rectangle test, in meters.
///
/// Keeps boxes at exact multiples of 90 degrees consistent with their
/// axis-swapped twins despite `cos(pi/2) != 0` in floating point.
pub const FOOTPRINT_EPS: f64 = 1e-9;

/// Oriented vehicle footprint on the ego ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleBox {
    pub center: [f64; 2],
    /// Extent along the box heading.
    pub length: f64,
    pub width: f64,
    /// Heading about ego +z, radians.
    pub yaw: f64,
}

impl VehicleBox {
    pub fn new(center: [f64; 2], length: f64, width: f64, yaw: f64) -> Result<Self> {
        let b = Self {
            center,
            length,
            width,
            yaw,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box size must be positive, got {}x{}",
                self.length, self.width
            )));
        }
        if !(self.center.iter().all(|c| c.is_finite()) && self.yaw.is_finite() && self.length.is_finite() && self.width.is_finite()) {
            return Err(Error::InvalidParameter("box has non-finite parameters".into()));
        }
        Ok(())
    }

    /// Ego (x, y) expressed in the box frame.
    #[inline]
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        (c * dx + s * dy, -s * dx + c * dy)
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (lx, ly) = self.to_local(x, y);
        lx.abs() <= self.length / 2.0 + FOOTPRINT_EPS && ly.abs() <= self.width / 2.0 + FOOTPRINT_EPS
    }

    /// Footprint corners, counter-clockwise.
    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let (s, c) = self.yaw.sin_cos();
        let heading = Vector2::new(c, s) * (self.length / 2.0);
        let side = Vector2::new(-s, c) * (self.width / 2.0);
        let center = Vector2::new(self.center[0], self.center[1]);
        [
            center + heading + side,
            center - heading + side,
            center - heading - side,
            center + heading - side,
        ]
    }

    /// Separating-axis overlap test between two footprints. Touching
    /// footprints count as overlapping.
    pub fn overlaps(&self, other: &VehicleBox) -> bool {
        let a = self.corners();
        let b = other.corners();
        let axes = [a[0] - a[1], a[1] - a[2], b[0] - b[1], b[1] - b[2]];
        axes.iter().all(|axis| {
            let project = |pts: &[Vector2<f64>; 4]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let d = p.dot(axis);
                    (lo.min(d), hi.max(d))
                })
            };
            let (alo, ahi) = project(&a);
            let (blo, bhi) = project(&b);
            ahi >= blo && bhi >= alo
        })
    }
}

/// Continuous per-cell scores in `[0, 1]`, laid out `[x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    x_cells: usize,
    y_cells: usize,
    values: Vec<f32>,
}

impl ScoreMap {
    pub fn new(x_cells: usize, y_cells: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != x_cells * y_cells {
            return Err(Error::ShapeMismatch(format!(
                "{} scores for a {x_cells}x{y_cells} map",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("score {v} is outside [0, 1]")));
        }
        Ok(Self {
            x_cells,
            y_cells,
            values,
        })
    }

    pub fn dims(&self) -> [usize; 2] {
        [self.x_cells, self.y_cells]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

/// Marks cells whose center lies inside at least one footprint.
pub fn rasterize_boxes(boxes: &[VehicleBox], spec: &VoxelGridSpec) -> BevMask {
    let (nx, ny) = (spec.x.cells, spec.y.cells);
    let mut mask = BevMask::empty(nx, ny);
    for b in boxes {
        // Only cells near the footprint's bounding circle can be inside.
        let r = 0.5 * b.length.hypot(b.width) + FOOTPRINT_EPS;
        let range = |axis: &crate::grid::AxisSpec, c: f64| {
            let size = axis.cell_size();
            let lo = ((c - r - axis.min) / size - 0.5).floor().max(0.0) as usize;
            let hi = ((c + r - axis.min) / size - 0.5).ceil().max(0.0) as usize;
            lo..=hi.min(axis.cells - 1)
        };
        for i in range(&spec.x, b.center[0]) {
            let x = spec.x.center(i);
            for j in range(&spec.y, b.center[1]) {
                if b.contains(x, spec.y.center(j)) {
                    mask.set(i, j, true);
                }
            }
        }
    }
    mask
}

/// Intersection and union cell counts of a prediction/truth pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IouCounts {
    pub intersection: u64,
    pub union: u64,
}

impl IouCounts {
    pub fn between(pred: &BevMask, truth: &BevMask) -> Result<Self> {
        if pred.dims() != truth.dims() {
            return Err(Error::DimensionMismatch(format!(
                "prediction is {:?} but truth is {:?}",
                pred.dims(),
                truth.dims()
            )));
        }
        let mut counts = Self::default();
        for (&p, &t) in pred.values().iter().zip(truth.values()) {
            counts.intersection += (p && t) as u64;
            counts.union += (p || t) as u64;
        }
        Ok(counts)
    }

    /// Ratio, with an empty union scoring 1.
    pub fn ratio(&self) -> f64 {
        if self.union == 0 {
            1.0
        } else {
            self.intersection as f64 / self.union as f64
        }
    }
}

impl std::ops::Add for IouCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            intersection: self.intersection + rhs.intersection,
            union: self.union + rhs.union,
        }
    }
}

pub fn iou(pred: &BevMask, truth: &BevMask) -> Result<f64> {
    Ok(IouCounts::between(pred, truth)?.ratio())
}

pub fn threshold(scores: &ScoreMap, tau: f64) -> BevMask {
    let values = scores.values.iter().map(|&s| s as f64 >= tau).collect();
    BevMask::from_values(scores.x_cells, scores.y_cells, values)
        .unwrap_or_else(|_| BevMask::empty(scores.x_cells, scores.y_cells))
}

/// Global IoU over a dataset: intersections and unions are summed across
/// all pairs before dividing.
pub fn dataset_iou(pairs: &[(ScoreMap, BevMask)], tau: f64) -> Result<f64> {
    let mut total = IouCounts::default();
    for (scores, truth) in pairs {
        total = total + IouCounts::between(&threshold(scores, tau), truth)?;
    }
    Ok(total.ratio())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisSpec;
    use std::f64::consts::FRAC_PI_2;

    fn mask(bits: &[u8], x: usize, y: usize) -> BevMask {
        BevMask::from_values(x, y, bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    fn half_meter_grid(cells: usize) -> VoxelGridSpec {
        let half = cells as f64 * 0.25;
        VoxelGridSpec::new(
            AxisSpec::new(-half, half, cells).unwrap(),
            AxisSpec::new(-half, half, cells).unwrap(),
            AxisSpec::new(0.0, 1.0, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn iou_hand_counts() {
        let a = mask(&[1, 1, 0, 0], 2, 2);
        let b = mask(&[0, 1, 1, 0], 2, 2);
        assert_eq!(iou(&a, &b).unwrap(), 1.0 / 3.0);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &mask(&[0, 0, 1, 1], 2, 2)).unwrap(), 0.0);
        let empty = BevMask::empty(2, 2);
        assert_eq!(iou(&empty, &empty).unwrap(), 1.0);
        assert!(matches!(
            iou(&a, &BevMask::empty(4, 1)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn threshold_cases() {
        let s = ScoreMap::new(1, 3, vec![0.2, 0.5, 0.8]).unwrap();
        assert_eq!(threshold(&s, 0.5), mask(&[0, 1, 1], 1, 3));
        assert_eq!(threshold(&s, 0.0).count(), 3);
        assert_eq!(threshold(&s, 0.800_001).count(), 0);
        assert!(ScoreMap::new(1, 1, vec![1.5]).is_err());
    }

    #[test]
    fn dataset_iou_is_micro_averaged() {
        // (|∩|, |∪|) = (1, 3) and (2, 2).
        let s1 = ScoreMap::new(2, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let t1 = mask(&[0, 1, 1, 0], 2, 2);
        let s2 = ScoreMap::new(2, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let t2 = mask(&[1, 1, 0, 0], 2, 2);
        let pairs = vec![(s1.clone(), t1.clone()), (s2, t2)];
        assert_eq!(dataset_iou(&pairs, 0.5).unwrap(), 3.0 / 5.0);
        assert_eq!(
            dataset_iou(&[(s1.clone(), t1.clone())], 0.5).unwrap(),
            iou(&threshold(&s1, 0.5), &t1).unwrap()
        );
        let zeros = ScoreMap::new(2, 2, vec![0.0; 4]).unwrap();
        assert_eq!(dataset_iou(&[(zeros, BevMask::empty(2, 2))], 0.5).unwrap(), 1.0);
        assert_eq!(dataset_iou(&[], 0.5).unwrap(), 1.0);
    }

    #[test]
    fn unit_box_on_half_meter_cells() {
        // 8x8 cells of 0.5 m over [-2, 2]; cell centers at ±0.25, ±0.75, ...
        // A 1x1 box centered on the center of cell (4, 4) = (0.25, 0.25)
        // reaches ±0.5 m, so the centers at distance 0.5 along either axis
        // are on its boundary and count.
        let spec = half_meter_grid(8);
        let b = VehicleBox::new([0.25, 0.25], 1.0, 1.0, 0.0).unwrap();
        let m = rasterize_boxes(&[b], &spec);
        let on: Vec<(usize, usize)> = (0..8)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .filter(|&(i, j)| m.get(i, j))
            .collect();
        let expected: Vec<(usize, usize)> = (3..=5).flat_map(|i| (3..=5).map(move |j| (i, j))).collect();
        assert_eq!(on, expected);
    }

    #[test]
    fn yaw_quarter_turn_swaps_axes() {
        let spec = half_meter_grid(32);
        let a = VehicleBox::new([0.25, -1.25], 4.0, 2.0, FRAC_PI_2).unwrap();
        let b = VehicleBox::new([0.25, -1.25], 2.0, 4.0, 0.0).unwrap();
        assert_eq!(rasterize_boxes(&[a], &spec), rasterize_boxes(&[b], &spec));
        assert!(rasterize_boxes(&[], &spec).count() == 0);
    }

    #[test]
    fn separating_axis() {
        let a = VehicleBox::new([0.0, 0.0], 4.0, 2.0, 0.0).unwrap();
        assert!(a.overlaps(&VehicleBox::new([3.0, 0.0], 4.0, 2.0, 0.3).unwrap()));
        assert!(!a.overlaps(&VehicleBox::new([0.0, 3.0], 4.0, 2.0, 0.0).unwrap()));
        // Diagonal neighbor whose bounding boxes overlap but footprints do not.
        let c = VehicleBox::new([2.424, 1.424], 4.0, 1.0, -std::f64::consts::FRAC_PI_4).unwrap();
        assert!(!a.overlaps(&c));
    }
}

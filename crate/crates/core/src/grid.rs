//! Axis-aligned ego-frame voxel grid extents.

use crate::{Error, Result};

/// Extent and resolution of one ego axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, cells: usize) -> Result<Self> {
        let axis = Self { min, max, cells };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidParameter(format!(
                "axis extent [{}, {}] is empty or non-finite",
                self.min, self.max
            )));
        }
        if self.cells < 1 {
            return Err(Error::InvalidParameter("axis needs at least one cell".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn cell_size(&self) -> f64 {
        (self.max - self.min) / self.cells as f64
    }

    /// Half-open cell index of `coord`; `None` outside `[min, max)`.
    #[inline]
    pub fn index(&self, coord: f64) -> Option<usize> {
        if !(coord >= self.min && coord < self.max) {
            return None;
        }
        let i = ((coord - self.min) / self.cell_size()).floor() as usize;
        // Rounding can push coordinates just below `max` onto `cells`.
        (i < self.cells).then_some(i)
    }

    #[inline]
    pub fn center(&self, index: usize) -> f64 {
        self.min + (index as f64 + 0.5) * self.cell_size()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGridSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub z: AxisSpec,
}

impl Default for VoxelGridSpec {
    /// 100 m x 100 m x 10 m around the ego vehicle at 200 x 200 x 8 cells.
    fn default() -> Self {
        Self {
            x: AxisSpec {
                min: -50.0,
                max: 50.0,
                cells: 200,
            },
            y: AxisSpec {
                min: -50.0,
                max: 50.0,
                cells: 200,
            },
            z: AxisSpec {
                min: 0.0,
                max: 10.0,
                cells: 8,
            },
        }
    }
}

impl VoxelGridSpec {
    pub fn new(x: AxisSpec, y: AxisSpec, z: AxisSpec) -> Result<Self> {
        let spec = Self { x, y, z };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.x.validate()?;
        self.y.validate()?;
        self.z.validate()
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.x.cells, self.y.cells, self.z.cells]
    }

    /// BEV cell of an ego-frame (x, y) position, ignoring z.
    #[inline]
    pub fn bev_index(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        Some((self.x.index(x)?, self.y.index(y)?))
    }

    #[inline]
    pub fn voxel_index(&self, x: f64, y: f64, z: f64) -> Option<(usize, usize, usize)> {
        Some((self.x.index(x)?, self.y.index(y)?, self.z.index(z)?))
    }

    /// Parses `xmin,xmax,nx,ymin,ymax,ny,zmin,zmax,nz`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 9 {
            return Err(Error::InvalidParameter(format!(
                "grid needs 9 comma-separated values, got {}",
                parts.len()
            )));
        }
        let float = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad grid bound {s:?}")))
        };
        let count = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("bad grid cell count {s:?}")))
        };
        let axis = |i: usize| -> Result<AxisSpec> {
            AxisSpec::new(float(parts[i])?, float(parts[i + 1])?, count(parts[i + 2])?)
        };
        Self::new(axis(0)?, axis(3)?, axis(6)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_open_cells() {
        let a = AxisSpec::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(a.cell_size(), 0.5);
        assert_eq!(a.index(-1.0), Some(0));
        assert_eq!(a.index(-0.5), Some(1));
        assert_eq!(a.index(0.999_999), Some(3));
        assert_eq!(a.index(1.0), None);
        assert_eq!(a.index(-1.000_001), None);
        assert_eq!(a.index(f64::NAN), None);
        assert_eq!(a.center(0), -0.75);
    }

    #[test]
    fn default_grid() {
        let g = VoxelGridSpec::default();
        assert_eq!(g.dims(), [200, 200, 8]);
        assert_eq!(g.x.cell_size(), 0.5);
        assert_eq!(g.z.cell_size(), 1.25);
    }

    #[test]
    fn parse_grid() {
        let g = VoxelGridSpec::parse("-50,50,200,-50,50,200,0,10,8").unwrap();
        assert_eq!(g, VoxelGridSpec::default());
        assert!(VoxelGridSpec::parse("0,1,1").is_err());
        assert!(VoxelGridSpec::parse("1,0,1,0,1,1,0,1,1").is_err());
        assert!(VoxelGridSpec::parse("0,1,0,0,1,1,0,1,1").is_err());
    }
}

//! Binary occupancy grids and their BEV reduction.

use crate::grid::VoxelGridSpec;
use crate::pseudolidar::PointCloud;
use crate::{Error, Result};

/// Binary voxel occupancy laid out `[x][y][z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    spec: VoxelGridSpec,
    values: Vec<bool>,
}

impl OccupancyGrid {
    pub fn empty(spec: VoxelGridSpec) -> Self {
        let [nx, ny, nz] = spec.dims();
        Self {
            spec,
            values: vec![false; nx * ny * nz],
        }
    }

    pub fn from_values(spec: VoxelGridSpec, values: Vec<bool>) -> Result<Self> {
        let [nx, ny, nz] = spec.dims();
        if values.len() != nx * ny * nz {
            return Err(Error::ShapeMismatch(format!(
                "{} voxels for a {nx}x{ny}x{nz} grid",
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &VoxelGridSpec {
        &self.spec
    }

    pub fn dims(&self) -> [usize; 3] {
        self.spec.dims()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    #[inline]
    fn offset(&self, x: usize, y: usize, z: usize) -> usize {
        let [_, ny, nz] = self.spec.dims();
        (x * ny + y) * nz + z
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.values[self.offset(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize) {
        let i = self.offset(x, y, z);
        self.values[i] = true;
    }

    pub fn occupied(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }
}

/// Binary BEV plane laid out `[x][y]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BevMask {
    x_cells: usize,
    y_cells: usize,
    values: Vec<bool>,
}

impl BevMask {
    pub fn empty(x_cells: usize, y_cells: usize) -> Self {
        Self {
            x_cells,
            y_cells,
            values: vec![false; x_cells * y_cells],
        }
    }

    pub fn from_values(x_cells: usize, y_cells: usize, values: Vec<bool>) -> Result<Self> {
        if x_cells == 0 || y_cells == 0 {
            return Err(Error::InvalidParameter("BEV mask dimensions must be positive".into()));
        }
        if values.len() != x_cells * y_cells {
            return Err(Error::ShapeMismatch(format!(
                "{} cells for a {x_cells}x{y_cells} mask",
                values.len()
            )));
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

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[x * self.y_cells + y]
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.values[x * self.y_cells + y] = on;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Grows the mask by `radius` cells in the 8-neighborhood sense.
    pub fn dilated(&self, radius: usize) -> Self {
        let mut out = Self::empty(self.x_cells, self.y_cells);
        for x in 0..self.x_cells {
            for y in 0..self.y_cells {
                if !self.get(x, y) {
                    continue;
                }
                for i in x.saturating_sub(radius)..=(x + radius).min(self.x_cells - 1) {
                    for j in y.saturating_sub(radius)..=(y + radius).min(self.y_cells - 1) {
                        out.set(i, j, true);
                    }
                }
            }
        }
        out
    }
}

/// Marks every voxel whose half-open cell holds at least one point.
pub fn voxelize(cloud: &PointCloud, spec: &VoxelGridSpec) -> OccupancyGrid {
    let mut grid = OccupancyGrid::empty(*spec);
    for p in cloud.points() {
        if let Some((x, y, z)) = spec.voxel_index(p.x, p.y, p.z) {
            grid.set(x, y, z);
        }
    }
    grid
}

/// OR over z.
pub fn reduce_to_bev(grid: &OccupancyGrid) -> BevMask {
    let [nx, ny, nz] = grid.dims();
    let values = grid
        .values
        .chunks_exact(nz)
        .map(|column| column.iter().any(|&v| v))
        .collect();
    BevMask {
        x_cells: nx,
        y_cells: ny,
        values,
    }
}

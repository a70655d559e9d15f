//! Metric depth images and their per-patch categorical depth distributions.
//!
//! A depth image is pooled over non-overlapping `patch x patch` blocks. Each
//! valid pixel in `[d_min, d_max)` votes for the bin
//! `floor((d - d_min) / width)`, and every block's histogram is normalized
//! to sum to one. Blocks with no in-range pixels stay all-zero.

use rayon::prelude::*;

use crate::{Error, Result};

/// Dense per-pixel plane depth in meters, row-major. `0.0` marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DepthImage {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} depth values for a {height}x{width} image",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "depth at index {i} is {}; depths must be finite and non-negative",
                values[i]
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: usize, width: usize, depth: f64) -> Result<Self> {
        Self::new(height, width, vec![depth; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }
}

/// Uniform depth bins over `[d_min, d_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub d_min: f64,
    pub d_max: f64,
    pub n_bins: usize,
}

impl Default for BinSpec {
    /// 41 one-meter bins from 4 m to 45 m.
    fn default() -> Self {
        Self {
            d_min: 4.0,
            d_max: 45.0,
            n_bins: 41,
        }
    }
}

impl BinSpec {
    pub fn new(d_min: f64, d_max: f64, n_bins: usize) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite() && d_min < d_max) {
            return Err(Error::InvalidParameter(format!(
                "depth range [{d_min}, {d_max}) is empty or non-finite"
            )));
        }
        if n_bins < 1 {
            return Err(Error::InvalidParameter("at least one depth bin is required".into()));
        }
        Ok(Self {
            d_min,
            d_max,
            n_bins,
        })
    }

    #[inline]
    pub fn width(&self) -> f64 {
        (self.d_max - self.d_min) / self.n_bins as f64
    }

    /// Bin containing depth `d`, or `None` if `d` is outside `[d_min, d_max)`.
    #[inline]
    pub fn bin_of(&self, d: f64) -> Option<usize> {
        if !(d >= self.d_min && d < self.d_max) {
            return None;
        }
        let i = ((d - self.d_min) / self.width()).floor() as usize;
        Some(i.min(self.n_bins - 1))
    }
}

pub fn bin_center_depth(bins: &BinSpec, idx: usize) -> Result<f64> {
    if idx >= bins.n_bins {
        return Err(Error::IndexOutOfRange {
            index: idx,
            len: bins.n_bins,
        });
    }
    Ok(bins.d_min + (idx as f64 + 0.5) * bins.width())
}

/// Per-patch probabilities laid out `[bin][patch_row][patch_col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthDistribution {
    n_bins: usize,
    patch_rows: usize,
    patch_cols: usize,
    values: Vec<f32>,
}

impl DepthDistribution {
    pub fn new(n_bins: usize, patch_rows: usize, patch_cols: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != n_bins * patch_rows * patch_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n_bins}x{patch_rows}x{patch_cols} distribution",
                values.len()
            )));
        }
        Ok(Self {
            n_bins,
            patch_rows,
            patch_cols,
            values,
        })
    }

    pub fn zeros(n_bins: usize, patch_rows: usize, patch_cols: usize) -> Self {
        Self {
            n_bins,
            patch_rows,
            patch_cols,
            values: vec![0.0; n_bins * patch_rows * patch_cols],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.n_bins, self.patch_rows, self.patch_cols]
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn patch_rows(&self) -> usize {
        self.patch_rows
    }

    pub fn patch_cols(&self) -> usize {
        self.patch_cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, bin: usize, row: usize, col: usize) -> f32 {
        self.values[(bin * self.patch_rows + row) * self.patch_cols + col]
    }

    /// Sum of one patch column over all bins.
    pub fn column_sum(&self, row: usize, col: usize) -> f64 {
        (0..self.n_bins).map(|d| self.get(d, row, col) as f64).sum()
    }
}

/// Raw per-patch bin counts, laid out like [`DepthDistribution`].
pub fn bin_depth_counts(img: &DepthImage, bins: &BinSpec, patch: usize) -> Result<Vec<u32>> {
    if patch == 0 || !img.height.is_multiple_of(patch) || !img.width.is_multiple_of(patch) {
        return Err(Error::NonDivisibleImage {
            height: img.height,
            width: img.width,
            patch,
        });
    }
    let rows = img.height / patch;
    let cols = img.width / patch;
    let plane = rows * cols;

    let histograms: Vec<Vec<u32>> = (0..plane)
        .into_par_iter()
        .map(|p| {
            let (pr, pc) = (p / cols, p % cols);
            let mut hist = vec![0u32; bins.n_bins];
            for r in pr * patch..(pr + 1) * patch {
                let row = &img.values[r * img.width + pc * patch..r * img.width + (pc + 1) * patch];
                for &d in row {
                    // Invalid pixels (0.0) fall below any positive d_min; a
                    // non-positive d_min must still skip them explicitly.
                    if d > 0.0 {
                        if let Some(b) = bins.bin_of(d) {
                            hist[b] += 1;
                        }
                    }
                }
            }
            hist
        })
        .collect();

    let mut counts = vec![0u32; bins.n_bins * plane];
    for (p, hist) in histograms.iter().enumerate() {
        for (b, &c) in hist.iter().enumerate() {
            counts[b * plane + p] = c;
        }
    }
    Ok(counts)
}

pub fn bin_depth_image(img: &DepthImage, bins: &BinSpec, patch: usize) -> Result<DepthDistribution> {
    let counts = bin_depth_counts(img, bins, patch)?;
    let rows = img.height / patch;
    let cols = img.width / patch;
    let plane = rows * cols;

    let mut values = vec![0f32; counts.len()];
    for p in 0..plane {
        let total: u64 = (0..bins.n_bins).map(|b| counts[b * plane + p] as u64).sum();
        if total == 0 {
            continue;
        }
        for b in 0..bins.n_bins {
            values[b * plane + p] = (counts[b * plane + p] as f64 / total as f64) as f32;
        }
    }
    DepthDistribution::new(bins.n_bins, rows, cols, values)
}

//! Map grid geometry and per-band energy accumulators.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::PropagationError;
use crate::bands::IndicatorBand;
use crate::geo::{BoundingBox, LatLon};
use crate::scalar::{db, Scalar};

/// Regular lat/lon grid. Cell `(row, col)` has its centre at
/// `(south + (row+½)·cell, west + (col+½)·cell)`; index is `row·ncols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub extent: BoundingBox,
    pub cell_deg: f64,
    pub nrows: usize,
    pub ncols: usize,
}

impl GridSpec {
    /// Covers `extent` with whole cells; the north/east edges are extended to fit.
    pub fn new(extent: BoundingBox, cell_deg: f64) -> Result<Self, PropagationError> {
        if !(cell_deg > 0.0 && cell_deg.is_finite()) {
            return Err(PropagationError::Config(format!("cell size {cell_deg} must be positive")));
        }
        let count = |span: f64| ((span / cell_deg) - 1e-9).ceil().max(1.0) as usize;
        let nrows = count(extent.height_deg());
        let ncols = count(extent.width_deg());
        if nrows.saturating_mul(ncols) > 50_000_000 {
            return Err(PropagationError::Config(format!("grid of {nrows}x{ncols} cells is too large")));
        }
        Ok(Self {
            extent: BoundingBox {
                north: extent.south + nrows as f64 * cell_deg,
                east: extent.west + ncols as f64 * cell_deg,
                ..extent
            },
            cell_deg,
            nrows,
            ncols,
        })
    }

    pub fn len(&self) -> usize {
        self.nrows * self.ncols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.ncols, index % self.ncols)
    }

    pub fn center(&self, row: usize, col: usize) -> LatLon {
        LatLon::new(
            self.extent.south + (row as f64 + 0.5) * self.cell_deg,
            self.extent.west + (col as f64 + 0.5) * self.cell_deg,
        )
    }

    pub fn cell_center(&self, index: usize) -> LatLon {
        let (r, c) = self.row_col(index);
        self.center(r, c)
    }

    /// Cell containing `p`, or `None` outside the extent.
    pub fn nearest_cell(&self, p: LatLon) -> Option<usize> {
        if !self.extent.contains(p) {
            return None;
        }
        let row = (((p.lat - self.extent.south) / self.cell_deg).floor() as usize).min(self.nrows - 1);
        let col = (((p.lon - self.extent.west) / self.cell_deg).floor() as usize).min(self.ncols - 1);
        Some(row * self.ncols + col)
    }
}

/// Accumulated mean-square pressure (µPa²) or exposure (µPa²·s) per indicator band.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid<T> {
    pub spec: GridSpec,
    energy: [Vec<T>; 3],
}

impl<T: Scalar> NoiseGrid<T> {
    pub fn new(spec: GridSpec) -> Self {
        let zeros = vec![T::zero(); spec.len()];
        Self {
            spec,
            energy: [zeros.clone(), zeros.clone(), zeros],
        }
    }

    pub fn energy(&self, band: IndicatorBand) -> &[T] {
        &self.energy[band.index()]
    }

    pub fn energy_mut(&mut self, band: IndicatorBand) -> &mut [T] {
        &mut self.energy[band.index()]
    }

    /// Cell-wise sum with a grid on the same spec.
    pub fn add_grid(&mut self, other: &NoiseGrid<T>) {
        assert_eq!(self.spec, other.spec, "grids must share a spec");
        for (mine, theirs) in self.energy.iter_mut().zip(&other.energy) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += *b;
            }
        }
    }

    pub fn scale(&mut self, k: T) {
        for band in &mut self.energy {
            for e in band {
                *e *= k;
            }
        }
    }

    /// Per-cell level in dB; `None` where no energy arrived.
    pub fn levels_db(&self, band: IndicatorBand) -> Vec<Option<T>> {
        grid_to_spl(self, band)
    }

    /// CSV with `lat,lon,{prefix}_63_db,{prefix}_125_db,{prefix}_bb_db`, one row
    /// per cell in index order; absent levels are empty fields.
    pub fn to_csv(&self, prefix: &str) -> String {
        let mut out = String::with_capacity(self.spec.len() * 48);
        let _ = write!(out, "lat,lon");
        for b in IndicatorBand::ALL {
            let _ = write!(out, ",{prefix}_{}_db", b.tag());
        }
        out.push('\n');
        let levels: Vec<Vec<Option<T>>> = IndicatorBand::ALL.iter().map(|&b| self.levels_db(b)).collect();
        for i in 0..self.spec.len() {
            let c = self.spec.cell_center(i);
            let _ = write!(out, "{:.6},{:.6}", c.lat, c.lon);
            for band in &levels {
                match band[i] {
                    Some(l) => {
                        let _ = write!(out, ",{:.3}", l.to_f64_lossy());
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `10·log10` of each cell's energy; zero-energy cells are absent.
pub fn grid_to_spl<T: Scalar>(grid: &NoiseGrid<T>, band: IndicatorBand) -> Vec<Option<T>> {
    grid.energy(band)
        .iter()
        .map(|&e| (e > T::zero() && e.is_finite()).then(|| db(e)))
        .collect()
}

//! Compact JSON form of a noise grid: an extent and resolution header plus one
//! flat array per band, row-major starting at the south-west cell.

use std::collections::BTreeMap;

use serde::Serialize;
use urnmap_core::{IndicatorBand, NoiseGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPayload {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
    pub cell_deg: f64,
    pub rows: usize,
    pub cols: usize,
    pub unit: &'static str,
    /// Levels in dB at three decimals, `null` where no energy arrived.
    pub layers: BTreeMap<&'static str, Vec<Option<f64>>>,
}

pub const SPL_UNIT: &str = "dB re 1 uPa^2";
pub const SEL_UNIT: &str = "dB re 1 uPa^2 s";

fn round3(v: f64) -> f64 {
    format!("{v:.3}").parse().expect("formatted float parses")
}

impl GridPayload {
    pub fn new(grid: &NoiseGrid<f64>, bands: &[IndicatorBand], unit: &'static str) -> Self {
        let s = grid.spec;
        let layers = bands
            .iter()
            .map(|&b| (b.tag(), grid.levels_db(b).into_iter().map(|v| v.map(round3)).collect()))
            .collect();
        Self {
            south: s.extent.south,
            west: s.extent.west,
            north: s.extent.north,
            east: s.extent.east,
            cell_deg: s.cell_deg,
            rows: s.nrows,
            cols: s.ncols,
            unit,
            layers,
        }
    }
}

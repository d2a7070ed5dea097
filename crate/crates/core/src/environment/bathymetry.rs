//! Gridded water depth from `.asc` text grids or single-band GeoTIFF.

use std::fs::File;
use std::io::{BufReader, Read, Seek};
use std::path::Path;

use tiff::decoder::{Decoder, DecodingResult};
use tiff::tags::Tag;

use super::EnvError;
use crate::geo::{BoundingBox, LatLon};
use crate::scalar::Scalar;

/// How raster values relate to depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueConvention {
    /// Positive down; values ≤ 0 are land.
    Depth,
    /// Positive up (GEBCO style); values ≥ 0 are land.
    Elevation,
}

/// Result of a depth lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DepthSample<T> {
    /// `fallback` is set when a nodata neighbour was replaced by the nearest valid cell.
    Water { depth_m: T, fallback: bool },
    Land,
}

impl<T: Copy> DepthSample<T> {
    pub fn water_depth(&self) -> Option<T> {
        match *self {
            DepthSample::Water { depth_m, .. } => Some(depth_m),
            DepthSample::Land => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell<T> {
    Water(T),
    Land,
    NoData,
}

/// Regular lat/lon raster, row 0 at the north edge. Depths are positive down;
/// land cells hold a non-positive depth and nodata cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct BathymetryGrid<T> {
    north: f64,
    west: f64,
    dlat: f64,
    dlon: f64,
    nrows: usize,
    ncols: usize,
    depth: Vec<T>,
}

impl<T: Scalar> BathymetryGrid<T> {
    /// Builds a grid from row-major values (north row first).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        north: f64,
        west: f64,
        dlat: f64,
        dlon: f64,
        nrows: usize,
        ncols: usize,
        values: Vec<T>,
        nodata: Option<T>,
        convention: ValueConvention,
    ) -> Result<Self, EnvError> {
        if nrows == 0 || ncols == 0 || values.len() != nrows * ncols {
            return Err(EnvError::Format(format!(
                "grid is {nrows}x{ncols} but carries {} values",
                values.len()
            )));
        }
        if !(dlat > 0.0 && dlon > 0.0 && north.is_finite() && west.is_finite()) {
            return Err(EnvError::Format("grid cell size must be positive".into()));
        }
        let depth = values
            .into_iter()
            .map(|v| {
                if !v.is_finite() || nodata.is_some_and(|nd| v == nd) {
                    T::nan()
                } else {
                    match convention {
                        ValueConvention::Depth => v,
                        ValueConvention::Elevation => -v,
                    }
                }
            })
            .collect();
        Ok(Self {
            north,
            west,
            dlat,
            dlon,
            nrows,
            ncols,
            depth,
        })
    }

    /// Grid over `extent` with cells of `cell_deg`, filled by `f` at each cell centre
    /// (`None` marks nodata).
    pub fn from_fn(extent: BoundingBox, cell_deg: f64, f: impl Fn(LatLon) -> Option<T>) -> Self {
        let nrows = ((extent.height_deg() / cell_deg).round() as usize).max(1);
        let ncols = ((extent.width_deg() / cell_deg).round() as usize).max(1);
        let mut depth = Vec::with_capacity(nrows * ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                let p = LatLon::new(
                    extent.north - (r as f64 + 0.5) * cell_deg,
                    extent.west + (c as f64 + 0.5) * cell_deg,
                );
                depth.push(f(p).unwrap_or_else(T::nan));
            }
        }
        Self {
            north: extent.north,
            west: extent.west,
            dlat: cell_deg,
            dlon: cell_deg,
            nrows,
            ncols,
            depth,
        }
    }

    /// Constant-depth grid.
    pub fn flat(extent: BoundingBox, cell_deg: f64, depth_m: T) -> Self {
        Self::from_fn(extent, cell_deg, |_| Some(depth_m))
    }

    pub fn extent(&self) -> BoundingBox {
        BoundingBox {
            south: self.north - self.nrows as f64 * self.dlat,
            west: self.west,
            north: self.north,
            east: self.west + self.ncols as f64 * self.dlon,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    /// `(dlat, dlon)` in degrees.
    pub fn cell_size(&self) -> (f64, f64) {
        (self.dlat, self.dlon)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> LatLon {
        LatLon::new(
            self.north - (row as f64 + 0.5) * self.dlat,
            self.west + (col as f64 + 0.5) * self.dlon,
        )
    }

    fn cell(&self, row: usize, col: usize) -> Cell<T> {
        let v = self.depth[row * self.ncols + col];
        if v.is_nan() {
            Cell::NoData
        } else if v <= T::zero() {
            Cell::Land
        } else {
            Cell::Water(v)
        }
    }

    /// Nearest cell (by index distance) that is not nodata, searching up to `radius` rings.
    fn nearest_valid(&self, row: usize, col: usize, radius: usize) -> Option<Cell<T>> {
        for k in 1..=radius {
            let mut best: Option<(usize, Cell<T>)> = None;
            let r_lo = row.saturating_sub(k);
            let r_hi = (row + k).min(self.nrows - 1);
            let c_lo = col.saturating_sub(k);
            let c_hi = (col + k).min(self.ncols - 1);
            for r in r_lo..=r_hi {
                for c in c_lo..=c_hi {
                    let cell = self.cell(r, c);
                    if cell == Cell::NoData {
                        continue;
                    }
                    let d2 = r.abs_diff(row).pow(2) + c.abs_diff(col).pow(2);
                    if best.is_none_or(|(b, _)| d2 < b) {
                        best = Some((d2, cell));
                    }
                }
            }
            if let Some((_, cell)) = best {
                return Some(cell);
            }
        }
        None
    }

    /// Water depth at a point: bilinear between the four surrounding cell centres
    /// (land counts as zero depth, nodata takes the nearest cell's value), or
    /// `Land` when the containing cell is land.
    pub fn depth_at(&self, p: LatLon) -> Result<DepthSample<T>, EnvError> {
        let ext = self.extent();
        if !ext.contains(p) {
            return Err(EnvError::OutOfExtent { lat: p.lat, lon: p.lon });
        }
        let fy = (self.north - p.lat) / self.dlat;
        let fx = (p.lon - self.west) / self.dlon;
        let row = (fy.floor() as usize).min(self.nrows - 1);
        let col = (fx.floor() as usize).min(self.ncols - 1);
        let mut fallback = false;
        let nearest_depth = match self.cell(row, col) {
            Cell::Land => return Ok(DepthSample::Land),
            Cell::Water(d) => d,
            Cell::NoData => match self.nearest_valid(row, col, 2) {
                Some(Cell::Water(d)) => {
                    fallback = true;
                    d
                }
                Some(_) => return Ok(DepthSample::Land),
                None => return Err(EnvError::NoData { lat: p.lat, lon: p.lon }),
            },
        };

        let (r0, tr) = axis(fy - 0.5, self.nrows);
        let (c0, tc) = axis(fx - 0.5, self.ncols);
        let r1 = (r0 + 1).min(self.nrows - 1);
        let c1 = (c0 + 1).min(self.ncols - 1);
        let mut value = |r: usize, c: usize, weight: f64| {
            if weight == 0.0 {
                return T::zero();
            }
            match self.cell(r, c) {
                Cell::Water(d) => d,
                Cell::Land => T::zero(),
                Cell::NoData => {
                    fallback = true;
                    nearest_depth
                }
            }
        };
        let v00 = value(r0, c0, (1.0 - tr) * (1.0 - tc));
        let v01 = value(r0, c1, (1.0 - tr) * tc);
        let v10 = value(r1, c0, tr * (1.0 - tc));
        let v11 = value(r1, c1, tr * tc);
        let (tr, tc) = (T::lit(tr), T::lit(tc));
        let one = T::one();
        let top = v00 * (one - tc) + v01 * tc;
        let bottom = v10 * (one - tc) + v11 * tc;
        Ok(DepthSample::Water {
            depth_m: top * (one - tr) + bottom * tr,
            fallback,
        })
    }

    /// Convenience: depth in metres, `None` for land, nodata or outside the grid.
    pub fn water_depth(&self, p: LatLon) -> Option<T> {
        self.depth_at(p).ok().and_then(|s| s.water_depth())
    }

    /// Parses an ESRI-style `.asc` grid.
    pub fn read_asc<R: Read>(mut reader: R, convention: ValueConvention) -> Result<Self, EnvError> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let mut tokens = text.split_whitespace().peekable();
        let mut header = std::collections::HashMap::new();
        while let Some(tok) = tokens.peek() {
            if tok.starts_with(|c: char| c.is_ascii_alphabetic()) {
                let key = tokens.next().unwrap().to_ascii_lowercase();
                let val = tokens
                    .next()
                    .ok_or_else(|| EnvError::Format(format!("header key {key} has no value")))?;
                let val: f64 = val
                    .parse()
                    .map_err(|_| EnvError::Format(format!("header {key}: bad number '{val}'")))?;
                header.insert(key, val);
            } else {
                break;
            }
        }
        let get = |k: &str| header.get(k).copied();
        let req = |k: &str| get(k).ok_or_else(|| EnvError::Format(format!("missing header '{k}'")));
        let ncols = req("ncols")? as usize;
        let nrows = req("nrows")? as usize;
        let (dlon, dlat) = match (get("cellsize"), get("dx"), get("dy")) {
            (Some(c), _, _) => (c, c),
            (None, Some(dx), Some(dy)) => (dx, dy),
            _ => return Err(EnvError::Format("missing header 'cellsize'".into())),
        };
        let west = match (get("xllcorner"), get("xllcenter")) {
            (Some(x), _) => x,
            (None, Some(x)) => x - dlon / 2.0,
            _ => return Err(EnvError::Format("missing header 'xllcorner'".into())),
        };
        let south = match (get("yllcorner"), get("yllcenter")) {
            (Some(y), _) => y,
            (None, Some(y)) => y - dlat / 2.0,
            _ => return Err(EnvError::Format("missing header 'yllcorner'".into())),
        };
        let nodata = get("nodata_value").map(T::lit);
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| EnvError::Format(format!("bad grid value '{t}'")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        Self::new(
            south + nrows as f64 * dlat,
            west,
            dlat,
            dlon,
            nrows,
            ncols,
            values,
            nodata,
            convention,
        )
    }

    /// Writes the grid as an `.asc` depth grid (nodata as -9999).
    pub fn to_asc_string(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let ext = self.extent();
        let _ = writeln!(out, "ncols {}\nnrows {}", self.ncols, self.nrows);
        let _ = writeln!(out, "xllcorner {}\nyllcorner {}", ext.west, ext.south);
        if self.dlat == self.dlon {
            let _ = writeln!(out, "cellsize {}", self.dlat);
        } else {
            let _ = writeln!(out, "dx {}\ndy {}", self.dlon, self.dlat);
        }
        let _ = writeln!(out, "NODATA_value -9999");
        for r in 0..self.nrows {
            let row: Vec<String> = (0..self.ncols)
                .map(|c| {
                    let v = self.depth[r * self.ncols + c];
                    if v.is_nan() {
                        "-9999".to_string()
                    } else {
                        v.to_string()
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    /// Reads a single-band GeoTIFF in geographic coordinates.
    pub fn read_geotiff<R: Read + Seek>(reader: R, convention: ValueConvention) -> Result<Self, EnvError> {
        let tiff_err = |e: tiff::TiffError| EnvError::Format(format!("GeoTIFF: {e}"));
        let mut dec = Decoder::new(reader).map_err(tiff_err)?;
        let (width, height) = dec.dimensions().map_err(tiff_err)?;
        let scale = dec.get_tag_f64_vec(Tag::ModelPixelScaleTag).map_err(tiff_err)?;
        let tie = dec.get_tag_f64_vec(Tag::ModelTiepointTag).map_err(tiff_err)?;
        if scale.len() < 2 || tie.len() < 6 {
            return Err(EnvError::Format("GeoTIFF georeferencing tags are incomplete".into()));
        }
        let nodata = match dec.get_tag_ascii_string(Tag::GdalNodata) {
            Ok(s) => s.trim_matches(char::from(0)).trim().parse::<f64>().ok().map(T::lit),
            Err(_) => None,
        };
        let values: Vec<T> = match dec.read_image().map_err(tiff_err)? {
            DecodingResult::F32(v) => v.into_iter().map(|x| T::lit(x as f64)).collect(),
            DecodingResult::F64(v) => v.into_iter().map(T::lit).collect(),
            DecodingResult::I16(v) => v.into_iter().map(|x| T::lit(x as f64)).collect(),
            DecodingResult::I32(v) => v.into_iter().map(|x| T::lit(x as f64)).collect(),
            DecodingResult::U8(v) => v.into_iter().map(|x| T::lit(x as f64)).collect(),
            DecodingResult::U16(v) => v.into_iter().map(|x| T::lit(x as f64)).collect(),
            DecodingResult::U32(v) => v.into_iter().map(|x| T::lit(x as f64)).collect(),
            _ => return Err(EnvError::Format("unsupported GeoTIFF sample format".into())),
        };
        let (w, h) = (width as usize, height as usize);
        if values.len() != w * h {
            return Err(EnvError::Format("GeoTIFF must have exactly one band".into()));
        }
        let (dlon, dlat) = (scale[0], scale[1]);
        let west = tie[3] - tie[0] * dlon;
        let north = tie[4] + tie[1] * dlat;
        Self::new(north, west, dlat, dlon, h, w, values, nodata, convention)
    }

    /// Loads by extension: `.tif`/`.tiff` as elevation, anything else as an `.asc` depth
    /// grid, unless `convention` overrides.
    pub fn load(path: &Path, convention: Option<ValueConvention>) -> Result<Self, EnvError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        let file = BufReader::new(File::open(path)?);
        if ext == "tif" || ext == "tiff" {
            Self::read_geotiff(file, convention.unwrap_or(ValueConvention::Elevation))
        } else {
            Self::read_asc(file, convention.unwrap_or(ValueConvention::Depth))
        }
    }
}

/// Lower index and fraction along one axis of cell centres.
fn axis(f: f64, n: usize) -> (usize, f64) {
    if f <= 0.0 {
        return (0, 0.0);
    }
    let i = f.floor() as usize;
    if i >= n - 1 {
        return (n - 1, 0.0);
    }
    (i, f - i as f64)
}

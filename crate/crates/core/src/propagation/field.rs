//! Per-source footprints and deterministic accumulation onto a grid.

use std::collections::HashMap;

use rayon::prelude::*;

use super::grid::{GridSpec, NoiseGrid};
use super::ray::trace_ray;
use super::{PropagationError, RayFanConfig};
use crate::bands::{broadband_centers, IndicatorBand};
use crate::environment::{thorp_alpha, EnvironmentField};
use crate::geo::{LatLon, LocalFrame};
use crate::scalar::{from_db, Scalar};
use crate::sl::SourceLevels;

/// Sources handled per parallel batch; bounds the memory held in footprints.
const BATCH: usize = 64;

/// Environment, fan and grid bound together, with per-cell receiver depths
/// and per-band absorption precomputed.
#[derive(Debug, Clone)]
pub struct PropagationContext<'a, T> {
    pub env: &'a EnvironmentField<T>,
    pub cfg: &'a RayFanConfig,
    pub spec: GridSpec,
    receivers: Vec<Option<f64>>,
    band_centers: Vec<f64>,
    /// Absorption per band as a natural-log amplitude² coefficient (1/m).
    absorption_per_m: Vec<T>,
    band_63: usize,
    band_125: usize,
}

impl<'a, T: Scalar> PropagationContext<'a, T> {
    pub fn new(env: &'a EnvironmentField<T>, cfg: &'a RayFanConfig, spec: GridSpec) -> Result<Self, PropagationError> {
        cfg.validate()?;
        let receivers = (0..spec.len())
            .map(|i| {
                env.bathymetry
                    .water_depth(spec.cell_center(i))
                    .map(|h| cfg.receiver_depth_m.min(h.to_f64_lossy()))
            })
            .collect();
        let band_centers = broadband_centers();
        let absorption_per_m = band_centers
            .iter()
            .map(|&f| thorp_alpha(T::lit(f / 1000.0)) * T::lit(std::f64::consts::LN_10 / 10_000.0))
            .collect();
        let find = |f: f64| band_centers.iter().position(|&c| c == f).expect("indicator centre in broadband set");
        Ok(Self {
            band_63: find(63.0),
            band_125: find(125.0),
            env,
            cfg,
            spec,
            receivers,
            band_centers,
            absorption_per_m,
        })
    }

    /// Band centres (Hz) that source levels must be given on.
    pub fn band_centers(&self) -> &[f64] {
        &self.band_centers
    }

    /// Receiver depth of a cell, `None` for land or cells without bathymetry.
    pub fn receiver_depth(&self, cell: usize) -> Option<f64> {
        self.receivers[cell]
    }

    /// Source depth for a vessel: `max(draft, min_source_depth)`, moved to
    /// mid-column when that would reach the seabed.
    pub fn source_depth(&self, position: LatLon, draft_m: Option<f64>) -> Result<f64, PropagationError> {
        let h = self
            .env
            .bathymetry
            .water_depth(position)
            .ok_or_else(|| {
                PropagationError::InvalidSource(format!(
                    "{},{} is on land or outside the bathymetry",
                    position.lat, position.lon
                ))
            })?
            .to_f64_lossy();
        let z = draft_m.unwrap_or(0.0).max(self.cfg.min_source_depth_m);
        Ok(if z >= h { 0.5 * h } else { z })
    }

    /// Per-cell, per-band gains `Σ_rays w²·10^(−TL/10)` for a source.
    pub fn footprint(&self, position: LatLon, source_depth_m: f64) -> Result<Footprint<T>, PropagationError> {
        let cfg = self.cfg;
        let nb = self.band_centers.len();
        let rho_max = cfg.neighborhood_m;
        let a = cfg.taper_exponent();
        let c = cfg.normalization();
        let frame = LocalFrame::new(position);
        let (m_lat, m_lon) = frame.metres_per_degree();
        let spec = &self.spec;
        let cell = spec.cell_deg;
        let x_of = |col: usize| (spec.extent.west + (col as f64 + 0.5) * cell - position.lon) * m_lon;
        let y_of = |row: usize| (spec.extent.south + (row as f64 + 0.5) * cell - position.lat) * m_lat;
        let col_range = |x_lo: f64, x_hi: f64| {
            index_range(
                (x_lo / m_lon + position.lon - spec.extent.west) / cell - 0.5,
                (x_hi / m_lon + position.lon - spec.extent.west) / cell - 0.5,
                spec.ncols,
            )
        };
        let row_range = |y_lo: f64, y_hi: f64| {
            index_range(
                (y_lo / m_lat + position.lat - spec.extent.south) / cell - 0.5,
                (y_hi / m_lat + position.lat - spec.extent.south) / cell - 0.5,
                spec.nrows,
            )
        };

        let mut slots: HashMap<u32, usize> = HashMap::new();
        let mut cells: Vec<u32> = Vec::new();
        let mut gains: Vec<T> = Vec::new();
        let mut band_gain = vec![T::zero(); nb];

        for (phi, theta) in cfg.launch_angles() {
            let path = trace_ray(position, source_depth_m, phi, theta, self.env, cfg)?;
            let (sin_p, cos_p) = phi.sin_cos();
            let (r_lo, r_hi) = path.range_span();
            let (s0, s1) = (r_lo - rho_max, r_hi + rho_max);
            let corners = [(s0, -rho_max), (s0, rho_max), (s1, -rho_max), (s1, rho_max)]
                .map(|(s, d)| (s * sin_p + d * cos_p, s * cos_p - d * sin_p));
            let x_lo = corners.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let x_hi = corners.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            let Some((c_lo, c_hi)) = col_range(x_lo, x_hi) else { continue };
            let w0 = c * theta.cos();

            for col in c_lo..=c_hi {
                let x = x_of(col);
                // Cross-track: x·cosφ − y·sinφ ∈ [−ρ, ρ]; along-track: x·sinφ + y·cosφ ∈ [s0, s1].
                let Some(cross) = solve_interval(-sin_p, x * cos_p, -rho_max, rho_max) else { continue };
                let Some(along) = solve_interval(cos_p, x * sin_p, s0, s1) else { continue };
                let (y_lo, y_hi) = (cross.0.max(along.0), cross.1.min(along.1));
                if y_lo > y_hi {
                    continue;
                }
                let Some((rw_lo, rw_hi)) = row_range(y_lo, y_hi) else { continue };
                for row in rw_lo..=rw_hi {
                    let idx = row * spec.ncols + col;
                    let Some(z_r) = self.receivers[idx] else { continue };
                    let y = y_of(row);
                    let s = x * sin_p + y * cos_p;
                    let d = x * cos_p - y * sin_p;
                    let Some(hit) = nearest_approach(&path.points, s, d, z_r) else { continue };
                    if hit.dist2 > rho_max * rho_max {
                        continue;
                    }
                    let r = hit.path_m.max(1.0);
                    let psi = (hit.dist2.sqrt() / r).atan();
                    let w = w0 * (-a * psi * psi).exp();
                    let penalties = hit.n_surface as f64 * cfg.surface_penalty_db
                        + hit.n_bottom as f64 * cfg.bottom_penalty_db;
                    let base = T::lit(w * w / (r * r)) * from_db(T::lit(-penalties));
                    let r_t = T::lit(r);
                    for (g, k) in band_gain.iter_mut().zip(&self.absorption_per_m) {
                        *g = base * (-*k * r_t).exp();
                    }
                    let slot = *slots.entry(idx as u32).or_insert_with(|| {
                        cells.push(idx as u32);
                        gains.extend(std::iter::repeat_n(T::zero(), nb));
                        cells.len() - 1
                    });
                    for (acc, g) in gains[slot * nb..(slot + 1) * nb].iter_mut().zip(&band_gain) {
                        *acc += *g;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_unstable_by_key(|&k| cells[k]);
        Ok(Footprint {
            n_bands: nb,
            cells: order.iter().map(|&k| cells[k]).collect(),
            gains: order.iter().flat_map(|&k| gains[k * nb..(k + 1) * nb].iter().copied()).collect(),
        })
    }

    fn check_levels(&self, levels: &SourceLevels<T>) -> Result<(), PropagationError> {
        let ok = levels.centers_hz.len() == self.band_centers.len()
            && levels
                .centers_hz
                .iter()
                .zip(&self.band_centers)
                .all(|(a, b)| (a.to_f64_lossy() - b).abs() < 1e-9);
        if ok {
            Ok(())
        } else {
            Err(PropagationError::Config(
                "source levels must be given on the 25–1600 Hz broadband centres".into(),
            ))
        }
    }

    fn contribution(&self, fp: &Footprint<T>, levels: &SourceLevels<T>, scale: T) -> Contribution<T> {
        let lin: Vec<T> = levels.levels_db.iter().map(|&l| from_db(l) * scale).collect();
        let values = fp
            .cells
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let g = fp.gains(k);
                let mut bb = T::zero();
                for (gb, lb) in g.iter().zip(&lin) {
                    bb += *gb * *lb;
                }
                [g[self.band_63] * lin[self.band_63], g[self.band_125] * lin[self.band_125], bb]
            })
            .collect();
        Contribution {
            cells: fp.cells.clone(),
            values,
        }
    }
}

/// Inclusive index range of cell centres within `[lo, hi]` (fractional index units).
fn index_range(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let (lo, hi) = (lo.min(hi).ceil(), lo.max(hi).floor());
    if hi < 0.0 || lo > (n - 1) as f64 || lo > hi {
        return None;
    }
    Some((lo.max(0.0) as usize, hi.min((n - 1) as f64) as usize))
}

/// Solves `lo ≤ k·y + b ≤ hi` for `y`.
fn solve_interval(k: f64, b: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if k.abs() < 1e-12 {
        return (b >= lo && b <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (p, q) = ((lo - b) / k, (hi - b) / k);
    Some((p.min(q), p.max(q)))
}

struct Approach {
    dist2: f64,
    path_m: f64,
    n_surface: u32,
    n_bottom: u32,
}

/// Closest point of the path to a receiver at along-track `s`, cross-track `d`
/// and depth `z`. Bounce counts are those in force on the nearest segment.
fn nearest_approach(points: &[super::RayPoint], s: f64, d: f64, z: f64) -> Option<Approach> {
    let mut best: Option<Approach> = None;
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (er, ez) = (b.range_m - a.range_m, b.depth_m - a.depth_m);
        let len2 = er * er + ez * ez;
        let t = if len2 > 0.0 {
            (((s - a.range_m) * er + (z - a.depth_m) * ez) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (qr, qz) = (a.range_m + t * er, a.depth_m + t * ez);
        let dist2 = d * d + (s - qr).powi(2) + (z - qz).powi(2);
        if best.as_ref().is_none_or(|bst| dist2 < bst.dist2) {
            best = Some(Approach {
                dist2,
                path_m: a.path_m + t * len2.sqrt(),
                n_surface: a.n_surface,
                n_bottom: a.n_bottom,
            });
        }
    }
    best
}

/// Sparse per-cell, per-band propagation gains of one source.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint<T> {
    n_bands: usize,
    /// Grid cell indices, ascending.
    pub cells: Vec<u32>,
    gains: Vec<T>,
}

impl<T: Scalar> Footprint<T> {
    pub fn gains(&self, k: usize) -> &[T] {
        &self.gains[k * self.n_bands..(k + 1) * self.n_bands]
    }

    pub fn gain_at(&self, cell: usize) -> Option<&[T]> {
        self.cells.binary_search(&(cell as u32)).ok().map(|k| self.gains(k))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Per-cell indicator-band energies of one source, ready to add to a grid.
#[derive(Debug, Clone)]
struct Contribution<T> {
    cells: Vec<u32>,
    values: Vec<[T; 3]>,
}

impl<T: Scalar> Contribution<T> {
    fn add_to(&self, grid: &mut NoiseGrid<T>) {
        for (band_i, band) in IndicatorBand::ALL.iter().enumerate() {
            let e = grid.energy_mut(*band);
            for (&cell, v) in self.cells.iter().zip(&self.values) {
                e[cell as usize] += v[band_i];
            }
        }
    }
}

/// A radiating vessel at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSource<T> {
    pub position: LatLon,
    pub depth_m: f64,
    /// Source levels on [`PropagationContext::band_centers`].
    pub levels: SourceLevels<T>,
}

/// One propagation run whose footprint feeds several output grids: grid `k`
/// receives `scale_k · levels_k` (e.g. baseline and speed-capped scenario).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTask<T> {
    pub position: LatLon,
    pub depth_m: f64,
    pub variants: Vec<(SourceLevels<T>, T)>,
}

/// A source that could not be propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSource {
    pub index: usize,
    pub reason: String,
}

/// Propagates every task and adds its variants to `grids` (one grid per variant).
///
/// Footprints are computed in parallel; additions happen in input order, so
/// the result does not depend on the number of worker threads.
pub fn accumulate_sources<T: Scalar>(
    ctx: &PropagationContext<'_, T>,
    tasks: &[SourceTask<T>],
    grids: &mut [NoiseGrid<T>],
) -> Result<Vec<SkippedSource>, PropagationError> {
    for t in tasks {
        if t.variants.len() != grids.len() {
            return Err(PropagationError::Config(format!(
                "task has {} variants for {} grids",
                t.variants.len(),
                grids.len()
            )));
        }
        for (levels, _) in &t.variants {
            ctx.check_levels(levels)?;
        }
    }
    let mut skipped = Vec::new();
    for (batch_no, batch) in tasks.chunks(BATCH).enumerate() {
        let results: Vec<Result<Vec<Contribution<T>>, PropagationError>> = batch
            .par_iter()
            .map(|t| {
                let fp = ctx.footprint(t.position, t.depth_m)?;
                Ok(t.variants.iter().map(|(l, k)| ctx.contribution(&fp, l, *k)).collect())
            })
            .collect();
        for (i, res) in results.into_iter().enumerate() {
            match res {
                Ok(contribs) => {
                    for (grid, c) in grids.iter_mut().zip(&contribs) {
                        c.add_to(grid);
                    }
                }
                Err(e) => {
                    let index = batch_no * BATCH + i;
                    log::warn!("source {index} skipped: {e}");
                    skipped.push(SkippedSource {
                        index,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(skipped)
}

/// Adds the received energy of `sources` to `grid`.
pub fn accumulate<T: Scalar>(
    ctx: &PropagationContext<'_, T>,
    sources: &[PointSource<T>],
    grid: &mut NoiseGrid<T>,
) -> Result<Vec<SkippedSource>, PropagationError> {
    let tasks: Vec<SourceTask<T>> = sources
        .iter()
        .map(|s| SourceTask {
            position: s.position,
            depth_m: s.depth_m,
            variants: vec![(s.levels.clone(), T::one())],
        })
        .collect();
    accumulate_sources(ctx, &tasks, std::slice::from_mut(grid))
}

//! Straight-segment ray paths in the vertical plane of a fixed azimuth.

use super::{PropagationError, RayFanConfig};
use crate::environment::{DepthSample, EnvironmentField};
use crate::geo::{LatLon, LocalFrame};
use crate::scalar::Scalar;

/// A vertex of the path. Bounce counts include the interaction at this vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPoint {
    /// Horizontal distance from the source along the azimuth (m).
    pub range_m: f64,
    /// Depth below the surface (m).
    pub depth_m: f64,
    /// Cumulative path length r_p (m).
    pub path_m: f64,
    pub n_surface: u32,
    pub n_bottom: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxRange,
    MaxBounces,
    Land,
    GridEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    pub azimuth_rad: f64,
    pub elevation_rad: f64,
    pub points: Vec<RayPoint>,
    pub termination: Termination,
}

impl RayPath {
    /// Consecutive vertex pairs.
    pub fn segments(&self) -> impl Iterator<Item = (&RayPoint, &RayPoint)> {
        self.points.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Ranges of the bottom interactions, in path order.
    pub fn bottom_bounce_ranges(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .filter(|w| w[1].n_bottom > w[0].n_bottom)
            .map(|w| w[1].range_m)
            .collect()
    }

    pub fn total_bounces(&self) -> u32 {
        self.points.last().map_or(0, |p| p.n_surface + p.n_bottom)
    }

    /// Horizontal range covered, as `(min, max)`.
    pub fn range_span(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.range_m), hi.max(p.range_m)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Probe {
    Water(f64),
    Land,
    Outside,
}

struct Seabed<'a, T> {
    env: &'a EnvironmentField<T>,
    frame: LocalFrame,
    sin_phi: f64,
    cos_phi: f64,
}

impl<T: Scalar> Seabed<'_, T> {
    fn probe(&self, r: f64) -> Probe {
        let p = self.frame.to_latlon(r * self.sin_phi, r * self.cos_phi);
        match self.env.bathymetry.depth_at(p) {
            Ok(DepthSample::Water { depth_m, .. }) => Probe::Water(depth_m.to_f64_lossy()),
            Ok(DepthSample::Land) => Probe::Land,
            Err(_) => Probe::Outside,
        }
    }

    /// dh/dr by central difference, one-sided next to invalid samples.
    fn slope(&self, r: f64, h: f64) -> f64 {
        const D: f64 = 1.0;
        match (self.probe(r - D), self.probe(r + D)) {
            (Probe::Water(a), Probe::Water(b)) => (b - a) / (2.0 * D),
            (Probe::Water(a), _) => (h - a) / D,
            (_, Probe::Water(b)) => (b - h) / D,
            _ => 0.0,
        }
    }
}

/// Marching step along the path: half the smaller bathymetry cell dimension.
fn march_step<T: Scalar>(env: &EnvironmentField<T>, frame: &LocalFrame) -> f64 {
    let (dlat, dlon) = env.bathymetry.cell_size();
    let (m_lat, m_lon) = frame.metres_per_degree();
    (0.5 * (dlat * m_lat).min(dlon * m_lon)).clamp(1.0, 1000.0)
}

enum Event {
    Surface(f64),
    Bottom(f64, f64),
    Stop(f64, Termination),
    MaxRange(f64),
}

/// Traces one ray from `source` at `source_depth_m` with launch azimuth
/// `azimuth_rad` (clockwise from north) and elevation `elevation_rad`
/// (positive up). The path ends at the boundary hit that would exceed
/// `max_bounces`, at `max_range_m` of path length, or where the seabed
/// becomes land or leaves the bathymetry grid.
pub fn trace_ray<T: Scalar>(
    source: LatLon,
    source_depth_m: f64,
    azimuth_rad: f64,
    elevation_rad: f64,
    env: &EnvironmentField<T>,
    cfg: &RayFanConfig,
) -> Result<RayPath, PropagationError> {
    let frame = LocalFrame::new(source);
    let bed = Seabed {
        env,
        frame,
        sin_phi: azimuth_rad.sin(),
        cos_phi: azimuth_rad.cos(),
    };
    let h0 = match bed.probe(0.0) {
        Probe::Water(h) => h,
        Probe::Land => {
            return Err(PropagationError::InvalidSource(format!(
                "{},{} is on land",
                source.lat, source.lon
            )))
        }
        Probe::Outside => {
            return Err(PropagationError::InvalidSource(format!(
                "{},{} has no bathymetry",
                source.lat, source.lon
            )))
        }
    };
    if !(source_depth_m > 0.0 && source_depth_m < h0) {
        return Err(PropagationError::InvalidSource(format!(
            "source depth {source_depth_m} m is not within the {h0} m water column"
        )));
    }

    let step = march_step(env, &frame);
    let (mut dr, mut dz) = (elevation_rad.cos(), -elevation_rad.sin());
    let mut cur = RayPoint {
        range_m: 0.0,
        depth_m: source_depth_m,
        path_m: 0.0,
        n_surface: 0,
        n_bottom: 0,
    };
    let mut points = vec![cur];

    let termination = loop {
        let remaining = cfg.max_range_m - cur.path_m;
        let t_surface = if dz < 0.0 { -cur.depth_m / dz } else { f64::INFINITY };
        let t_limit = t_surface.min(remaining);
        let at = |t: f64| (cur.range_m + t * dr, cur.depth_m + t * dz);
        // Height above the seabed, `None` over land or off the grid.
        let clearance = |t: f64| {
            let (r, z) = at(t);
            match bed.probe(r) {
                Probe::Water(h) => Some(z - h),
                _ => None,
            }
        };
        let is_blocked = |c: Option<f64>| c.is_none_or(|c| c >= 0.0);

        let mut event = None;
        let mut t_prev = 0.0;
        while t_prev < t_limit {
            let t_next = (t_prev + step).min(t_limit);
            let c_next = clearance(t_next);
            if is_blocked(c_next) {
                // Illinois regula falsi; plain bisection while an end is off the water.
                let (mut lo, mut hi) = (t_prev, t_next);
                let (mut c_lo, mut c_hi) = (clearance(lo), c_next);
                let mut last_side = 0i8;
                for _ in 0..200 {
                    if hi - lo < 1e-9 {
                        break;
                    }
                    let mid = match (c_lo, c_hi) {
                        (Some(a), Some(b)) if b > a => {
                            let m = lo + (hi - lo) * a / (a - b);
                            if m > lo && m < hi {
                                m
                            } else {
                                0.5 * (lo + hi)
                            }
                        }
                        _ => 0.5 * (lo + hi),
                    };
                    let c_mid = clearance(mid);
                    if is_blocked(c_mid) {
                        hi = mid;
                        c_hi = c_mid;
                        if c_mid == Some(0.0) {
                            break;
                        }
                        if last_side == 1 {
                            c_lo = c_lo.map(|c| 0.5 * c);
                        }
                        last_side = 1;
                    } else {
                        lo = mid;
                        c_lo = c_mid;
                        if last_side == -1 {
                            c_hi = c_hi.map(|c| 0.5 * c);
                        }
                        last_side = -1;
                    }
                }
                let (r_hit, _) = at(hi);
                event = Some(match bed.probe(r_hit) {
                    Probe::Water(h) => Event::Bottom(hi, h),
                    Probe::Land => Event::Stop(lo, Termination::Land),
                    Probe::Outside => Event::Stop(lo, Termination::GridEdge),
                });
                break;
            }
            t_prev = t_next;
        }
        let event = event.unwrap_or(if t_surface <= remaining {
            Event::Surface(t_surface)
        } else {
            Event::MaxRange(remaining)
        });

        let t = match event {
            Event::Surface(t) | Event::Bottom(t, _) | Event::Stop(t, _) | Event::MaxRange(t) => t,
        };
        let (r, z) = at(t);
        cur = RayPoint {
            range_m: r,
            depth_m: z,
            path_m: cur.path_m + t,
            ..cur
        };
        let exhausted = cur.n_surface + cur.n_bottom >= cfg.max_bounces;
        match event {
            Event::MaxRange(_) => {
                points.push(cur);
                break Termination::MaxRange;
            }
            Event::Stop(_, why) => {
                points.push(cur);
                break why;
            }
            Event::Surface(_) | Event::Bottom(..) if exhausted => {
                points.push(cur);
                break Termination::MaxBounces;
            }
            Event::Surface(_) => {
                cur.depth_m = 0.0;
                cur.n_surface += 1;
                dz = -dz;
            }
            Event::Bottom(_, h) => {
                cur.depth_m = h;
                cur.n_bottom += 1;
                let s = bed.slope(r, h);
                let norm = (1.0 + s * s).sqrt();
                let (nr, nz) = (-s / norm, 1.0 / norm);
                let dot = dr * nr + dz * nz;
                dr -= 2.0 * dot * nr;
                dz -= 2.0 * dot * nz;
            }
        }
        points.push(cur);
    };

    Ok(RayPath {
        azimuth_rad,
        elevation_rad,
        points,
        termination,
    })
}

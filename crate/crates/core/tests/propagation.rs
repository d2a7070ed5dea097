use proptest::prelude::*;
use urnmap_core::bands::broadband_centers;
use urnmap_core::environment::{thorp_alpha, BathymetryGrid, EnvironmentField};
use urnmap_core::geo::{BoundingBox, LatLon, EARTH_RADIUS_M};
use urnmap_core::propagation::{
    accumulate, beam_weight, grid_to_spl, trace_ray, transmission_loss, GridSpec, NoiseGrid, PointSource,
    PropagationContext, RayFanConfig,
};
use urnmap_core::{IndicatorBand, SourceLevels};

const SRC: LatLon = LatLon::new(44.0, 13.0);

fn flat_env(depth: f64) -> EnvironmentField<f64> {
    let ext = BoundingBox::new(43.5, 12.5, 44.5, 13.5).unwrap();
    EnvironmentField::new(BathymetryGrid::flat(ext, 0.005, depth))
}

fn flat_levels(db: f64) -> SourceLevels<f64> {
    let centers = broadband_centers();
    SourceLevels {
        levels_db: vec![db; centers.len()],
        centers_hz: centers,
    }
}

fn metres_per_degree(lat: f64) -> (f64, f64) {
    let m = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    (m, m * lat.to_radians().cos())
}

/// 5×5 grid whose centre cell lies 1000 m due north of `SRC`.
fn five_by_five(cell_deg: f64) -> GridSpec {
    let (m_lat, _) = metres_per_degree(SRC.lat);
    let c_lat = SRC.lat + 1000.0 / m_lat;
    let ext = BoundingBox::new(
        c_lat - 2.5 * cell_deg,
        SRC.lon - 2.5 * cell_deg,
        c_lat + 2.5 * cell_deg,
        SRC.lon + 2.5 * cell_deg,
    )
    .unwrap();
    GridSpec::new(ext, cell_deg).unwrap()
}

/// Brute-force energy at a receiver from one ray in an isovelocity waveguide of
/// depth `h`, using the unfolded (image) ray: the physical path folded back
/// into the water column is the straight line through the image slabs.
#[allow(clippy::too_many_arguments)]
fn image_ray_energy(
    cfg: &RayFanConfig,
    phi: f64,
    theta: f64,
    z_s: f64,
    h: f64,
    x: f64,
    y: f64,
    z_r: f64,
    f_hz: f64,
    sl_db: f64,
) -> f64 {
    let s = x * phi.sin() + y * phi.cos();
    let d = x * phi.cos() - y * phi.sin();
    let (cr, cz) = (theta.cos(), -theta.sin());
    let max_slab = cfg.max_bounces as i64;
    // Parameter along the unfolded ray at which slab boundary Z = k·h is reached.
    let t_at = |z_boundary: f64| (z_boundary - z_s) / cz;
    let t_end = if cz == 0.0 {
        cfg.max_range_m
    } else {
        let boundary = if cz > 0.0 { (max_slab + 1) as f64 * h } else { -(max_slab as f64) * h };
        t_at(boundary).min(cfg.max_range_m)
    };
    let mut best: Option<(f64, f64, i64)> = None;
    let slabs: Vec<i64> = if cz > 0.0 {
        (0..=max_slab).collect()
    } else if cz < 0.0 {
        (0..=max_slab).map(|k| -k).collect()
    } else {
        vec![0]
    };
    for n in slabs {
        let (t_a, t_b) = if cz == 0.0 {
            (0.0, t_end)
        } else {
            let (z0, z1) = (n as f64 * h, (n + 1) as f64 * h);
            let (ta, tb) = (t_at(z0), t_at(z1));
            (ta.min(tb).max(0.0), ta.max(tb).min(t_end))
        };
        if t_a >= t_b {
            continue;
        }
        let z_img = if n.rem_euclid(2) == 0 { n as f64 * h + z_r } else { (n + 1) as f64 * h - z_r };
        // Closest point on the unfolded segment to (s, d, z_img).
        let t = ((s * cr + (z_img - z_s) * cz)).clamp(t_a, t_b);
        let dist2 = d * d + (s - t * cr).powi(2) + (z_img - (z_s + t * cz)).powi(2);
        if best.is_none_or(|(b, _, _)| dist2 < b) {
            best = Some((dist2, t, n));
        }
    }
    let Some((dist2, r_p, n)) = best else { return 0.0 };
    if dist2 > cfg.neighborhood_m.powi(2) {
        return 0.0;
    }
    let (n_surface, n_bottom) = if n >= 0 {
        ((n / 2) as u32, ((n + 1) / 2) as u32)
    } else {
        (((-n + 1) / 2) as u32, (-n / 2) as u32)
    };
    let r = r_p.max(1.0);
    let w = beam_weight((dist2.sqrt() / r).atan(), theta, cfg);
    let tl = 20.0 * r.log10()
        + thorp_alpha(f_hz / 1000.0) * r / 1000.0
        + n_surface as f64 * cfg.surface_penalty_db
        + n_bottom as f64 * cfg.bottom_penalty_db;
    w * w * 10f64.powf((sl_db - tl) / 10.0)
}

#[test]
fn five_by_five_grid_matches_per_ray_oracle() {
    let cfg = RayFanConfig::default();
    let env = flat_env(100.0);
    let spec = five_by_five(0.0025);
    let ctx = PropagationContext::new(&env, &cfg, spec).unwrap();
    let z_s = ctx.source_depth(SRC, Some(10.0)).unwrap();
    assert_eq!(z_s, 10.0);
    let mut grid = NoiseGrid::new(spec);
    let src = PointSource {
        position: SRC,
        depth_m: z_s,
        levels: flat_levels(180.0),
    };
    assert!(accumulate(&ctx, &[src], &mut grid).unwrap().is_empty());

    let (m_lat, m_lon) = metres_per_degree(SRC.lat);
    let mut nonzero = 0;
    for i in 0..spec.len() {
        let c = spec.cell_center(i);
        let (x, y) = ((c.lon - SRC.lon) * m_lon, (c.lat - SRC.lat) * m_lat);
        let expected: f64 = cfg
            .launch_angles()
            .into_iter()
            .map(|(phi, theta)| image_ray_energy(&cfg, phi, theta, z_s, 100.0, x, y, 10.0, 63.0, 180.0))
            .sum();
        let got = grid.energy(IndicatorBand::Tob63)[i];
        assert!(
            (got - expected).abs() <= 1e-9 * expected.abs().max(1e-300),
            "cell {i}: got {got}, oracle {expected}"
        );
        if expected > 0.0 {
            nonzero += 1;
        }
    }
    assert_eq!(nonzero, 25);
    // The centre cell sits on the horizontal φ=0 ray at r_p = 1000 m.
    let on_axis = image_ray_energy(&cfg, 0.0, 0.0, z_s, 100.0, 0.0, 1000.0, 10.0, 63.0, 180.0);
    let expected_axis = cfg.normalization().powi(2) * 10f64.powf((180.0 - 60.0 - thorp_alpha(0.063)) / 10.0);
    assert!((on_axis - expected_axis).abs() < 1e-12 * expected_axis);
}

#[test]
fn fan_has_468_rays() {
    let cfg = RayFanConfig::default();
    assert_eq!(cfg.launch_angles().len(), 468);
}

fn small_grid() -> GridSpec {
    GridSpec::new(BoundingBox::new(43.9, 12.9, 44.1, 13.1).unwrap(), 0.01).unwrap()
}

#[test]
fn duplicated_vessel_adds_three_db() {
    let cfg = RayFanConfig::default();
    let env = flat_env(80.0);
    let spec = small_grid();
    let ctx = PropagationContext::new(&env, &cfg, spec).unwrap();
    let src = PointSource {
        position: LatLon::new(44.003, 13.004),
        depth_m: 6.0,
        levels: flat_levels(175.0),
    };
    let mut one = NoiseGrid::new(spec);
    accumulate(&ctx, std::slice::from_ref(&src), &mut one).unwrap();
    let mut two = NoiseGrid::new(spec);
    accumulate(&ctx, &[src.clone(), src], &mut two).unwrap();
    for band in IndicatorBand::ALL {
        let (a, b) = (grid_to_spl(&one, band), grid_to_spl(&two, band));
        let mut cells = 0;
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (Some(x), Some(y)) => {
                    assert!((y - x - 10.0 * 2f64.log10()).abs() < 1e-9);
                    cells += 1;
                }
                (None, None) => {}
                _ => panic!("absent/present mismatch"),
            }
        }
        assert!(cells > 100, "{band}: {cells}");
    }
}

fn several_sources() -> Vec<PointSource<f64>> {
    (0..9)
        .map(|k| PointSource {
            position: LatLon::new(43.95 + 0.011 * k as f64, 12.97 + 0.017 * k as f64),
            depth_m: 3.0 + k as f64,
            levels: flat_levels(160.0 + 2.0 * k as f64),
        })
        .collect()
}

#[test]
fn result_independent_of_worker_count() {
    let cfg = RayFanConfig::default();
    let env = flat_env(60.0);
    let spec = small_grid();
    let ctx = PropagationContext::new(&env, &cfg, spec).unwrap();
    let sources = several_sources();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut g = NoiseGrid::new(spec);
            accumulate(&ctx, &sources, &mut g).unwrap();
            g
        })
    };
    let serial = run(1);
    for threads in [2, 4, 7] {
        let par = run(threads);
        for band in IndicatorBand::ALL {
            let same = serial
                .energy(band)
                .iter()
                .zip(par.energy(band))
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same, "{threads} threads differ in {band}");
        }
    }
}

#[test]
fn order_independent_and_monotone() {
    let cfg = RayFanConfig::default();
    let env = flat_env(60.0);
    let spec = small_grid();
    let ctx = PropagationContext::new(&env, &cfg, spec).unwrap();
    let sources = several_sources();
    let mut forward = NoiseGrid::new(spec);
    accumulate(&ctx, &sources, &mut forward).unwrap();
    let mut reversed_src = sources.clone();
    reversed_src.reverse();
    let mut reversed = NoiseGrid::new(spec);
    accumulate(&ctx, &reversed_src, &mut reversed).unwrap();
    let mut fewer = NoiseGrid::new(spec);
    accumulate(&ctx, &sources[1..], &mut fewer).unwrap();
    for band in IndicatorBand::ALL {
        for ((a, b), c) in forward.energy(band).iter().zip(reversed.energy(band)).zip(fewer.energy(band)) {
            assert!((a - b).abs() <= 1e-9 * a.abs());
            assert!(c <= a);
        }
    }
}

#[test]
fn empty_source_list_leaves_grid_unchanged() {
    let cfg = RayFanConfig::default();
    let env = flat_env(60.0);
    let ctx = PropagationContext::new(&env, &cfg, small_grid()).unwrap();
    let mut g = NoiseGrid::new(small_grid());
    g.energy_mut(IndicatorBand::Tob125)[3] = 42.0;
    let before = g.clone();
    accumulate(&ctx, &[], &mut g).unwrap();
    assert_eq!(g, before);
}

#[test]
fn vessel_on_land_is_skipped() {
    let cfg = RayFanConfig::default();
    let ext = BoundingBox::new(43.5, 12.5, 44.5, 13.5).unwrap();
    let env = EnvironmentField::new(BathymetryGrid::from_fn(ext, 0.005, |p| {
        Some(if p.lon > 13.05 { -10.0 } else { 50.0 })
    }));
    let ctx = PropagationContext::new(&env, &cfg, small_grid()).unwrap();
    let mut g = NoiseGrid::new(small_grid());
    let srcs = vec![
        PointSource {
            position: LatLon::new(44.0, 13.08),
            depth_m: 3.0,
            levels: flat_levels(170.0),
        },
        PointSource {
            position: LatLon::new(44.0, 12.95),
            depth_m: 3.0,
            levels: flat_levels(170.0),
        },
    ];
    let skipped = accumulate(&ctx, &srcs, &mut g).unwrap();
    assert_eq!(skipped.len(), 1);
    assert_eq!(skipped[0].index, 0);
    // Land cells receive nothing.
    let land_cell = g.spec.nearest_cell(LatLon::new(44.0, 13.08)).unwrap();
    assert_eq!(g.energy(IndicatorBand::Bb20To2000)[land_cell], 0.0);
    assert!(g.energy(IndicatorBand::Bb20To2000).iter().any(|&e| e > 0.0));
}

/// Fine-step reflection simulation over an analytic linear slope.
fn slope_oracle_bounces(z_s: f64, theta: f64, h: impl Fn(f64) -> f64, slope: f64, n: usize) -> Vec<f64> {
    let (mut r, mut z) = (0.0f64, z_s);
    let (mut dr, mut dz) = (theta.cos(), -theta.sin());
    let dt = 0.01;
    let mut out = Vec::new();
    while out.len() < n && r < 50_000.0 {
        let (nr, nz) = (r + dt * dr, z + dt * dz);
        if nz <= 0.0 {
            let t = -z / dz;
            r += t * dr;
            z = 0.0;
            dz = -dz;
            continue;
        }
        if nz >= h(nr) {
            // Linear bottom: solve z + t·dz = h(r + t·dr) exactly within the step.
            let t = (h(r) - z) / (dz - slope * dr);
            r += t * dr;
            z = h(r);
            out.push(r);
            let norm = (1.0 + slope * slope).sqrt();
            let (ur, uz) = (-slope / norm, 1.0 / norm);
            let dot = dr * ur + dz * uz;
            dr -= 2.0 * dot * ur;
            dz -= 2.0 * dot * uz;
            continue;
        }
        r = nr;
        z = nz;
    }
    out
}

#[test]
fn upslope_bounce_spacing_shortens() {
    // Depth falls linearly from 100 m to 20 m over 0.1° of latitude northward.
    let (m_lat, _) = metres_per_degree(44.0);
    let run = 0.1 * m_lat;
    let slope = -80.0 / run;
    let ext = BoundingBox::new(43.99, 12.9, 44.2, 13.1).unwrap();
    let env = EnvironmentField::new(BathymetryGrid::from_fn(ext, 0.0005, |p| {
        let dist = (p.lat - 44.0) * m_lat;
        Some((100.0 - 80.0 * dist / run).max(20.0))
    }));
    let src = LatLon::new(44.0, 13.0);
    let cfg = RayFanConfig {
        max_bounces: 40,
        ..Default::default()
    };
    let theta = -10f64.to_radians();
    let path = trace_ray(src, 10.0, 0.0, theta, &env, &cfg).unwrap();
    let got = path.bottom_bounce_ranges();
    let h = |r: f64| 100.0 + slope * r;
    let expected = slope_oracle_bounces(10.0, theta, h, slope, got.len());
    let inside: Vec<(f64, f64)> = got
        .iter()
        .zip(&expected)
        .map(|(a, b)| (*a, *b))
        .take_while(|(a, _)| *a < run - 200.0)
        .collect();
    assert!(inside.len() >= 5, "{got:?}");
    for (a, b) in &inside {
        assert!((a - b).abs() < 0.5, "trace {a} vs oracle {b}");
    }
    let spacing: Vec<f64> = inside.windows(2).map(|w| w[1].0 - w[0].0).collect();
    assert!(spacing.windows(2).all(|w| w[1] < w[0]), "{spacing:?}");
}

proptest! {
    #[test]
    fn received_level_decreases_with_range(r in 1.0f64..90_000.0, dr in 0.01f64..5_000.0, f in 10.0f64..2500.0, ns in 0u32..5, nb in 0u32..5) {
        let cfg = RayFanConfig::default();
        prop_assert!(transmission_loss(r + dr, f, ns, nb, &cfg) > transmission_loss(r, f, ns, nb, &cfg));
    }

    #[test]
    fn beam_weight_even_and_peaked(psi in -1.5f64..1.5, theta in -0.6f64..0.6) {
        let cfg = RayFanConfig::default();
        prop_assert_eq!(beam_weight(psi, theta, &cfg), beam_weight(-psi, theta, &cfg));
        prop_assert!(beam_weight(psi, theta, &cfg) <= beam_weight(0.0, theta, &cfg));
    }
}

#[test]
fn flat_taper_limit() {
    let cfg = RayFanConfig {
        beam_shape: 1.0 - 1e-12,
        ..Default::default()
    };
    let theta = 0.2f64;
    let flat = cfg.normalization() * theta.cos();
    for psi in [0.0, 0.1, 0.5] {
        assert!((beam_weight(psi, theta, &cfg) - flat).abs() < 1e-9);
    }
}

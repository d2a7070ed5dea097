use chrono::{DateTime, Duration, Utc};
use proptest::prelude::*;
use urnmap_core::environment::{BathymetryGrid, EnvironmentField, MpaPolygon};
use urnmap_core::exposure::{
    read_measurements, region_energetic_mean, segmentize, sel_grid, validate_against_measurement, validation_csv,
    ExposureWindow, LevelTable, SpeedCap, TrackSegment,
};
use urnmap_core::geo::{BoundingBox, LatLon, Polygon};
use urnmap_core::propagation::{accumulate, GridSpec, NoiseGrid, PointSource, PropagationContext, RayFanConfig};
use urnmap_core::products::estimate_vessel;
use urnmap_core::{IndicatorBand, SlModelId, SourceModels, VesselRecord};

fn t0() -> DateTime<Utc> {
    "2025-07-01T00:00:00Z".parse().unwrap()
}

fn env() -> EnvironmentField<f64> {
    let ext = BoundingBox::new(42.5, 14.5, 43.5, 15.5).unwrap();
    EnvironmentField::new(BathymetryGrid::from_fn(ext, 0.005, |p| Some(90.0 + 40.0 * (p.lon - 14.5))))
}

fn spec() -> GridSpec {
    GridSpec::new(BoundingBox::new(42.9, 14.9, 43.1, 15.1).unwrap(), 0.01).unwrap()
}

fn report(mmsi: u32, secs: i64, lat: f64, lon: f64, sog: f64, ais_type: u8) -> VesselRecord {
    VesselRecord {
        mmsi,
        name: None,
        timestamp: t0() + Duration::seconds(secs),
        lat,
        lon,
        sog_kn: sog,
        cog_deg: Some(90.0),
        ais_type,
        length_m: Some(190.0),
        beam_m: Some(30.0),
        draft_m: Some(9.0),
        nav_status: 0,
        je_class: None,
    }
}

fn window(hours: i64) -> ExposureWindow {
    ExposureWindow::new(t0(), t0() + Duration::hours(hours), spec()).unwrap()
}

#[test]
fn unit_time_exposure_equals_spl_and_scales_with_duration() {
    let env = env();
    let cfg = RayFanConfig::default();
    let ctx = PropagationContext::new(&env, &cfg, spec()).unwrap();
    let models = SourceModels::<f64>::builtin();
    let recs = [report(1, 0, 43.0, 15.0, 14.0, 70), report(1, 1, 43.0, 15.0, 14.0, 70)];
    let segs = segmentize::<f64>(&recs, 1800.0);
    let run = sel_grid(&ctx, &models, SlModelId::Combined, &segs, &window(1), None).unwrap();
    assert_eq!(run.used, 1);

    let (_, levels) = estimate_vessel(&models, SlModelId::Combined, &recs[0]);
    let mut spl = NoiseGrid::new(spec());
    let depth = ctx.source_depth(LatLon::new(43.0, 15.0), Some(9.0)).unwrap();
    accumulate(
        &ctx,
        &[PointSource {
            position: LatLon::new(43.0, 15.0),
            depth_m: depth,
            levels: levels.unwrap(),
        }],
        &mut spl,
    )
    .unwrap();
    for band in IndicatorBand::ALL {
        assert_eq!(run.baseline.energy(band), spl.energy(band));
    }

    let hour = [report(1, 0, 43.0, 15.0, 14.0, 70), report(1, 3600, 43.0, 15.0, 14.0, 70)];
    let segs = segmentize::<f64>(&hour, 3600.0);
    let run_h = sel_grid(&ctx, &models, SlModelId::Combined, &segs, &window(2), None).unwrap();
    let (a, b) = (run.baseline.levels_db(IndicatorBand::Tob63), run_h.baseline.levels_db(IndicatorBand::Tob63));
    let mut finite = 0;
    for (x, y) in a.iter().zip(&b) {
        if let (Some(x), Some(y)) = (x, y) {
            assert!((y - x - 35.563_025_007_672_87).abs() < 1e-9);
            finite += 1;
        }
    }
    assert!(finite > 100);
}

#[test]
fn identical_segments_add_three_db() {
    let env = env();
    let cfg = RayFanConfig::default();
    let ctx = PropagationContext::new(&env, &cfg, spec()).unwrap();
    let models = SourceModels::<f64>::builtin();
    let one = segmentize::<f64>(&[report(1, 0, 43.0, 15.0, 14.0, 70), report(1, 60, 43.0, 15.01, 14.0, 70)], 1800.0);
    let two: Vec<TrackSegment<f64>> = one.iter().chain(&one).cloned().collect();
    let g1 = sel_grid(&ctx, &models, SlModelId::Combined, &one, &window(1), None).unwrap();
    let g2 = sel_grid(&ctx, &models, SlModelId::Combined, &two, &window(1), None).unwrap();
    for (x, y) in g1
        .baseline
        .levels_db(IndicatorBand::Bb20To2000)
        .iter()
        .zip(g2.baseline.levels_db(IndicatorBand::Bb20To2000))
    {
        if let (Some(x), Some(y)) = (x, y) {
            assert!((y - x - 3.010_299_956_639_812).abs() < 1e-9);
        }
    }
}

/// Two vessels crossing the grid west to east, reporting every 2 minutes.
fn crossing_records() -> Vec<VesselRecord> {
    let mut out = Vec::new();
    for (k, (mmsi, lat, sog, ty)) in [(11u32, 42.97, 18.0, 70u8), (12, 43.03, 9.0, 80)].into_iter().enumerate() {
        for i in 0..60 {
            let secs = 900 * k as i64 + 120 * i;
            out.push(report(mmsi, secs, lat, 14.92 + 0.0027 * i as f64, sog, ty));
        }
    }
    out
}

#[test]
fn disjoint_windows_add_up() {
    let env = env();
    let cfg = RayFanConfig::default();
    let ctx = PropagationContext::new(&env, &cfg, spec()).unwrap();
    let models = SourceModels::<f64>::builtin();
    let segs = segmentize::<f64>(&crossing_records(), 1800.0);
    let full = sel_grid(&ctx, &models, SlModelId::Combined, &segs, &window(3), None).unwrap();
    let mid = t0() + Duration::seconds(2345);
    let w1 = ExposureWindow::new(t0(), mid, spec()).unwrap();
    let w2 = ExposureWindow::new(mid, t0() + Duration::hours(3), spec()).unwrap();
    let mut sum = sel_grid(&ctx, &models, SlModelId::Combined, &segs, &w1, None).unwrap().baseline;
    sum.add_grid(&sel_grid(&ctx, &models, SlModelId::Combined, &segs, &w2, None).unwrap().baseline);
    for band in IndicatorBand::ALL {
        for (a, b) in full.baseline.energy(band).iter().zip(sum.energy(band)) {
            assert!((a - b).abs() <= 1e-9 * a.abs());
        }
    }
}

#[test]
fn scaling_durations_shifts_sel_uniformly() {
    let env = env();
    let cfg = RayFanConfig::default();
    let ctx = PropagationContext::new(&env, &cfg, spec()).unwrap();
    let models = SourceModels::<f64>::builtin();
    let base = crossing_records();
    let segs = segmentize::<f64>(&base, 1800.0);
    let run = sel_grid(&ctx, &models, SlModelId::Combined, &segs, &window(24), None).unwrap();
    let k = 3.0;
    let stretched: Vec<VesselRecord> = base
        .iter()
        .map(|r| VesselRecord {
            timestamp: t0() + (r.timestamp - t0()) * 3,
            ..r.clone()
        })
        .collect();
    let segs_k = segmentize::<f64>(&stretched, 1800.0);
    let run_k = sel_grid(&ctx, &models, SlModelId::Combined, &segs_k, &window(24), None).unwrap();
    let shift = 10.0 * f64::log10(k);
    for band in IndicatorBand::ALL {
        for (a, b) in run.baseline.levels_db(band).iter().zip(run_k.baseline.levels_db(band)) {
            match (a, b) {
                (Some(a), Some(b)) => assert!((b - a - shift).abs() < 1e-9),
                (None, None) => {}
                _ => panic!("presence differs"),
            }
        }
    }
}

fn zone() -> MpaPolygon {
    MpaPolygon::new(
        "z1",
        "test zone",
        Polygon::from_latlon(&[(42.96, 14.98), (42.96, 15.02), (43.04, 15.02), (43.04, 14.98)]).unwrap(),
    )
}

#[test]
fn speed_cap_never_raises_exposure() {
    let env = env();
    let cfg = RayFanConfig::default();
    let ctx = PropagationContext::new(&env, &cfg, spec()).unwrap();
    let models = SourceModels::<f64>::with_placeholders();
    let segs = segmentize::<f64>(&crossing_records(), 1800.0);
    let cap = SpeedCap::new(11.0, zone(), 5.0).unwrap();
    for model in [SlModelId::Randi, SlModelId::Combined] {
        let run = sel_grid(&ctx, &models, model, &segs, &window(3), Some(&cap)).unwrap();
        let scen = run.scenario.as_ref().unwrap();
        for band in IndicatorBand::ALL {
            for (b, s) in run.baseline.energy(band).iter().zip(scen.energy(band)) {
                assert!(s <= b, "{model} {band}: {s} > {b}");
            }
            let mb = region_energetic_mean(&run.baseline, band, &cap.zone).unwrap().unwrap();
            let ms = region_energetic_mean(scen, band, &cap.zone).unwrap().unwrap();
            assert!(ms < mb, "{model} {band}");
        }
    }
    // A cap above every speed changes nothing.
    let loose = SpeedCap::new(30.0, zone(), 5.0).unwrap();
    let run = sel_grid(&ctx, &models, SlModelId::Combined, &segs, &window(3), Some(&loose)).unwrap();
    assert_eq!(run.scenario.unwrap(), run.baseline);
}

#[test]
fn level_table_round_trip_is_byte_identical() {
    let env = env();
    let cfg = RayFanConfig::default();
    let ctx = PropagationContext::new(&env, &cfg, spec()).unwrap();
    let models = SourceModels::<f64>::builtin();
    let segs = segmentize::<f64>(&crossing_records(), 1800.0);
    let run = sel_grid(&ctx, &models, SlModelId::Combined, &segs, &window(3), None).unwrap();
    let csv = run.baseline.to_csv("sel");
    let table = LevelTable::read_csv(csv.as_bytes(), "sel").unwrap();
    assert_eq!(table.to_csv(), csv);
    assert_eq!(LevelTable::from_grid(&run.baseline, "sel").to_csv(), csv);
    let again = LevelTable::read_csv(table.to_csv().as_bytes(), "sel").unwrap();
    assert_eq!(again, table);
}

const TABLE2_MEASURED: &str = "\
date,lat,lon,sel_63_db,sel_125_db,sel_bb_db
2025-08-06,32.8340,34.9560,152.62,153.09,165.58
2025-08-07,32.8340,34.9560,157.62,158.05,170.57
";

fn modeled_table(levels: [f64; 3]) -> LevelTable {
    let mut csv = String::from("lat,lon,sel_63_db,sel_125_db,sel_bb_db\n");
    for dlat in [-0.01, 0.0, 0.01] {
        for dlon in [-0.01, 0.0, 0.01] {
            let (a, b, c) = if dlat == 0.0 && dlon == 0.0 {
                (levels[0], levels[1], levels[2])
            } else {
                (140.0, 140.0, 150.0)
            };
            csv.push_str(&format!("{:.6},{:.6},{a:.3},{b:.3},{c:.3}\n", 32.835 + dlat, 34.955 + dlon));
        }
    }
    LevelTable::read_csv(csv.as_bytes(), "sel").unwrap()
}

#[test]
fn table2_differencing() {
    let measured = read_measurements(TABLE2_MEASURED.as_bytes()).unwrap();
    let rows = vec![
        validate_against_measurement(&modeled_table([152.68, 144.83, 159.86]), &measured[0]).unwrap(),
        validate_against_measurement(&modeled_table([161.69, 154.29, 168.43]), &measured[1]).unwrap(),
    ];
    let out = validation_csv(&rows);
    let diffs: Vec<&str> = out.lines().filter(|l| l.contains(",difference,")).collect();
    assert_eq!(
        diffs,
        vec!["2025-08-06,difference,0.06,-8.26,-5.72", "2025-08-07,difference,4.07,-3.76,-2.14"]
    );

    let same = validate_against_measurement(&modeled_table([152.62, 153.09, 165.58]), &measured[0]).unwrap();
    assert!(validation_csv(&[same]).contains("2025-08-06,difference,0.00,0.00,0.00"));

    let far = urnmap_core::exposure::Measurement {
        lat: 33.5,
        ..measured[0].clone()
    };
    assert!(validate_against_measurement(&modeled_table([1.0, 1.0, 1.0]), &far).is_err());
    let missing = "date,lat,lon,sel_63_db,sel_bb_db\n2025-08-06,32.83,34.95,1,2\n";
    let err = read_measurements(missing.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("sel_125_db"), "{err}");
}

proptest! {
    #[test]
    fn segmentation_conserves_covered_time(gaps in prop::collection::vec(1i64..5000, 0..40), vessels in 1u32..4) {
        let mut recs = Vec::new();
        let mut expected = 0.0;
        for v in 0..vessels {
            let mut t = 0i64;
            recs.push(report(100 + v, t, 43.0, 15.0, 10.0, 70));
            for (i, g) in gaps.iter().enumerate() {
                let g = g + v as i64 * (i as i64 % 3);
                t += g;
                if g <= 1800 {
                    expected += g as f64;
                }
                recs.push(report(100 + v, t, 43.0, 15.0, 10.0, 70));
            }
        }
        recs.reverse();
        let segs = segmentize::<f64>(&recs, 1800.0);
        let covered: f64 = segs.iter().map(|s| s.duration_s()).sum();
        prop_assert!((covered - expected).abs() < 1e-6);
        prop_assert!(segs.iter().all(|s| s.duration_s() > 0.0 && s.duration_s() <= 1800.0));
    }
}

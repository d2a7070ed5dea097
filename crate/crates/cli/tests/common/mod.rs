//! Synthetic inputs shared by the CLI tests and the acceptance run.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use urnmap_ais::export_csv;
use urnmap_core::{BathymetryGrid, BoundingBox, LatLon, MpaPolygon, Polygon, VesselRecord};

/// 1°×1° study extent.
pub const EXTENT: &str = "42.5,14.5,43.5,15.5";
pub const CENTER: LatLon = LatLon::new(43.0, 15.0);

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 7, 1, 0, 0, 0).unwrap()
}

pub fn extent() -> BoundingBox {
    BoundingBox::parse(EXTENT).unwrap()
}

/// Sloping shelf, 60 m in the west to 140 m in the east, with margin around
/// the study extent so that sources near its edge still propagate.
pub fn bathymetry() -> BathymetryGrid<f64> {
    let ext = BoundingBox::new(42.3, 14.3, 43.7, 15.7).unwrap();
    BathymetryGrid::from_fn(ext, 0.01, |p| Some(60.0 + 57.0 * (p.lon - 14.3)))
}

fn metres_per_degree(lat: f64) -> (f64, f64) {
    let m = urnmap_core::geo::EARTH_RADIUS_M.to_radians();
    (m, m * lat.to_radians().cos())
}

/// Square of `side_km` centred on [`CENTER`].
pub fn square_zone(id: &str, side_km: f64) -> MpaPolygon {
    let (m_lat, m_lon) = metres_per_degree(CENTER.lat);
    let dlat = 500.0 * side_km / m_lat;
    let dlon = 500.0 * side_km / m_lon;
    let poly = Polygon::from_latlon(&[
        (CENTER.lat - dlat, CENTER.lon - dlon),
        (CENTER.lat - dlat, CENTER.lon + dlon),
        (CENTER.lat + dlat, CENTER.lon + dlon),
        (CENTER.lat + dlat, CENTER.lon - dlon),
    ])
    .unwrap();
    MpaPolygon::new(id, "", poly)
}

pub fn zones_geojson(zones: &[MpaPolygon]) -> String {
    let features: Vec<_> = zones.iter().map(|z| z.to_geojson()).collect();
    serde_json::json!({"type": "FeatureCollection", "features": features}).to_string()
}

/// Twenty cargo and tanker tracks, one daily west-to-east crossing each for
/// seven days, passing within 4 km of the centre. Reports every 10 minutes
/// while in transit.
pub fn weekly_tracks() -> Vec<VesselRecord> {
    let (m_lat, m_lon) = metres_per_degree(CENTER.lat);
    let mut out = Vec::new();
    for v in 0..20u32 {
        let tanker = v % 3 == 0;
        let sog = 12.0 + 0.4 * v as f64;
        let lat = CENTER.lat + (v as f64 - 9.5) * 400.0 / m_lat;
        let length = 120.0 + 9.0 * v as f64;
        let step_deg = sog * 1852.0 / 6.0 / m_lon;
        for day in 0..7 {
            let start = t0() + Duration::days(day) + Duration::minutes(37 * v as i64 + 11 * day);
            let mut lon = 14.45;
            let mut i = 0;
            while lon <= 15.55 {
                out.push(VesselRecord {
                    mmsi: 247_100_000 + v,
                    name: None,
                    timestamp: start + Duration::minutes(10 * i),
                    lat: lat + 0.002 * (i as f64 * 0.7).sin(),
                    lon,
                    sog_kn: sog + 0.3 * (i as f64 * 1.3).cos(),
                    cog_deg: Some(90.0),
                    ais_type: if tanker { 80 } else { 70 },
                    length_m: Some(length),
                    beam_m: Some(length / 7.0),
                    draft_m: Some(6.0 + 0.05 * v as f64),
                    nav_status: 0,
                    je_class: None,
                });
                lon += step_deg;
                i += 1;
            }
        }
    }
    out
}

/// Input files for the CLI under `dir`.
pub struct Inputs {
    pub dir: PathBuf,
    pub bathymetry: PathBuf,
    pub mpas: PathBuf,
    pub records: PathBuf,
    pub config: PathBuf,
}

pub fn write_inputs(dir: &Path, records: &[VesselRecord], config_toml: &str) -> Inputs {
    let bathy_path = dir.join("bathy.asc");
    std::fs::write(&bathy_path, bathymetry().to_asc_string()).unwrap();
    let mpas = dir.join("mpas.geojson");
    std::fs::write(&mpas, zones_geojson(&[square_zone("mpa-10km", 10.0)])).unwrap();
    let rec_path = dir.join("records.csv");
    std::fs::write(&rec_path, export_csv(records)).unwrap();
    let config = dir.join("urnmap.toml");
    let text = format!(
        "[environment]\nbathymetry = \"bathy.asc\"\nbathymetry_convention = \"depth\"\nmpas = \"mpas.geojson\"\n\n{config_toml}"
    );
    std::fs::write(&config, text).unwrap();
    Inputs {
        dir: dir.to_path_buf(),
        bathymetry: bathy_path,
        mpas,
        records: rec_path,
        config,
    }
}

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("urnmap").chain(args.iter().copied());
    let code = urnmap_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

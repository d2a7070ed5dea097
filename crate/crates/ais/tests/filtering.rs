//! Region filtering against a hand-labelled set of positions.

use chrono::{TimeZone, Utc};
use urnmap_ais::{filter_records, load_regions, status_filter, Verdict};
use urnmap_core::{LatLon, VesselRecord};

// An L-shaped sea area with a lagoon cut out, plus a second square region.
const REGIONS: &str = include_str!("fixtures/regions_labelled.geojson");

fn labelled() -> Vec<(f64, f64, Verdict)> {
    include_str!("fixtures/labelled_points.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let verdict = match f[2] {
                "accepted" => Verdict::Accepted,
                "excluded" => Verdict::Excluded,
                "outside_polygon" => Verdict::OutsidePolygon,
                "outside_bbox" => Verdict::OutsideBbox,
                other => panic!("unknown label {other}"),
            };
            (f[0].parse().unwrap(), f[1].parse().unwrap(), verdict)
        })
        .collect()
}

fn record(mmsi: u32, lat: f64, lon: f64, nav_status: u8) -> VesselRecord {
    VesselRecord {
        mmsi,
        name: None,
        timestamp: Utc.with_ymd_and_hms(2025, 7, 1, 12, 0, 0).unwrap(),
        lat,
        lon,
        sog_kn: 10.0,
        cog_deg: None,
        ais_type: 70,
        length_m: None,
        beam_m: None,
        draft_m: None,
        nav_status,
        je_class: None,
    }
}

#[test]
fn verdicts_match_hand_labels() {
    let regions = load_regions(REGIONS).unwrap();
    let coast = &regions[0];
    let island = &regions[1];
    for (lat, lon, want) in labelled() {
        let p = LatLon::new(lat, lon);
        let got = if island.bbox.contains(p) { island.classify(p) } else { coast.classify(p) };
        assert_eq!(got, want, "({lat}, {lon})");
    }
}

#[test]
fn accepted_set_matches_hand_labels() {
    let regions = load_regions(REGIONS).unwrap();
    let records: Vec<VesselRecord> = labelled()
        .iter()
        .enumerate()
        .map(|(i, (lat, lon, _))| record(i as u32 + 1, *lat, *lon, 0))
        .collect();
    let want: Vec<u32> = labelled()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.2 == Verdict::Accepted)
        .map(|(i, _)| i as u32 + 1)
        .collect();
    let (kept, stats) = filter_records(&records, &regions);
    assert_eq!(kept.iter().map(|r| r.mmsi).collect::<Vec<_>>(), want);
    assert_eq!(stats.accepted, 5);
    assert_eq!(stats.excluded, 2);
    assert_eq!(stats.outside_polygon, 3);
    assert_eq!(stats.outside_bbox, 2);

    let again = filter_records(&records, &regions);
    assert_eq!(again.0, kept);
}

#[test]
fn region_bbox_contains_its_polygon() {
    for r in load_regions(REGIONS).unwrap() {
        for part in &r.parts {
            for v in part.exterior() {
                assert!(r.bbox.contains(*v));
            }
        }
    }
}

#[test]
fn status_filter_keeps_only_requested_displayed_statuses() {
    let recs: Vec<VesselRecord> = (0..16).map(|s| record(100 + s as u32, 0.5, 2.0, s)).collect();
    let only = |set: &[u8]| status_filter(&recs, set).iter().map(|r| r.nav_status).collect::<Vec<_>>();
    assert_eq!(only(&[0]), vec![0]);
    assert_eq!(only(&[0, 1]), vec![0, 1]);
    assert_eq!(only(&[1, 5]), vec![1]);
    assert!(only(&[5]).is_empty());
}

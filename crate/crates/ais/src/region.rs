//! Maritime regions and the two-stage (bounding box, then polygon) filter.

use serde::Serialize;
use urnmap_core::geo::{parse_polygon_features, BoundingBox, GeoError, LatLon, Polygon};
use urnmap_core::VesselRecord;

/// A named sea area with inland subregions cut out.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDefinition {
    pub name: String,
    /// Outer parts; interior rings of a part are excluded like `exclusions`.
    pub parts: Vec<Polygon>,
    pub exclusions: Vec<Polygon>,
    pub bbox: BoundingBox,
}

impl RegionDefinition {
    pub fn new(name: impl Into<String>, parts: Vec<Polygon>, exclusions: Vec<Polygon>) -> Result<Self, GeoError> {
        let name = name.into();
        let corners: Vec<LatLon> = parts
            .iter()
            .flat_map(|p| {
                let b = p.bbox();
                [LatLon::new(b.south, b.west), LatLon::new(b.north, b.east)]
            })
            .collect();
        let bbox = BoundingBox::from_points(corners.iter())
            .ok_or_else(|| GeoError::InvalidGeometry(format!("region '{name}' has no polygon")))?;
        for (i, ex) in exclusions.iter().enumerate() {
            let inside = ex
                .exterior()
                .iter()
                .all(|&v| parts.iter().any(|p| p.exterior_contains(v)));
            if !inside {
                return Err(GeoError::InvalidGeometry(format!(
                    "exclusion {i} of region '{name}' is not within its outer polygon"
                )));
            }
        }
        Ok(Self {
            name,
            parts,
            exclusions,
            bbox,
        })
    }

    /// Second-stage test; assumes the bounding box already matched.
    fn polygon_accepts(&self, p: LatLon) -> Verdict {
        if !self.parts.iter().any(|poly| poly.contains(p)) {
            return Verdict::OutsidePolygon;
        }
        if self.exclusions.iter().any(|ex| ex.contains(p)) {
            return Verdict::Excluded;
        }
        Verdict::Accepted
    }

    pub fn accepts(&self, p: LatLon) -> bool {
        self.classify(p) == Verdict::Accepted
    }

    pub fn classify(&self, p: LatLon) -> Verdict {
        if !self.bbox.contains(p) {
            return Verdict::OutsideBbox;
        }
        self.polygon_accepts(p)
    }

    pub fn to_geojson(&self) -> serde_json::Value {
        let ring = |r: &Vec<LatLon>| -> Vec<[f64; 2]> { r.iter().map(|p| [p.lon, p.lat]).collect() };
        let polys: Vec<Vec<Vec<[f64; 2]>>> = self.parts.iter().map(|p| p.rings().iter().map(ring).collect()).collect();
        serde_json::json!({
            "type": "Feature",
            "properties": {
                "name": self.name,
                "bbox": [self.bbox.south, self.bbox.west, self.bbox.north, self.bbox.east],
                "exclusions": self.exclusions.len(),
            },
            "geometry": {"type": "MultiPolygon", "coordinates": polys},
        })
    }
}

/// Outcome of filtering one position against one region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    OutsideBbox,
    OutsidePolygon,
    Excluded,
}

/// Reads regions from GeoJSON. Every feature with a `name` property and no
/// `exclude` property is a region; features with `"exclude": "<region name>"`
/// are inland exclusions of that region.
pub fn load_regions(geojson: &str) -> Result<Vec<RegionDefinition>, GeoError> {
    let features = parse_polygon_features(geojson)?;
    let mut regions: Vec<(String, Vec<Polygon>, Vec<Polygon>)> = Vec::new();
    let mut exclusions: Vec<(String, Vec<Polygon>)> = Vec::new();
    for (i, f) in features.into_iter().enumerate() {
        if let Some(parent) = f.property_str(&["exclude"]) {
            exclusions.push((parent, f.parts));
            continue;
        }
        let name = f
            .property_str(&["name", "NAME"])
            .or(f.id.clone())
            .ok_or_else(|| GeoError::Parse(format!("region feature {i} has no name")))?;
        if regions.iter().any(|r| r.0 == name) {
            return Err(GeoError::Parse(format!("duplicate region name '{name}'")));
        }
        regions.push((name, f.parts, Vec::new()));
    }
    for (parent, parts) in exclusions {
        let region = regions
            .iter_mut()
            .find(|r| r.0 == parent)
            .ok_or_else(|| GeoError::Parse(format!("exclusion refers to unknown region '{parent}'")))?;
        region.2.extend(parts);
    }
    regions
        .into_iter()
        .map(|(name, parts, ex)| RegionDefinition::new(name, parts, ex))
        .collect()
}

/// Counts from one filtering pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub accepted: usize,
    pub outside_bbox: usize,
    pub outside_polygon: usize,
    pub excluded: usize,
}

/// Keeps records inside at least one region. A record's verdict is taken from
/// the region that accepts it, else from the furthest stage it reached.
pub fn filter_records(records: &[VesselRecord], regions: &[RegionDefinition]) -> (Vec<VesselRecord>, FilterStats) {
    let mut stats = FilterStats::default();
    let mut out = Vec::new();
    for r in records {
        let p = LatLon::new(r.lat, r.lon);
        let mut best = Verdict::OutsideBbox;
        for region in regions {
            let v = region.classify(p);
            let rank = |v: Verdict| match v {
                Verdict::OutsideBbox => 0,
                Verdict::OutsidePolygon => 1,
                Verdict::Excluded => 2,
                Verdict::Accepted => 3,
            };
            if rank(v) > rank(best) {
                best = v;
            }
            if v == Verdict::Accepted {
                break;
            }
        }
        match best {
            Verdict::Accepted => {
                stats.accepted += 1;
                out.push(r.clone());
            }
            Verdict::OutsideBbox => stats.outside_bbox += 1,
            Verdict::OutsidePolygon => stats.outside_polygon += 1,
            Verdict::Excluded => stats.excluded += 1,
        }
    }
    (out, stats)
}

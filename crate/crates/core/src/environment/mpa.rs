//! Marine protected area polygons.

use serde::Serialize;

use super::EnvError;
use crate::geo::{parse_polygon_features, BoundingBox, LatLon, Polygon};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpaPolygon {
    pub id: String,
    pub name: String,
    pub designation: String,
    #[serde(skip)]
    pub parts: Vec<Polygon>,
}

impl MpaPolygon {
    pub fn new(id: impl Into<String>, name: impl Into<String>, polygon: Polygon) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            designation: String::new(),
            parts: vec![polygon],
        }
    }

    pub fn contains(&self, p: LatLon) -> bool {
        self.parts.iter().any(|poly| poly.contains(p))
    }

    /// Inside, or within `buffer_m` metres of any part.
    pub fn within_buffer(&self, p: LatLon, buffer_m: f64) -> bool {
        self.parts.iter().any(|poly| poly.within_buffer(p, buffer_m))
    }

    pub fn bbox(&self) -> BoundingBox {
        let corners: Vec<LatLon> = self
            .parts
            .iter()
            .flat_map(|p| {
                let b = p.bbox();
                [LatLon::new(b.south, b.west), LatLon::new(b.north, b.east)]
            })
            .collect();
        BoundingBox::from_points(corners.iter()).expect("at least one part")
    }

    /// GeoJSON Feature for API responses.
    pub fn to_geojson(&self) -> serde_json::Value {
        let ring = |r: &Vec<LatLon>| -> Vec<[f64; 2]> { r.iter().map(|p| [p.lon, p.lat]).collect() };
        let polys: Vec<Vec<Vec<[f64; 2]>>> =
            self.parts.iter().map(|p| p.rings().iter().map(ring).collect()).collect();
        let geometry = if polys.len() == 1 {
            serde_json::json!({"type": "Polygon", "coordinates": polys[0]})
        } else {
            serde_json::json!({"type": "MultiPolygon", "coordinates": polys})
        };
        serde_json::json!({
            "type": "Feature",
            "id": self.id,
            "properties": {"name": self.name, "designation": self.designation},
            "geometry": geometry,
        })
    }
}

/// Loads MPAs from a GeoJSON FeatureCollection. WDPA-style property names
/// (`WDPAID`, `NAME`, `DESIG_ENG`) and plain `id`/`name`/`designation` are both read.
pub fn load_mpas(geojson: &str) -> Result<Vec<MpaPolygon>, EnvError> {
    let features = parse_polygon_features(geojson)?;
    Ok(features
        .into_iter()
        .enumerate()
        .map(|(i, f)| MpaPolygon {
            id: f
                .id
                .clone()
                .or_else(|| f.property_str(&["WDPAID", "wdpaid", "id"]))
                .unwrap_or_else(|| format!("mpa-{i}")),
            name: f.property_str(&["NAME", "name"]).unwrap_or_default(),
            designation: f.property_str(&["DESIG_ENG", "DESIG", "designation"]).unwrap_or_default(),
            parts: f.parts,
        })
        .collect())
}

//! Geographic primitives: coordinates, bounding boxes, a local tangent plane,
//! polygons with holes, and GeoJSON polygon features.
//!
//! Coordinates are always `f64` degrees (WGS84), independent of the acoustic
//! scalar type.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Mean Earth radius (m) used by the local tangent-plane projection.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("GeoJSON: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl BoundingBox {
    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Result<Self, GeoError> {
        let b = Self { south, west, north, east };
        if ![south, west, north, east].iter().all(|v| v.is_finite()) || south >= north || west >= east {
            return Err(GeoError::InvalidGeometry(format!(
                "bounding box needs south < north and west < east, got {south},{west},{north},{east}"
            )));
        }
        Ok(b)
    }

    /// Parses `south,west,north,east`.
    pub fn parse(s: &str) -> Result<Self, GeoError> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| GeoError::InvalidGeometry(format!("extent '{s}': {e}")))?;
        match parts[..] {
            [s_, w, n, e] => Self::new(s_, w, n, e),
            _ => Err(GeoError::InvalidGeometry(format!(
                "extent '{s}' must be south,west,north,east"
            ))),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a LatLon>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Self {
            south: first.lat,
            west: first.lon,
            north: first.lat,
            east: first.lon,
        };
        for p in it {
            b.south = b.south.min(p.lat);
            b.north = b.north.max(p.lat);
            b.west = b.west.min(p.lon);
            b.east = b.east.max(p.lon);
        }
        Some(b)
    }

    pub fn contains(&self, p: LatLon) -> bool {
        p.lat >= self.south && p.lat <= self.north && p.lon >= self.west && p.lon <= self.east
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.south <= other.north
            && other.south <= self.north
            && self.west <= other.east
            && other.west <= self.east
    }

    pub fn height_deg(&self) -> f64 {
        self.north - self.south
    }

    pub fn width_deg(&self) -> f64 {
        self.east - self.west
    }

    pub fn center(&self) -> LatLon {
        LatLon::new(0.5 * (self.south + self.north), 0.5 * (self.west + self.east))
    }

    /// Grows the box by `margin_deg` on every side.
    pub fn expanded(&self, margin_deg: f64) -> Self {
        Self {
            south: self.south - margin_deg,
            west: self.west - margin_deg,
            north: self.north + margin_deg,
            east: self.east + margin_deg,
        }
    }
}

/// Equirectangular tangent plane about an origin: x east, y north, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: LatLon,
    cos_lat: f64,
}

impl LocalFrame {
    pub fn new(origin: LatLon) -> Self {
        Self {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        }
    }

    pub fn to_xy(&self, p: LatLon) -> (f64, f64) {
        (
            EARTH_RADIUS_M * self.cos_lat * (p.lon - self.origin.lon).to_radians(),
            EARTH_RADIUS_M * (p.lat - self.origin.lat).to_radians(),
        )
    }

    pub fn to_latlon(&self, x: f64, y: f64) -> LatLon {
        LatLon::new(
            self.origin.lat + (y / EARTH_RADIUS_M).to_degrees(),
            self.origin.lon + (x / (EARTH_RADIUS_M * self.cos_lat)).to_degrees(),
        )
    }

    /// Metres per degree of latitude and of longitude at the origin.
    pub fn metres_per_degree(&self) -> (f64, f64) {
        let m = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        (m, m * self.cos_lat)
    }
}

/// Distance (m) between two points in the tangent plane of the first.
pub fn local_distance_m(a: LatLon, b: LatLon) -> f64 {
    let (x, y) = LocalFrame::new(a).to_xy(b);
    x.hypot(y)
}

fn on_segment(p: LatLon, a: LatLon, b: LatLon) -> bool {
    let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    let scale = (b.lon - a.lon).abs().max((b.lat - a.lat).abs()).max(1.0);
    cross.abs() <= 1e-12 * scale
        && p.lon >= a.lon.min(b.lon)
        && p.lon <= a.lon.max(b.lon)
        && p.lat >= a.lat.min(b.lat)
        && p.lat <= a.lat.max(b.lat)
}

fn segment_distance_xy(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Polygon with an outer ring and optional holes. Rings are stored closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    rings: Vec<Vec<LatLon>>,
    bbox: BoundingBox,
}

impl Polygon {
    /// Validates and closes the rings. The first ring is the exterior.
    pub fn new(rings: Vec<Vec<LatLon>>) -> Result<Self, GeoError> {
        if rings.is_empty() {
            return Err(GeoError::InvalidGeometry("polygon has no rings".into()));
        }
        let mut closed = Vec::with_capacity(rings.len());
        for (i, mut ring) in rings.into_iter().enumerate() {
            if let Some(bad) = ring.iter().find(|p| !p.is_valid()) {
                return Err(GeoError::InvalidGeometry(format!(
                    "ring {i} has invalid vertex {},{}",
                    bad.lat, bad.lon
                )));
            }
            let mut distinct: Vec<LatLon> = Vec::new();
            for p in &ring {
                if !distinct.contains(p) {
                    distinct.push(*p);
                }
            }
            if distinct.len() < 3 {
                return Err(GeoError::InvalidGeometry(format!(
                    "ring {i} has fewer than 3 distinct vertices"
                )));
            }
            if ring.first() != ring.last() {
                ring.push(ring[0]);
            }
            closed.push(ring);
        }
        let bbox = BoundingBox::from_points(closed[0].iter()).expect("non-empty ring");
        Ok(Self { rings: closed, bbox })
    }

    /// Single-ring polygon from `(lat, lon)` pairs.
    pub fn from_latlon(vertices: &[(f64, f64)]) -> Result<Self, GeoError> {
        Self::new(vec![vertices.iter().map(|&(lat, lon)| LatLon::new(lat, lon)).collect()])
    }

    pub fn rings(&self) -> &[Vec<LatLon>] {
        &self.rings
    }

    pub fn exterior(&self) -> &[LatLon] {
        &self.rings[0]
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    fn edges(&self) -> impl Iterator<Item = (LatLon, LatLon)> + '_ {
        self.rings.iter().flat_map(|r| r.windows(2).map(|w| (w[0], w[1])))
    }

    /// Even–odd test over all rings; points on any edge count as inside.
    pub fn contains(&self, p: LatLon) -> bool {
        self.bbox.contains(p) && even_odd(p, self.edges())
    }

    /// Like [`Polygon::contains`] but ignoring holes.
    pub fn exterior_contains(&self, p: LatLon) -> bool {
        self.bbox.contains(p) && even_odd(p, self.rings[0].windows(2).map(|w| (w[0], w[1])))
    }

    /// Distance (m) from `p` to the nearest edge, in the tangent plane at `p`.
    pub fn distance_to_boundary_m(&self, p: LatLon) -> f64 {
        let frame = LocalFrame::new(p);
        self.edges()
            .map(|(a, b)| segment_distance_xy((0.0, 0.0), frame.to_xy(a), frame.to_xy(b)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inside the polygon or within `buffer_m` of its boundary.
    pub fn within_buffer(&self, p: LatLon, buffer_m: f64) -> bool {
        if self.contains(p) {
            return true;
        }
        if buffer_m <= 0.0 {
            return false;
        }
        let (m_lat, m_lon) = LocalFrame::new(p).metres_per_degree();
        let margin = buffer_m / m_lat.min(m_lon.max(1e-9));
        if !self.bbox.expanded(margin).contains(p) {
            return false;
        }
        self.distance_to_boundary_m(p) <= buffer_m
    }
}

fn even_odd(p: LatLon, edges: impl Iterator<Item = (LatLon, LatLon)>) -> bool {
    let mut inside = false;
    for (a, b) in edges {
        if on_segment(p, a, b) {
            return true;
        }
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let lon_cross = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if p.lon < lon_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Free-function form of [`Polygon::contains`].
pub fn point_in_polygon(p: LatLon, poly: &Polygon) -> bool {
    poly.contains(p)
}

/// A GeoJSON feature reduced to its polygon parts and properties.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonFeature {
    pub id: Option<String>,
    pub properties: serde_json::Map<String, Value>,
    pub parts: Vec<Polygon>,
}

impl PolygonFeature {
    pub fn property_str(&self, keys: &[&str]) -> Option<String> {
        keys.iter().find_map(|k| match self.properties.get(*k) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            Some(Value::Bool(b)) => Some(b.to_string()),
            _ => None,
        })
    }

    pub fn contains(&self, p: LatLon) -> bool {
        self.parts.iter().any(|poly| poly.contains(p))
    }
}

fn parse_ring(v: &Value) -> Result<Vec<LatLon>, GeoError> {
    let arr = v.as_array().ok_or_else(|| GeoError::Parse("ring is not an array".into()))?;
    arr.iter()
        .map(|pos| {
            let c = pos.as_array().filter(|c| c.len() >= 2);
            match c.map(|c| (c[0].as_f64(), c[1].as_f64())) {
                Some((Some(lon), Some(lat))) => Ok(LatLon::new(lat, lon)),
                _ => Err(GeoError::Parse(format!("bad position {pos}"))),
            }
        })
        .collect()
}

fn parse_polygon(coords: &Value) -> Result<Polygon, GeoError> {
    let rings = coords
        .as_array()
        .ok_or_else(|| GeoError::Parse("polygon coordinates are not an array".into()))?
        .iter()
        .map(parse_ring)
        .collect::<Result<Vec<_>, _>>()?;
    Polygon::new(rings)
}

fn parse_geometry(geom: &Value) -> Result<Vec<Polygon>, GeoError> {
    let coords = &geom["coordinates"];
    match geom["type"].as_str() {
        Some("Polygon") => Ok(vec![parse_polygon(coords)?]),
        Some("MultiPolygon") => coords
            .as_array()
            .ok_or_else(|| GeoError::Parse("MultiPolygon coordinates are not an array".into()))?
            .iter()
            .map(parse_polygon)
            .collect(),
        other => Err(GeoError::Parse(format!("unsupported geometry type {other:?}"))),
    }
}

/// Reads a FeatureCollection (or a single Feature) of Polygon/MultiPolygon geometries.
pub fn parse_polygon_features(text: &str) -> Result<Vec<PolygonFeature>, GeoError> {
    let root: Value = serde_json::from_str(text).map_err(|e| GeoError::Parse(e.to_string()))?;
    let features: Vec<&Value> = match root["type"].as_str() {
        Some("FeatureCollection") => root["features"]
            .as_array()
            .ok_or_else(|| GeoError::Parse("FeatureCollection without features".into()))?
            .iter()
            .collect(),
        Some("Feature") => vec![&root],
        other => return Err(GeoError::Parse(format!("expected a FeatureCollection, got {other:?}"))),
    };
    features
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let parts = parse_geometry(&f["geometry"])
                .map_err(|e| GeoError::Parse(format!("feature {i}: {e}")))?;
            let id = match &f["id"] {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(n.to_string()),
                _ => None,
            };
            let properties = f["properties"].as_object().cloned().unwrap_or_default();
            Ok(PolygonFeature { id, properties, parts })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Polygon::from_latlon(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap()
    }

    #[test]
    fn square_examples() {
        let sq = square();
        assert!(sq.contains(LatLon::new(0.5, 0.5)));
        assert!(!sq.contains(LatLon::new(2.0, 0.5)));
        assert!(sq.contains(LatLon::new(0.0, 0.0)));
        assert!(sq.contains(LatLon::new(1.0, 0.5)));
        assert_eq!(sq.exterior().len(), 5);
    }

    #[test]
    fn degenerate_rings_rejected() {
        assert!(Polygon::from_latlon(&[(0.0, 0.0), (1.0, 1.0), (0.0, 0.0)]).is_err());
        assert!(Polygon::from_latlon(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(Polygon::new(vec![]).is_err());
    }

    #[test]
    fn hole_excludes_interior() {
        let outer = vec![(0.0, 0.0), (0.0, 4.0), (4.0, 4.0), (4.0, 0.0)];
        let hole = vec![(1.0, 1.0), (1.0, 3.0), (3.0, 3.0), (3.0, 1.0)];
        let to = |r: &[(f64, f64)]| r.iter().map(|&(a, b)| LatLon::new(a, b)).collect::<Vec<_>>();
        let p = Polygon::new(vec![to(&outer), to(&hole)]).unwrap();
        assert!(!p.contains(LatLon::new(2.0, 2.0)));
        assert!(p.contains(LatLon::new(0.5, 2.0)));
        assert!(p.contains(LatLon::new(1.0, 2.0)));
    }

    #[test]
    fn frame_round_trip() {
        let f = LocalFrame::new(LatLon::new(45.0, 13.0));
        let (x, y) = f.to_xy(LatLon::new(45.1, 13.2));
        let back = f.to_latlon(x, y);
        assert!((back.lat - 45.1).abs() < 1e-12 && (back.lon - 13.2).abs() < 1e-12);
        let (_, y1) = f.to_xy(LatLon::new(46.0, 13.0));
        assert!((y1 - EARTH_RADIUS_M * 1f64.to_radians()).abs() < 1e-6);
    }

    #[test]
    fn buffer_distance() {
        let sq = square();
        let (m_lat, _) = LocalFrame::new(LatLon::new(1.0, 0.5)).metres_per_degree();
        let p = LatLon::new(1.0 + 10_000.0 / m_lat, 0.5);
        assert!((sq.distance_to_boundary_m(p) - 10_000.0).abs() < 1.0);
        assert!(sq.within_buffer(p, 10_001.0));
        assert!(!sq.within_buffer(p, 9_999.0));
    }

    #[test]
    fn geojson_features() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","id":7,"properties":{"NAME":"A","DESIG_ENG":"Park"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
            {"type":"Feature","properties":{},
             "geometry":{"type":"MultiPolygon","coordinates":[[[[5,5],[6,5],[6,6],[5,5]]],[[[8,8],[9,8],[9,9],[8,8]]]]}}
        ]}"#;
        let fs = parse_polygon_features(text).unwrap();
        assert_eq!(fs.len(), 2);
        assert_eq!(fs[0].id.as_deref(), Some("7"));
        assert_eq!(fs[0].property_str(&["NAME"]).as_deref(), Some("A"));
        assert!(fs[0].contains(LatLon::new(0.5, 0.5)));
        assert_eq!(fs[1].parts.len(), 2);
        assert!(parse_polygon_features(r#"{"type":"Point"}"#).is_err());
    }
}

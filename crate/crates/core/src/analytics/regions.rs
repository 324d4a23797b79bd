//! Subdistrict and ring-road polygons (GeoJSON), point-in-polygon lookup
//! and the census reference series.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geo::{BoundingBox, GeoPoint};

/// Subdistrict identifier. Numeric ids compare numerically and sort before
/// non-numeric ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubdistrictId(pub String);

impl SubdistrictId {
    fn numeric(&self) -> Option<i64> {
        self.0.parse().ok()
    }
}

impl Ord for SubdistrictId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for SubdistrictId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SubdistrictId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SubdistrictId {
    fn from(s: &str) -> Self {
        SubdistrictId(s.to_owned())
    }
}

/// Closed ring as (lon, lat) vertices, first vertex repeated at the end.
pub type Ring = Vec<(f64, f64)>;

/// A polygon: outer ring followed by holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub rings: Vec<Ring>,
}

const EDGE_EPS: f64 = 1e-12;

fn on_segment(x: f64, y: f64, (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> bool {
    let cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
    let scale = ((x2 - x1).abs() + (y2 - y1).abs()).max(1.0);
    cross.abs() <= EDGE_EPS * scale
        && x >= x1.min(x2) - EDGE_EPS
        && x <= x1.max(x2) + EDGE_EPS
        && y >= y1.min(y2) - EDGE_EPS
        && y <= y1.max(y2) + EDGE_EPS
}

fn segments_cross(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(c.0, c.1, a, b))
        || (o2 == 0.0 && on_segment(d.0, d.1, a, b))
        || (o3 == 0.0 && on_segment(a.0, a.1, c, d))
        || (o4 == 0.0 && on_segment(b.0, b.1, c, d))
}

impl Polygon {
    pub fn new(rings: Vec<Ring>) -> Result<Self> {
        if rings.is_empty() {
            return Err(Error::Data("polygon without rings".into()));
        }
        for ring in &rings {
            if ring.len() < 4 || ring.first() != ring.last() {
                return Err(Error::Data("polygon rings must be closed with at least 3 distinct vertices".into()));
            }
            if ring.iter().any(|&(lon, lat)| GeoPoint::new(lat, lon).is_err()) {
                return Err(Error::Data("polygon vertex out of WGS84 range".into()));
            }
            if ring_self_intersects(ring) {
                return Err(Error::Data("self-intersecting polygon ring".into()));
            }
        }
        Ok(Polygon { rings })
    }

    /// Axis-aligned square ring helper, counter-clockwise.
    pub fn rectangle(min_lat: f64, min_lon: f64, max_lat: f64, max_lon: f64) -> Result<Self> {
        Polygon::new(vec![vec![(min_lon, min_lat), (max_lon, min_lat), (max_lon, max_lat), (min_lon, max_lat), (min_lon, min_lat)]])
    }

    pub fn on_boundary(&self, p: GeoPoint) -> bool {
        let (x, y) = (p.lon(), p.lat());
        self.rings.iter().any(|r| r.windows(2).any(|w| on_segment(x, y, w[0], w[1])))
    }

    /// Even-odd rule over all rings; boundary points count as inside.
    pub fn contains(&self, p: GeoPoint) -> bool {
        if self.on_boundary(p) {
            return true;
        }
        let (x, y) = (p.lon(), p.lat());
        let mut inside = false;
        for ring in &self.rings {
            for w in ring.windows(2) {
                let ((x1, y1), (x2, y2)) = (w[0], w[1]);
                if (y1 > y) != (y2 > y) && x < (x2 - x1) * (y - y1) / (y2 - y1) + x1 {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn bbox(&self) -> BoundingBox {
        let outer = &self.rings[0];
        let mut bb = BoundingBox { min_lat: f64::MAX, min_lon: f64::MAX, max_lat: f64::MIN, max_lon: f64::MIN };
        for &(lon, lat) in outer {
            bb.min_lat = bb.min_lat.min(lat);
            bb.max_lat = bb.max_lat.max(lat);
            bb.min_lon = bb.min_lon.min(lon);
            bb.max_lon = bb.max_lon.max(lon);
        }
        bb
    }

    fn to_coordinates(&self) -> Value {
        Value::Array(self.rings.iter().map(|r| Value::Array(r.iter().map(|&(lon, lat)| json!([lon, lat])).collect())).collect())
    }
}

fn ring_self_intersects(ring: &Ring) -> bool {
    let n = ring.len() - 1;
    for i in 0..n {
        for j in i + 1..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return true;
            }
        }
    }
    false
}

/// A named area made of one or more polygons.
#[derive(Debug, Clone, PartialEq)]
pub struct Area {
    pub id: SubdistrictId,
    pub polygons: Vec<Polygon>,
    bbox: BoundingBox,
}

impl Area {
    pub fn new(id: SubdistrictId, polygons: Vec<Polygon>) -> Result<Self> {
        let mut it = polygons.iter().map(Polygon::bbox);
        let mut bbox = it.next().ok_or_else(|| Error::Data(format!("area {id} has no polygons")))?;
        for b in it {
            bbox.min_lat = bbox.min_lat.min(b.min_lat);
            bbox.max_lat = bbox.max_lat.max(b.max_lat);
            bbox.min_lon = bbox.min_lon.min(b.min_lon);
            bbox.max_lon = bbox.max_lon.max(b.max_lon);
        }
        Ok(Area { id, polygons, bbox })
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.bbox.contains(p) && self.polygons.iter().any(|poly| poly.contains(p))
    }
}

fn parse_ring(v: &Value) -> Option<Ring> {
    v.as_array()?
        .iter()
        .map(|pt| {
            let a = pt.as_array()?;
            Some((a.first()?.as_f64()?, a.get(1)?.as_f64()?))
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Result<Polygon> {
    let rings = v
        .as_array()
        .and_then(|rs| rs.iter().map(parse_ring).collect::<Option<Vec<_>>>())
        .ok_or_else(|| Error::Data("malformed polygon coordinates".into()))?;
    Polygon::new(rings)
}

/// Parses a GeoJSON FeatureCollection of Polygon/MultiPolygon features with an `id` property.
pub fn parse_areas(text: &str) -> Result<Vec<Area>> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Data(format!("GeoJSON: {e}")))?;
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Data("GeoJSON: expected a FeatureCollection with `features`".into()))?;
    let mut areas = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let id = match f.get("properties").and_then(|p| p.get("id")) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(Error::Data(format!("GeoJSON feature {i}: missing `id` property"))),
        };
        let geom = f.get("geometry").ok_or_else(|| Error::Data(format!("GeoJSON feature {id}: no geometry")))?;
        let coords = geom.get("coordinates").ok_or_else(|| Error::Data(format!("GeoJSON feature {id}: no coordinates")))?;
        let polygons = match geom.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![parse_polygon(coords)?],
            Some("MultiPolygon") => coords
                .as_array()
                .ok_or_else(|| Error::Data(format!("GeoJSON feature {id}: malformed MultiPolygon")))?
                .iter()
                .map(parse_polygon)
                .collect::<Result<_>>()?,
            other => return Err(Error::Data(format!("GeoJSON feature {id}: unsupported geometry {other:?}"))),
        };
        areas.push(Area::new(SubdistrictId(id), polygons)?);
    }
    Ok(areas)
}

pub fn areas_to_geojson(areas: &[Area]) -> Value {
    let features: Vec<Value> = areas
        .iter()
        .map(|a| {
            let geometry = if a.polygons.len() == 1 {
                json!({"type": "Polygon", "coordinates": a.polygons[0].to_coordinates()})
            } else {
                json!({"type": "MultiPolygon", "coordinates": a.polygons.iter().map(Polygon::to_coordinates).collect::<Vec<_>>()})
            };
            json!({"type": "Feature", "properties": {"id": a.id.0}, "geometry": geometry})
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Census reference counts for one subdistrict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub employment: f64,
    pub population: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubdistrictSet {
    /// Sorted by id.
    areas: Vec<Area>,
    pub reference_series: Option<BTreeMap<SubdistrictId, Reference>>,
}

/// Result of a subdistrict lookup.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Placement {
    Inside(SubdistrictId),
    Outside,
}

impl SubdistrictSet {
    pub fn new(mut areas: Vec<Area>) -> Result<Self> {
        areas.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = areas.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Data(format!("duplicate subdistrict id {}", w[0].id)));
        }
        Ok(SubdistrictSet { areas, reference_series: None })
    }

    pub fn from_geojson_str(text: &str) -> Result<Self> {
        Self::new(parse_areas(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_geojson_str(&read_text(path)?).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn ids(&self) -> impl Iterator<Item = &SubdistrictId> {
        self.areas.iter().map(|a| &a.id)
    }

    pub fn with_reference(mut self, reference: BTreeMap<SubdistrictId, Reference>) -> Self {
        self.reference_series = Some(reference);
        self
    }
}

/// Lowest subdistrict id whose polygons contain `p` (boundary included).
pub fn point_to_subdistrict(p: GeoPoint, s: &SubdistrictSet) -> Placement {
    s.areas.iter().find(|a| a.contains(p)).map_or(Placement::Outside, |a| Placement::Inside(a.id.clone()))
}

#[derive(Deserialize)]
struct CensusRow {
    subdistrict_id: String,
    employment: f64,
    population: f64,
}

pub const CENSUS_CSV_HEADER: [&str; 3] = ["subdistrict_id", "employment", "population"];

pub fn read_census<R: std::io::Read>(reader: R) -> Result<BTreeMap<SubdistrictId, Reference>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    if header.iter().ne(CENSUS_CSV_HEADER.iter().copied()) {
        return Err(Error::Data(format!("census header must be `{}`", CENSUS_CSV_HEADER.join(","))));
    }
    let mut out = BTreeMap::new();
    for row in rdr.deserialize::<CensusRow>() {
        let row = row.map_err(|e| Error::Data(e.to_string()))?;
        if !(row.employment >= 0.0 && row.population >= 0.0) {
            return Err(Error::Data(format!("negative census count for {}", row.subdistrict_id)));
        }
        out.insert(SubdistrictId(row.subdistrict_id), Reference { employment: row.employment, population: row.population });
    }
    Ok(out)
}

pub fn load_census(path: &Path) -> Result<BTreeMap<SubdistrictId, Reference>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_census(f).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    CityCore,
    InnerSuburb,
    OuterSuburb,
    Outside,
}

impl Region {
    pub const RINGED: [Region; 3] = [Region::CityCore, Region::InnerSuburb, Region::OuterSuburb];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::CityCore => "city_core",
            Region::InnerSuburb => "inner_suburb",
            Region::OuterSuburb => "outer_suburb",
            Region::Outside => "outside",
        }
    }
}

/// Three nested ring polygons, innermost first.
#[derive(Debug, Clone, PartialEq)]
pub struct RingModel {
    rings: Vec<Area>,
}

impl RingModel {
    pub fn new(rings: Vec<Area>) -> Result<Self> {
        if rings.len() != 3 {
            return Err(Error::Data(format!("ring model needs exactly 3 rings (innermost first), got {}", rings.len())));
        }
        for w in rings.windows(2) {
            let nested = w[0].polygons.iter().flat_map(|p| p.rings[0].iter()).all(|&(lon, lat)| w[1].contains(GeoPoint::new_unchecked(lat, lon)));
            if !nested {
                return Err(Error::Data(format!("ring {} is not nested in ring {}", w[0].id, w[1].id)));
            }
        }
        Ok(RingModel { rings })
    }

    pub fn from_geojson_str(text: &str) -> Result<Self> {
        Self::new(parse_areas(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_geojson_str(&read_text(path)?).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    pub fn rings(&self) -> &[Area] {
        &self.rings
    }

    pub fn region(&self, p: GeoPoint) -> Region {
        self.rings.iter().position(|r| r.contains(p)).map_or(Region::Outside, |i| Region::RINGED[i])
    }
}

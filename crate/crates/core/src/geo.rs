//! WGS84 points and great-circle distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used for every distance in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Kilometres per degree of latitude on the sphere above.
pub const KM_PER_DEG_LAT: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
            Ok(GeoPoint { lat, lon })
        } else {
            Err(Error::InvalidCoordinate { lat, lon })
        }
    }

    /// Construct from values already known to be valid (e.g. averages of valid points).
    pub(crate) fn new_unchecked(lat: f64, lon: f64) -> Self {
        debug_assert!(lat.is_finite() && lon.is_finite());
        GeoPoint { lat, lon }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Point displaced by `north_km`/`east_km` using a local tangent-plane approximation.
    pub fn offset_km(&self, north_km: f64, east_km: f64) -> GeoPoint {
        let lat = (self.lat + north_km / KM_PER_DEG_LAT).clamp(-90.0, 90.0);
        let lon = self.lon + east_km / (KM_PER_DEG_LAT * self.lat.to_radians().cos());
        let lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
        GeoPoint { lat, lon }
    }
}

/// Great-circle distance in kilometres (haversine, R = 6371.0 km).
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Weighted centroid in lat/lon space. Adequate at city scale, where the
/// crate's inputs live. Returns `None` for empty input or zero total weight.
pub fn weighted_centroid<I>(points: I) -> Option<GeoPoint>
where
    I: IntoIterator<Item = (GeoPoint, f64)>,
{
    let (mut sw, mut slat, mut slon) = (0.0, 0.0, 0.0);
    for (p, w) in points {
        sw += w;
        slat += w * p.lat;
        slon += w * p.lon;
    }
    (sw > 0.0).then(|| GeoPoint::new_unchecked(slat / sw, slon / sw))
}

/// Axis-aligned lat/lon box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn validate(&self) -> Result<()> {
        GeoPoint::new(self.min_lat, self.min_lon)?;
        GeoPoint::new(self.max_lat, self.max_lon)?;
        if self.min_lat >= self.max_lat || self.min_lon >= self.max_lon {
            return Err(Error::Config(format!("degenerate bounding box {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat) && (self.min_lon..=self.max_lon).contains(&p.lon)
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint::new_unchecked((self.min_lat + self.max_lat) / 2.0, (self.min_lon + self.max_lon) / 2.0)
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<BoundingBox> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut bb = BoundingBox { min_lat: first.lat, min_lon: first.lon, max_lat: first.lat, max_lon: first.lon };
        for p in it {
            bb.min_lat = bb.min_lat.min(p.lat);
            bb.max_lat = bb.max_lat.max(p.lat);
            bb.min_lon = bb.min_lon.min(p.lon);
            bb.max_lon = bb.max_lon.max(p.lon);
        }
        Some(bb)
    }
}

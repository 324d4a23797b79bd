//! Geographic context for a synthetic city: a grid of subdistricts, three
//! octagonal ring roads, a census series derived from the true anchors and
//! monthly housing transactions whose prices fall off with distance from
//! the center.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::analytics::housing::{write_transactions, Transaction};
use crate::analytics::regions::{areas_to_geojson, point_to_subdistrict, Area, Placement, Polygon, Reference, SubdistrictId, SubdistrictSet, CENSUS_CSV_HEADER};
use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::geo::{haversine_km, BoundingBox, GeoPoint, KM_PER_DEG_LAT};
use crate::hubprofile::HubLabel;

use super::config::ScenarioConfig;
use super::truth::GroundTruth;

pub const SUBDISTRICTS_FILE: &str = "subdistricts.geojson";
pub const RINGS_FILE: &str = "rings.geojson";
pub const CENSUS_FILE: &str = "census.csv";
pub const TRANSACTIONS_FILE: &str = "transactions.csv";

/// Census counts are true anchor counts times this factor.
const CENSUS_SCALE: f64 = 100.0;
const TRANSACTIONS_PER_CELL_MONTH: usize = 4;
const PRICE_NOISE: f64 = 0.05;

/// Fixed geometry of the synthetic city.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CityLayout {
    pub extent: BoundingBox,
    pub center: GeoPoint,
    /// Distance from the center to the flat sides of each ring octagon, innermost first.
    pub ring_inradius_km: [f64; 3],
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Price per m² at the center.
    pub center_price: f64,
    /// Distance over which prices fall by a factor of e.
    pub price_decay_km: f64,
}

impl CityLayout {
    pub fn for_extent(extent: BoundingBox) -> Self {
        CityLayout {
            extent,
            center: extent.center(),
            ring_inradius_km: [14.0, 26.0, 36.0],
            grid_rows: 12,
            grid_cols: 12,
            center_price: 100_000.0,
            price_decay_km: 25.0,
        }
    }

    pub fn core_radius_km(&self) -> f64 {
        self.ring_inradius_km[0]
    }

    /// Expected price per m² at `p`.
    pub fn price_at(&self, p: GeoPoint) -> f64 {
        self.center_price * (-haversine_km(self.center, p) / self.price_decay_km).exp()
    }

    /// Grid cells numbered row-major from the south-west corner, starting at 1.
    pub fn subdistricts(&self) -> Result<Vec<Area>> {
        let e = self.extent;
        let dlat = (e.max_lat - e.min_lat) / self.grid_rows as f64;
        let dlon = (e.max_lon - e.min_lon) / self.grid_cols as f64;
        let mut out = Vec::with_capacity(self.grid_rows * self.grid_cols);
        for r in 0..self.grid_rows {
            for c in 0..self.grid_cols {
                let (lat0, lon0) = (e.min_lat + r as f64 * dlat, e.min_lon + c as f64 * dlon);
                let id = SubdistrictId((r * self.grid_cols + c + 1).to_string());
                out.push(Area::new(id, vec![Polygon::rectangle(lat0, lon0, lat0 + dlat, lon0 + dlon)?])?);
            }
        }
        Ok(out)
    }

    /// Octagonal rings with ids `ring1`..`ring3`, innermost first.
    pub fn rings(&self) -> Result<Vec<Area>> {
        let step = std::f64::consts::PI / 4.0;
        self.ring_inradius_km
            .iter()
            .enumerate()
            .map(|(i, &inradius)| {
                let circumradius = inradius / (step / 2.0).cos();
                let mut ring: Vec<(f64, f64)> = (0..8)
                    .map(|k| {
                        let a = step / 2.0 + k as f64 * step;
                        let p = self.center.offset_km(circumradius * a.sin(), circumradius * a.cos());
                        (p.lon(), p.lat())
                    })
                    .collect();
                ring.push(ring[0]);
                Area::new(SubdistrictId(format!("ring{}", i + 1)), vec![Polygon::new(vec![ring])?])
            })
            .collect()
    }
}

/// Context files for the analytics reports.
#[derive(Debug, Clone, PartialEq)]
pub struct CityContext {
    pub subdistricts: Vec<Area>,
    pub rings: Vec<Area>,
    pub census: BTreeMap<SubdistrictId, Reference>,
    pub transactions: Vec<Transaction>,
}

impl CityContext {
    pub fn build(cfg: &ScenarioConfig, truth: &GroundTruth, rng: &mut ChaCha8Rng) -> Result<Self> {
        let layout = CityLayout::for_extent(cfg.extent);
        let subdistricts = layout.subdistricts()?;
        let set = SubdistrictSet::new(subdistricts.clone())?;
        let mut counts: BTreeMap<SubdistrictId, (usize, usize)> = set.ids().map(|id| (id.clone(), (0, 0))).collect();
        for anchor in truth.users.iter().flat_map(|u| &u.anchors) {
            if let Placement::Inside(id) = point_to_subdistrict(anchor.location, &set) {
                let c = counts.entry(id).or_default();
                match anchor.kind {
                    HubLabel::Work => c.0 += 1,
                    HubLabel::Home => c.1 += 1,
                    HubLabel::Other => {}
                }
            }
        }
        let census = counts
            .into_iter()
            .map(|(id, (w, h))| (id, Reference { employment: w as f64 * CENSUS_SCALE, population: h as f64 * CENSUS_SCALE }))
            .collect();

        let noise = Normal::new(0.0, PRICE_NOISE).expect("valid normal");
        let mut transactions = Vec::new();
        let first = YearMonth::of(cfg.start_date);
        for month in YearMonth::range_inclusive(first, YearMonth::of(cfg.end_date())) {
            for area in &subdistricts {
                let b = area.polygons[0].bbox();
                for _ in 0..TRANSACTIONS_PER_CELL_MONTH {
                    let lat = round6(rng.random_range(b.min_lat..b.max_lat));
                    let lon = round6(rng.random_range(b.min_lon..b.max_lon));
                    let location = GeoPoint::new(lat, lon)?;
                    let factor: f64 = 1.0 + noise.sample(rng);
                    let price = (layout.price_at(location) * factor.max(0.5)).round();
                    transactions.push(Transaction { location, month, price });
                }
            }
        }
        let rings = layout.rings()?;
        Ok(CityContext { subdistricts, rings, census, transactions })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let write_json = |name: &str, areas: &[Area]| {
            let path = dir.join(name);
            let text = serde_json::to_string_pretty(&areas_to_geojson(areas)).map_err(|e| Error::Internal(e.to_string()))?;
            std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
        };
        write_json(SUBDISTRICTS_FILE, &self.subdistricts)?;
        write_json(RINGS_FILE, &self.rings)?;

        let path = dir.join(CENSUS_FILE);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(CENSUS_CSV_HEADER).map_err(|e| Error::csv(&path, e))?;
        for (id, r) in &self.census {
            w.write_record([id.0.clone(), r.employment.to_string(), r.population.to_string()]).map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(TRANSACTIONS_FILE);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_transactions(std::io::BufWriter::new(file), &self.transactions).map_err(|e| Error::csv(&path, e))
    }
}

pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Kilometres per degree of longitude at `lat`.
pub(crate) fn km_per_deg_lon(lat: f64) -> f64 {
    KM_PER_DEG_LAT * lat.to_radians().cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::regions::{Region, RingModel};

    fn layout() -> CityLayout {
        CityLayout::for_extent(ScenarioConfig::baseline(0).extent)
    }

    #[test]
    fn rings_are_nested_and_classify_by_distance() {
        let l = layout();
        let model = RingModel::new(l.rings().unwrap()).unwrap();
        assert_eq!(model.region(l.center), Region::CityCore);
        assert_eq!(model.region(l.center.offset_km(0.0, 13.0)), Region::CityCore);
        assert_eq!(model.region(l.center.offset_km(-20.0, 0.0)), Region::InnerSuburb);
        assert_eq!(model.region(l.center.offset_km(0.0, -30.0)), Region::OuterSuburb);
        assert_eq!(model.region(l.center.offset_km(38.0, 0.0)), Region::Outside);
    }

    #[test]
    fn grid_covers_the_extent() {
        let l = layout();
        let set = SubdistrictSet::new(l.subdistricts().unwrap()).unwrap();
        assert_eq!(set.areas().len(), 144);
        let sw = GeoPoint::new(l.extent.min_lat + 0.001, l.extent.min_lon + 0.001).unwrap();
        assert_eq!(point_to_subdistrict(sw, &set), Placement::Inside("1".into()));
        assert_eq!(point_to_subdistrict(l.center.offset_km(0.1, 0.1), &set), Placement::Inside("79".into()));
        assert!(l.price_at(l.center) > l.price_at(l.center.offset_km(10.0, 0.0)));
    }
}

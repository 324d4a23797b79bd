//! Unweighted Gaussian KDE evaluated on a regular grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::{haversine_km, BoundingBox, GeoPoint, KM_PER_DEG_LAT};

/// Kernel contributions beyond this many bandwidths are ignored.
const CUTOFF_BANDWIDTHS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub lat: f64,
    pub lon: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub rows: usize,
    pub cols: usize,
    pub cell_km: f64,
    /// Row-major, south to north, west to east.
    pub cells: Vec<GridCell>,
}

impl DensityGrid {
    pub fn at(&self, row: usize, col: usize) -> &GridCell {
        &self.cells[row * self.cols + col]
    }

    /// Sum of density times cell area.
    pub fn integral(&self) -> f64 {
        self.cells.iter().map(|c| c.density).sum::<f64>() * self.cell_km * self.cell_km
    }

    pub fn argmax(&self) -> Option<&GridCell> {
        self.cells.iter().max_by(|a, b| a.density.total_cmp(&b.density))
    }

    /// Cells strictly greater than all 8 neighbours.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.at(r, c).density;
                let mut is_max = v > 0.0;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= self.rows as i64 || cc >= self.cols as i64 {
                            continue;
                        }
                        if self.at(rr as usize, cc as usize).density >= v {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    out.push((r, c));
                }
            }
        }
        out
    }
}

/// Density grid over the points' bounding box padded by three bandwidths,
/// normalized to integrate to one over the grid.
pub fn kde_hotspot_grid(points: &[GeoPoint], cell_km: f64, bandwidth_km: f64) -> Result<DensityGrid> {
    if points.is_empty() {
        return Err(Error::Data("KDE needs at least one point".into()));
    }
    if !(cell_km > 0.0 && bandwidth_km > 0.0) {
        return Err(Error::Config("cell_km and bandwidth_km must be > 0".into()));
    }
    let bb = BoundingBox::of_points(points).ok_or_else(|| Error::Internal("empty bbox".into()))?;
    let mid_lat = (bb.min_lat + bb.max_lat) / 2.0;
    let km_per_deg_lon = KM_PER_DEG_LAT * mid_lat.to_radians().cos();
    let pad = 3.0 * bandwidth_km;
    let (lat0, lat1) = (bb.min_lat - pad / KM_PER_DEG_LAT, bb.max_lat + pad / KM_PER_DEG_LAT);
    let (lon0, lon1) = (bb.min_lon - pad / km_per_deg_lon, bb.max_lon + pad / km_per_deg_lon);
    let dlat = cell_km / KM_PER_DEG_LAT;
    let dlon = cell_km / km_per_deg_lon;
    let rows = (((lat1 - lat0) / dlat).ceil() as usize).max(1);
    let cols = (((lon1 - lon0) / dlon).ceil() as usize).max(1);

    let mut sorted: Vec<GeoPoint> = points.to_vec();
    sorted.sort_by(|a, b| a.lat().total_cmp(&b.lat()).then(a.lon().total_cmp(&b.lon())));
    let cutoff = CUTOFF_BANDWIDTHS * bandwidth_km;
    let band_deg = cutoff / KM_PER_DEG_LAT;
    let two_h2 = 2.0 * bandwidth_km * bandwidth_km;

    let raw_rows: Vec<Vec<GridCell>> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let lat = lat0 + (r as f64 + 0.5) * dlat;
            let lo = sorted.partition_point(|p| p.lat() < lat - band_deg);
            let hi = sorted.partition_point(|p| p.lat() <= lat + band_deg);
            (0..cols)
                .map(|c| {
                    let lon = lon0 + (c as f64 + 0.5) * dlon;
                    let cell = GeoPoint::new_unchecked(lat, lon);
                    let density = sorted[lo..hi]
                        .iter()
                        .map(|p| haversine_km(cell, *p))
                        .filter(|&d| d <= cutoff)
                        .map(|d| (-(d * d) / two_h2).exp())
                        .sum();
                    GridCell { lat, lon, density }
                })
                .collect()
        })
        .collect();
    let mut cells: Vec<GridCell> = raw_rows.into_iter().flatten().collect();
    let total: f64 = cells.iter().map(|c| c.density).sum::<f64>() * cell_km * cell_km;
    if total > 0.0 {
        for c in &mut cells {
            c.density /= total;
        }
    }
    Ok(DensityGrid { rows, cols, cell_km, cells })
}

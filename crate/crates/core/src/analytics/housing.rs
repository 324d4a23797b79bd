//! Housing-price matching, binned post-minus-pre differences and the
//! ring-road region transition table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::regions::{Region, RingModel};
use super::stats::median;
use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint};

/// Default matching radius in km.
pub const PRICE_MATCH_RADIUS_KM: f64 = 3.0;

pub const TRANSACTION_CSV_HEADER: [&str; 4] = ["lat", "lon", "month", "price_per_m2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub location: GeoPoint,
    pub month: YearMonth,
    pub price: f64,
}

#[derive(Deserialize)]
struct TransactionRow {
    lat: f64,
    lon: f64,
    month: String,
    price_per_m2: f64,
}

pub fn read_transactions<R: std::io::Read>(reader: R) -> Result<Vec<Transaction>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    if header.iter().ne(TRANSACTION_CSV_HEADER.iter().copied()) {
        return Err(Error::Data(format!("transaction header must be `{}`", TRANSACTION_CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<TransactionRow>().enumerate() {
        let row = row.map_err(|e| Error::Data(format!("line {}: {e}", i + 2)))?;
        if !(row.price_per_m2.is_finite() && row.price_per_m2 > 0.0) {
            return Err(Error::Data(format!("line {}: price must be > 0", i + 2)));
        }
        out.push(Transaction {
            location: GeoPoint::new(row.lat, row.lon)?,
            month: row.month.parse().map_err(|e: String| Error::Data(format!("line {}: {e}", i + 2)))?,
            price: row.price_per_m2,
        });
    }
    Ok(out)
}

pub fn load_transactions(path: &Path) -> Result<Vec<Transaction>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_transactions(f).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn write_transactions<W: std::io::Write>(writer: W, txns: &[Transaction]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRANSACTION_CSV_HEADER)?;
    for t in txns {
        w.write_record([t.location.lat().to_string(), t.location.lon().to_string(), t.month.to_string(), t.price.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Median price of same-month transactions within `radius_km`; `None` when nothing matches.
pub fn match_housing_price(center: GeoPoint, month: YearMonth, txns: &[Transaction], radius_km: f64) -> Option<f64> {
    let prices: Vec<f64> = txns.iter().filter(|t| t.month == month && haversine_km(center, t.location) <= radius_km).map(|t| t.price).collect();
    median(&prices)
}

/// Transactions grouped by month for repeated matching.
#[derive(Debug, Clone, Default)]
pub struct TransactionIndex {
    by_month: BTreeMap<YearMonth, Vec<Transaction>>,
}

impl TransactionIndex {
    pub fn new(txns: &[Transaction]) -> Self {
        let mut by_month: BTreeMap<YearMonth, Vec<Transaction>> = BTreeMap::new();
        for t in txns {
            by_month.entry(t.month).or_default().push(t.clone());
        }
        TransactionIndex { by_month }
    }

    pub fn match_price(&self, center: GeoPoint, month: YearMonth, radius_km: f64) -> Option<f64> {
        self.by_month.get(&month).and_then(|t| match_housing_price(center, month, t, radius_km))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinStat {
    /// Inclusive lower edge.
    pub lower: f64,
    /// Exclusive upper edge.
    pub upper: f64,
    pub count: usize,
    pub mean_diff: f64,
}

/// Groups pairs by `floor(pre / bin_width)` and averages `post - pre` per bin.
pub fn binned_post_pre_diff(pairs: &[(f64, f64)], bin_width: f64) -> Result<BTreeMap<i64, BinStat>> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::Config(format!("bin_width must be > 0, got {bin_width}")));
    }
    let mut acc: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
    for &(pre, post) in pairs {
        let bin = (pre / bin_width).floor() as i64;
        let e = acc.entry(bin).or_default();
        e.0 += 1;
        e.1 += post - pre;
    }
    Ok(acc
        .into_iter()
        .map(|(bin, (count, sum))| {
            let lower = bin as f64 * bin_width;
            (bin, BinStat { lower, upper: lower + bin_width, count, mean_diff: sum / count as f64 })
        })
        .collect())
}

/// A housing move with matched prices and commuting distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricedHousingMove {
    pub from: GeoPoint,
    pub to: GeoPoint,
    pub pre_price: f64,
    pub post_price: f64,
    pub pre_commute_km: f64,
    pub post_commute_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionCell {
    pub mean_delta_price: f64,
    pub mean_delta_commute_km: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RegionTransitions {
    pub cells: BTreeMap<(Region, Region), TransitionCell>,
    pub spilled: usize,
}

pub fn region_transitions(moves: &[PricedHousingMove], rings: &RingModel) -> RegionTransitions {
    let mut acc: BTreeMap<(Region, Region), (usize, f64, f64)> = BTreeMap::new();
    let mut spilled = 0;
    for m in moves {
        let (from, to) = (rings.region(m.from), rings.region(m.to));
        if from == Region::Outside || to == Region::Outside {
            spilled += 1;
            continue;
        }
        let e = acc.entry((from, to)).or_default();
        e.0 += 1;
        e.1 += m.post_price - m.pre_price;
        e.2 += m.post_commute_km - m.pre_commute_km;
    }
    let cells = acc
        .into_iter()
        .map(|(k, (n, dp, dc))| (k, TransitionCell { mean_delta_price: dp / n as f64, mean_delta_commute_km: dc / n as f64, count: n }))
        .collect();
    RegionTransitions { cells, spilled }
}

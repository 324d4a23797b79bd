//! Delivery orders, the order log and CSV ingestion.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// Exact header of the order CSV.
pub const ORDER_CSV_HEADER: [&str; 6] = ["user_id", "restaurant_id", "lat", "lon", "arrive_time", "cost_time_min"];

/// `arrive_time` format.
pub const TIME_FORMAT: &str = "%Y-%m-%d %H:%M";

macro_rules! id_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

id_newtype!(
    /// Opaque user identifier.
    UserId
);
id_newtype!(
    /// Opaque restaurant identifier.
    RestaurantId
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub user_id: UserId,
    pub restaurant_id: RestaurantId,
    pub location: GeoPoint,
    pub delivered_at: NaiveDateTime,
    pub delivery_minutes: f64,
}

impl Order {
    pub fn new(
        user_id: impl Into<UserId>,
        restaurant_id: impl Into<RestaurantId>,
        location: GeoPoint,
        delivered_at: NaiveDateTime,
        delivery_minutes: f64,
    ) -> Result<Self> {
        if !(delivery_minutes.is_finite() && delivery_minutes >= 0.0) {
            return Err(Error::Data(format!("delivery_minutes must be finite and >= 0, got {delivery_minutes}")));
        }
        Ok(Order {
            user_id: user_id.into(),
            restaurant_id: restaurant_id.into(),
            location,
            delivered_at,
            delivery_minutes,
        })
    }

    /// Stable log order: user, time, restaurant, then the remaining fields.
    fn log_cmp(&self, other: &Order) -> Ordering {
        self.user_id
            .cmp(&other.user_id)
            .then(self.delivered_at.cmp(&other.delivered_at))
            .then(self.restaurant_id.cmp(&other.restaurant_id))
            .then(self.location.lat().total_cmp(&other.location.lat()))
            .then(self.location.lon().total_cmp(&other.location.lon()))
            .then(self.delivery_minutes.total_cmp(&other.delivery_minutes))
    }
}

/// Orders sorted by (user, delivered_at, restaurant) with their time span.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrderLog {
    orders: Vec<Order>,
    span: Option<(NaiveDateTime, NaiveDateTime)>,
}

impl OrderLog {
    pub fn new(mut orders: Vec<Order>) -> Self {
        orders.sort_by(Order::log_cmp);
        let span = orders.iter().map(|o| o.delivered_at).fold(None, |acc, t| match acc {
            None => Some((t, t)),
            Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
        });
        OrderLog { orders, span }
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn into_orders(self) -> Vec<Order> {
        self.orders
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// `[min, max]` delivered_at, `None` for an empty log.
    pub fn span(&self) -> Option<(NaiveDateTime, NaiveDateTime)> {
        self.span
    }

    /// Contiguous per-user slices in user order.
    pub fn by_user(&self) -> impl Iterator<Item = (&UserId, &[Order])> {
        self.orders.chunk_by(|a, b| a.user_id == b.user_id).map(|chunk| (&chunk[0].user_id, chunk))
    }

    pub fn user_count(&self) -> usize {
        self.by_user().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowDiagnostic {
    /// 1-based line number in the file, header is line 1.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub rows_read: u64,
    pub accepted: u64,
    pub duplicates: u64,
    pub rejected: Vec<RowDiagnostic>,
}

#[derive(Deserialize)]
struct OrderRow {
    user_id: String,
    restaurant_id: String,
    lat: f64,
    lon: f64,
    arrive_time: String,
    cost_time_min: f64,
}

impl OrderRow {
    fn into_order(self) -> std::result::Result<Order, String> {
        let location = GeoPoint::new(self.lat, self.lon).map_err(|e| e.to_string())?;
        let delivered_at = NaiveDateTime::parse_from_str(&self.arrive_time, TIME_FORMAT)
            .map_err(|e| format!("arrive_time {:?}: {e}", self.arrive_time))?;
        if self.user_id.is_empty() || self.restaurant_id.is_empty() {
            return Err("empty identifier".into());
        }
        Order::new(self.user_id, self.restaurant_id, location, delivered_at, self.cost_time_min).map_err(|e| e.to_string())
    }
}

/// Reads an order CSV. Malformed rows are rejected with a line-numbered
/// diagnostic; exact duplicate rows are collapsed and counted.
pub fn read_orders<R: Read>(reader: R) -> std::result::Result<(OrderLog, LoadReport), String> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(ORDER_CSV_HEADER.iter().copied()) {
        return Err(format!("header mismatch: expected `{}`, found `{}`", ORDER_CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut report = LoadReport::default();
    let mut orders = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        report.rows_read += 1;
        let line = rec.as_ref().ok().and_then(|r| r.position()).map(|p| p.line()).unwrap_or(i as u64 + 2);
        let parsed = rec
            .map_err(|e| e.to_string())
            .and_then(|r| r.deserialize::<OrderRow>(Some(&header)).map_err(|e| e.to_string()))
            .and_then(OrderRow::into_order);
        match parsed {
            Ok(o) => orders.push(o),
            Err(message) => report.rejected.push(RowDiagnostic { line, message }),
        }
    }
    let before = orders.len();
    orders.sort_by(Order::log_cmp);
    orders.dedup();
    report.duplicates = (before - orders.len()) as u64;
    report.accepted = orders.len() as u64;
    Ok((OrderLog::new(orders), report))
}

pub fn load_orders(path: &Path) -> Result<(OrderLog, LoadReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_orders(std::io::BufReader::new(file)).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn write_orders_to<W: Write>(writer: W, log: &OrderLog) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ORDER_CSV_HEADER)?;
    for o in log.orders() {
        w.write_record([
            o.user_id.0.as_str(),
            o.restaurant_id.0.as_str(),
            &o.location.lat().to_string(),
            &o.location.lon().to_string(),
            &o.delivered_at.format(TIME_FORMAT).to_string(),
            &o.delivery_minutes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_orders(path: &Path, log: &OrderLog) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_orders_to(std::io::BufWriter::new(file), log).map_err(|e| Error::csv(path, e))
}

/// Drops users with fewer than `min_orders` orders.
pub fn filter_adhoc_users(log: &OrderLog, min_orders: usize) -> OrderLog {
    let min_orders = min_orders.max(1);
    let kept: Vec<Order> = log
        .by_user()
        .filter(|(_, orders)| orders.len() >= min_orders)
        .flat_map(|(_, orders)| orders.iter().cloned())
        .collect();
    OrderLog::new(kept)
}

/// Number of orders per user.
pub fn orders_per_user(log: &OrderLog) -> BTreeMap<UserId, usize> {
    log.by_user().map(|(u, o)| (u.clone(), o.len())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    const HEADER: &str = "user_id,restaurant_id,lat,lon,arrive_time,cost_time_min\n";

    fn order(user: &str, rest: &str, day: u32, minutes: f64) -> Order {
        let t = NaiveDate::from_ymd_opt(2016, 3, day).unwrap().and_hms_opt(12, 0, 0).unwrap();
        Order::new(user, rest, GeoPoint::new(39.9, 116.4).unwrap(), t, minutes).unwrap()
    }

    #[test]
    fn loads_well_formed_rows() {
        let csv = format!("{HEADER}u1,r1,39.9,116.4,2016-03-01 12:00,30\nu1,r2,39.91,116.41,2016-03-02 12:30,25.5\nu2,r1,39.9,116.4,2016-03-01 19:00,40\n");
        let (log, report) = read_orders(csv.as_bytes()).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(report.accepted, 3);
        assert!(report.rejected.is_empty());
        assert_eq!(log.user_count(), 2);
    }

    #[test]
    fn negative_minutes_rejected_with_line() {
        let csv = format!("{HEADER}u1,r1,39.9,116.4,2016-03-01 12:00,30\nu1,r2,39.9,116.4,2016-03-01 13:00,-4\n");
        let (log, report) = read_orders(csv.as_bytes()).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].line, 3);
    }

    #[test]
    fn malformed_rows_do_not_abort() {
        let csv = format!("{HEADER}u1,r1,abc,116.4,2016-03-01 12:00,30\nu1,r1,39.9,116.4,2016/03/01,30\nu1,r1,95,116.4,2016-03-01 12:00,30\n");
        let (log, report) = read_orders(csv.as_bytes()).unwrap();
        assert!(log.is_empty());
        assert_eq!(report.rejected.iter().map(|d| d.line).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn duplicates_collapsed() {
        let csv = format!("{HEADER}u1,r1,39.9,116.4,2016-03-01 12:00,30\nu1,r1,39.9,116.4,2016-03-01 12:00,30\n");
        let (log, report) = read_orders(csv.as_bytes()).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(report.duplicates, 1);
    }

    #[test]
    fn header_must_match_exactly() {
        let csv = "user,restaurant_id,lat,lon,arrive_time,cost_time_min\n";
        assert!(read_orders(csv.as_bytes()).is_err());
    }

    #[test]
    fn adhoc_filter_boundary() {
        let mut orders: Vec<Order> = (1..=9).map(|d| order("nine", "r", d, 30.0)).collect();
        orders.extend((1..=10).map(|d| order("ten", "r", d, 30.0)));
        let log = OrderLog::new(orders);
        let kept = filter_adhoc_users(&log, 10);
        assert_eq!(kept.by_user().map(|(u, _)| u.0.clone()).collect::<Vec<_>>(), vec!["ten"]);
        assert!(filter_adhoc_users(&OrderLog::default(), 10).is_empty());
    }

    #[test]
    fn log_is_sorted_and_spanned() {
        let log = OrderLog::new(vec![order("b", "r", 5, 1.0), order("a", "r", 9, 1.0), order("a", "q", 2, 1.0)]);
        let keys: Vec<_> = log.orders().iter().map(|o| (o.user_id.0.clone(), o.delivered_at.format("%d").to_string())).collect();
        assert_eq!(keys, vec![("a".into(), "02".into()), ("a".into(), "09".into()), ("b".into(), "05".into())]);
        let (lo, hi) = log.span().unwrap();
        assert_eq!(lo.format("%d").to_string(), "02");
        assert_eq!(hi.format("%d").to_string(), "09");
    }

    fn arb_order() -> impl Strategy<Value = Order> {
        (0u8..4, 0u8..5, 39.0..41.0f64, 116.0..117.0f64, 1u32..28, 0u32..24, 0u32..60, 0.0..90.0f64).prop_map(
            |(u, r, lat, lon, d, h, m, mins)| {
                let t = NaiveDate::from_ymd_opt(2016, 5, d).unwrap().and_hms_opt(h, m, 0).unwrap();
                Order::new(format!("u{u}"), format!("r{r}"), GeoPoint::new(lat, lon).unwrap(), t, mins).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn write_then_load_is_fixed_point(orders in proptest::collection::vec(arb_order(), 0..40)) {
            let log = OrderLog::new(orders);
            let mut buf = Vec::new();
            write_orders_to(&mut buf, &log).unwrap();
            let (back, report) = read_orders(buf.as_slice()).unwrap();
            prop_assert!(report.rejected.is_empty());
            let mut buf2 = Vec::new();
            write_orders_to(&mut buf2, &back).unwrap();
            prop_assert_eq!(&buf, &buf2);
            prop_assert_eq!(back.len() as u64 + report.duplicates, log.len() as u64);
        }

        #[test]
        fn adhoc_filter_idempotent_and_monotone(orders in proptest::collection::vec(arb_order(), 0..60), a in 1usize..8, b in 1usize..8) {
            let log = OrderLog::new(orders);
            let once = filter_adhoc_users(&log, a);
            prop_assert_eq!(&filter_adhoc_users(&once, a), &once);
            let (lo, hi) = (a.min(b), a.max(b));
            let users_lo: Vec<_> = orders_per_user(&filter_adhoc_users(&log, lo)).into_keys().collect();
            let users_hi: Vec<_> = orders_per_user(&filter_adhoc_users(&log, hi)).into_keys().collect();
            prop_assert!(users_hi.iter().all(|u| users_lo.contains(u)));
        }
    }
}

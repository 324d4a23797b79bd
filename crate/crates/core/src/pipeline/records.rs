//! Row types of the stage output files and their CSV readers and writers.

use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::calendar::{SlotLabel, YearMonth};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::hubprofile::{HubLabel, SlotVector};
use crate::moves::{LabeledHub, Move, MoveKind};
use crate::orders::UserId;
use crate::wkms::DiningHub;

pub const HUBS_FILE: &str = "hubs.csv";
pub const LABELED_HUBS_FILE: &str = "labeled_hubs.csv";
pub const HUB_PROFILES_FILE: &str = "hub_profiles.csv";
pub const MOVES_FILE: &str = "moves.csv";
pub const USERS_FILE: &str = "users.csv";

mod minute_time {
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::orders::TIME_FORMAT;

    pub fn serialize<S: Serializer>(t: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&t.format(TIME_FORMAT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let text = String::deserialize(d)?;
        NaiveDateTime::parse_from_str(&text, TIME_FORMAT).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubRecord {
    pub user_id: UserId,
    pub hub_id: u32,
    pub center_lat: f64,
    pub center_lon: f64,
    pub n_restaurants: usize,
    pub n_orders: usize,
    #[serde(with = "minute_time")]
    pub first_order: NaiveDateTime,
    #[serde(with = "minute_time")]
    pub last_order: NaiveDateTime,
}

impl HubRecord {
    pub fn of(hub: &DiningHub) -> Self {
        HubRecord {
            user_id: hub.user_id.clone(),
            hub_id: hub.hub_id,
            center_lat: hub.center.lat(),
            center_lon: hub.center.lon(),
            n_restaurants: hub.members.len(),
            n_orders: hub.order_count(),
            first_order: hub.first_order,
            last_order: hub.last_order,
        }
    }
}

/// Hub columns plus the H/W/O label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledHubRecord {
    pub user_id: UserId,
    pub hub_id: u32,
    pub center_lat: f64,
    pub center_lon: f64,
    pub n_restaurants: usize,
    pub n_orders: usize,
    #[serde(with = "minute_time")]
    pub first_order: NaiveDateTime,
    #[serde(with = "minute_time")]
    pub last_order: NaiveDateTime,
    pub label: HubLabel,
}

impl LabeledHubRecord {
    pub fn of(h: &LabeledHub) -> Self {
        let r = HubRecord::of(&h.hub);
        LabeledHubRecord {
            user_id: r.user_id,
            hub_id: r.hub_id,
            center_lat: r.center_lat,
            center_lon: r.center_lon,
            n_restaurants: r.n_restaurants,
            n_orders: r.n_orders,
            first_order: r.first_order,
            last_order: r.last_order,
            label: h.label,
        }
    }

    pub fn center(&self) -> Result<GeoPoint> {
        GeoPoint::new(self.center_lat, self.center_lon)
    }

    /// A hub carrying only center, label and activity interval.
    pub fn to_labeled_hub(&self) -> Result<LabeledHub> {
        let hub = DiningHub {
            user_id: self.user_id.clone(),
            hub_id: self.hub_id,
            center: self.center()?,
            members: Vec::new(),
            orders: Vec::new(),
            first_order: self.first_order,
            last_order: self.last_order,
        };
        Ok(LabeledHub { hub, label: self.label })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub user_id: UserId,
    pub kind: MoveKind,
    pub from_lat: f64,
    pub from_lon: f64,
    pub to_lat: f64,
    pub to_lon: f64,
    pub move_month: YearMonth,
    pub displacement_km: f64,
    pub pre_commute_km: Option<f64>,
    pub post_commute_km: Option<f64>,
}

impl MoveRecord {
    pub fn of(m: &Move) -> Self {
        MoveRecord {
            user_id: m.user_id.clone(),
            kind: m.kind,
            from_lat: m.from_center.lat(),
            from_lon: m.from_center.lon(),
            to_lat: m.to_center.lat(),
            to_lon: m.to_center.lon(),
            move_month: m.move_month,
            displacement_km: m.displacement_km,
            pre_commute_km: m.pre_commute_km,
            post_commute_km: m.post_commute_km,
        }
    }

    pub fn from(&self) -> Result<GeoPoint> {
        GeoPoint::new(self.from_lat, self.from_lon)
    }

    pub fn to(&self) -> Result<GeoPoint> {
        GeoPoint::new(self.to_lat, self.to_lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: UserId,
    pub n_orders: usize,
    pub clusterable: bool,
    pub n_hubs: usize,
    pub n_temporary: usize,
    pub n_home: usize,
    pub n_work: usize,
    pub n_other: usize,
    pub n_housing_moves: usize,
    pub n_job_moves: usize,
    /// `stayer`, `job_hopper`, `home_mover`, `job_hopper+home_mover`,
    /// `no_home_hub`, `no_work_hub`, `unclusterable` or `adhoc`.
    pub group: String,
}

/// Time-slot profile and overtime ratio of one hub.
#[derive(Debug, Clone, PartialEq)]
pub struct HubProfileRecord {
    pub user_id: UserId,
    pub hub_id: u32,
    pub label: HubLabel,
    pub overtime_ratio: f64,
    pub freq: SlotVector,
}

fn profile_header() -> Vec<String> {
    let mut h: Vec<String> = ["user_id", "hub_id", "label", "overtime_ratio"].iter().map(|s| s.to_string()).collect();
    h.extend(SlotLabel::all().map(|l| format!("{:?}_{:?}", l.day_type, l.slot).to_lowercase()));
    h
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_writer(std::io::BufWriter::new(file));
    if rows.is_empty() {
        w.write_record(header).map_err(|e| Error::csv(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(std::io::BufReader::new(file))
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 2))))
        .collect()
}

pub const HUB_HEADER: [&str; 8] = ["user_id", "hub_id", "center_lat", "center_lon", "n_restaurants", "n_orders", "first_order", "last_order"];
pub const LABELED_HUB_HEADER: [&str; 9] =
    ["user_id", "hub_id", "center_lat", "center_lon", "n_restaurants", "n_orders", "first_order", "last_order", "label"];
pub const MOVE_HEADER: [&str; 10] =
    ["user_id", "kind", "from_lat", "from_lon", "to_lat", "to_lon", "move_month", "displacement_km", "pre_commute_km", "post_commute_km"];
pub const USER_HEADER: [&str; 11] =
    ["user_id", "n_orders", "clusterable", "n_hubs", "n_temporary", "n_home", "n_work", "n_other", "n_housing_moves", "n_job_moves", "group"];

pub fn write_profiles(path: &Path, rows: &[HubProfileRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(profile_header()).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        let mut rec = vec![r.user_id.0.clone(), r.hub_id.to_string(), r.label.code().to_string(), r.overtime_ratio.to_string()];
        rec.extend(r.freq.iter().map(f64::to_string));
        w.write_record(rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_profiles(path: &Path) -> Result<Vec<HubProfileRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let bad = |line: usize, what: &str| Error::Data(format!("{} line {line}: {what}", path.display()));
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(profile_header().iter().map(String::as_str)) {
        return Err(bad(1, "unexpected header"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        let num = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(line, "malformed number"));
        let mut freq = [0.0; SlotLabel::COUNT];
        for (k, f) in freq.iter_mut().enumerate() {
            *f = num(4 + k)?;
        }
        out.push(HubProfileRecord {
            user_id: UserId(rec[0].to_string()),
            hub_id: rec[1].parse().map_err(|_| bad(line, "malformed hub_id"))?,
            label: HubLabel::from_code(&rec[2]).ok_or_else(|| bad(line, "label must be H, W or O"))?,
            overtime_ratio: num(3)?,
            freq,
        });
    }
    Ok(out)
}

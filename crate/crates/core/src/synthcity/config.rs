use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::{HolidayCalendar, SlotLabel};
use crate::error::{Error, Result};
use crate::geo::BoundingBox;
use crate::hubprofile::SlotVector;
use crate::wkms::DeliveryMethod;

const SHARE_TOLERANCE: f64 = 1e-9;

/// Mix of user scripts. Shares must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeShares {
    pub stayer: f64,
    pub job_hopper: f64,
    pub home_mover: f64,
    pub both: f64,
}

impl ArchetypeShares {
    pub fn as_array(&self) -> [f64; 4] {
        [self.stayer, self.job_hopper, self.home_mover, self.both]
    }
}

/// Orders per user: `min` plus a Poisson draw with mean `mean - min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdersPerUser {
    pub min: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub extent: BoundingBox,
    pub n_users: usize,
    pub n_restaurants: usize,
    pub delivery_method_mix: BTreeMap<DeliveryMethod, f64>,
    pub per_method_radius_p95_km: BTreeMap<DeliveryMethod, f64>,
    pub archetype_shares: ArchetypeShares,
    pub orders_per_user: OrdersPerUser,
    pub span_months: u32,
    pub move_month_weights: [f64; 12],
    pub home_slot_profile: SlotVector,
    pub work_slot_profile: SlotVector,
    pub noise: f64,

    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
    /// Log-space standard deviation of each method's radius distribution.
    #[serde(default = "default_log_sd")]
    pub per_method_radius_log_sd: BTreeMap<DeliveryMethod, f64>,
    /// Probability that an order is placed from the home anchor.
    #[serde(default = "default_home_share")]
    pub home_order_share: f64,
    /// Every pair of one user's anchors is at least this far apart.
    #[serde(default = "default_separation")]
    pub min_anchor_separation_km: f64,
    /// Range of a scripted move's displacement.
    #[serde(default = "default_displacement")]
    pub displacement_km: [f64; 2],
    #[serde(default = "default_favorites")]
    pub favorites_per_anchor: [usize; 2],
    /// Decay length of the preference for restaurants near an anchor.
    #[serde(default = "default_preference_scale")]
    pub preference_scale_km: f64,
    /// Radius searched for an anchor's favorite restaurants.
    #[serde(default = "default_favorite_search")]
    pub favorite_search_km: f64,
    /// Anchors keep at least this distance from the extent's edges.
    #[serde(default = "default_edge_inset")]
    pub edge_inset_km: f64,
    /// Holidays; `None` uses New Year, Labour Day and National Day weeks.
    #[serde(default)]
    pub holidays: Option<Vec<NaiveDate>>,
    /// Months excluded from moves at each end of the span; `None` is a third of the span.
    #[serde(default)]
    pub move_window_margin_months: Option<u32>,
    /// Home movers start in the city core and move outward, away from work.
    #[serde(default)]
    pub outward_housing_moves: bool,
    /// Also emit subdistricts, rings, census and transactions.
    #[serde(default)]
    pub city_context: bool,
    /// Share of users with an extra Other anchor that never moves.
    #[serde(default = "default_other_anchor_share")]
    pub other_anchor_share: f64,
    /// Probability that an order of such a user comes from the Other anchor.
    #[serde(default = "default_other_order_share")]
    pub other_order_share: f64,
    /// Slot profiles of Other anchors; each such user draws one uniformly.
    #[serde(default = "default_other_profiles")]
    pub other_slot_profiles: Vec<SlotVector>,
}

fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 1, 1).expect("valid date")
}

fn default_log_sd() -> BTreeMap<DeliveryMethod, f64> {
    DeliveryMethod::ALL.iter().map(|&m| (m, if m == DeliveryMethod::SelfDelivery { 0.82 } else { 0.05 })).collect()
}

fn default_home_share() -> f64 {
    0.5
}

fn default_separation() -> f64 {
    12.0
}

fn default_displacement() -> [f64; 2] {
    [12.0, 25.0]
}

fn default_favorites() -> [usize; 2] {
    [6, 10]
}

fn default_preference_scale() -> f64 {
    0.5
}

fn default_favorite_search() -> f64 {
    5.0
}

fn default_edge_inset() -> f64 {
    6.0
}

fn default_other_anchor_share() -> f64 {
    0.5
}

fn default_other_order_share() -> f64 {
    0.15
}

fn default_other_profiles() -> Vec<SlotVector> {
    vec![AFTERNOON_PROFILE, MORNING_PROFILE]
}

/// Home profile: weekday evenings and nights, weekends and holidays.
pub(crate) const HOME_PROFILE: SlotVector = [
    0.03, 0.03, 0.02, 0.22, 0.10, // weekday
    0.08, 0.15, 0.06, 0.15, 0.05, // weekend
    0.02, 0.03, 0.02, 0.03, 0.01, // holiday
];

/// Other profile: weekday and weekend afternoons.
pub(crate) const AFTERNOON_PROFILE: SlotVector = [
    0.03, 0.07, 0.45, 0.05, 0.00, // weekday
    0.02, 0.08, 0.20, 0.03, 0.00, // weekend
    0.00, 0.02, 0.04, 0.01, 0.00, // holiday
];

/// Other profile: breakfast, mostly on weekdays.
pub(crate) const MORNING_PROFILE: SlotVector = [
    0.50, 0.05, 0.05, 0.02, 0.03, // weekday
    0.22, 0.03, 0.02, 0.01, 0.01, // weekend
    0.04, 0.01, 0.01, 0.00, 0.00, // holiday
];

/// Work profile: weekday lunch dominates.
pub(crate) const WORK_PROFILE: SlotVector = [
    0.12, 0.70, 0.10, 0.05, 0.01, // weekday
    0.00, 0.02, 0.00, 0.00, 0.00, // weekend
    0.00, 0.00, 0.00, 0.00, 0.00, // holiday
];

impl ScenarioConfig {
    /// Table II delivery mix over a Beijing-sized extent, 36 months, no noise.
    pub fn baseline(seed: u64) -> Self {
        use DeliveryMethod::*;
        ScenarioConfig {
            seed,
            extent: BoundingBox { min_lat: 39.55, min_lon: 115.95, max_lat: 40.25, max_lon: 116.85 },
            n_users: 1000,
            n_restaurants: 20_000,
            delivery_method_mix: [(BaiduLogistics, 0.6011), (BaiduZhongbao, 0.0473), (CityExpress, 0.2357), (SelfDelivery, 0.1159)].into(),
            per_method_radius_p95_km: [(BaiduLogistics, 3.35), (BaiduZhongbao, 3.70), (CityExpress, 4.18), (SelfDelivery, 14.87)].into(),
            archetype_shares: ArchetypeShares { stayer: 0.4, job_hopper: 0.2, home_mover: 0.2, both: 0.2 },
            orders_per_user: OrdersPerUser { min: 10, mean: 200.0 },
            span_months: 36,
            move_month_weights: [1.0; 12],
            home_slot_profile: HOME_PROFILE,
            work_slot_profile: WORK_PROFILE,
            noise: 0.0,
            start_date: default_start_date(),
            per_method_radius_log_sd: default_log_sd(),
            home_order_share: default_home_share(),
            min_anchor_separation_km: default_separation(),
            displacement_km: default_displacement(),
            favorites_per_anchor: default_favorites(),
            preference_scale_km: default_preference_scale(),
            favorite_search_km: default_favorite_search(),
            edge_inset_km: default_edge_inset(),
            holidays: None,
            move_window_margin_months: None,
            outward_housing_moves: false,
            city_context: false,
            other_anchor_share: default_other_anchor_share(),
            other_order_share: default_other_order_share(),
            other_slot_profiles: default_other_profiles(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("{field}: {why}")));
        self.extent.validate().map_err(|e| Error::Config(format!("extent: {e}")))?;
        if self.n_users == 0 {
            return bad("n_users", "must be at least 1".into());
        }
        if self.n_restaurants == 0 {
            return bad("n_restaurants", "must be at least 1".into());
        }
        check_shares("delivery_method_mix", self.delivery_method_mix.values().copied())?;
        check_shares("archetype_shares", self.archetype_shares.as_array())?;
        for (method, share) in &self.delivery_method_mix {
            let positive = |m: &BTreeMap<DeliveryMethod, f64>| m.get(method).is_some_and(|v| v.is_finite() && *v > 0.0);
            if *share > 0.0 && !positive(&self.per_method_radius_p95_km) {
                return bad("per_method_radius_p95_km", format!("needs a positive value for {method:?}"));
            }
            if *share > 0.0 && !positive(&self.per_method_radius_log_sd) {
                return bad("per_method_radius_log_sd", format!("needs a positive value for {method:?}"));
            }
        }
        if self.orders_per_user.min < 10 {
            return bad("orders_per_user.min", format!("must be at least 10, got {}", self.orders_per_user.min));
        }
        if !(self.orders_per_user.mean.is_finite() && self.orders_per_user.mean >= self.orders_per_user.min as f64) {
            return bad("orders_per_user.mean", "must be finite and at least orders_per_user.min".into());
        }
        if self.span_months < 2 {
            return bad("span_months", format!("must cover at least twice the 30-day hub duration, got {}", self.span_months));
        }
        let margin = self.move_margin();
        if 2 * margin >= self.span_months {
            return bad("move_window_margin_months", format!("{margin} leaves no months for moves in a {}-month span", self.span_months));
        }
        check_weights("move_month_weights", &self.move_month_weights)?;
        check_weights("home_slot_profile", &self.home_slot_profile)?;
        check_weights("work_slot_profile", &self.work_slot_profile)?;
        if !(0.0..1.0).contains(&self.noise) {
            return bad("noise", format!("must be in [0, 1), got {}", self.noise));
        }
        if !(self.home_order_share > 0.0 && self.home_order_share < 1.0) {
            return bad("home_order_share", format!("must be in (0, 1), got {}", self.home_order_share));
        }
        if !(0.0..=1.0).contains(&self.other_anchor_share) {
            return bad("other_anchor_share", format!("must be in [0, 1], got {}", self.other_anchor_share));
        }
        if !(0.0..1.0).contains(&self.other_order_share) {
            return bad("other_order_share", format!("must be in [0, 1), got {}", self.other_order_share));
        }
        if self.other_anchor_share > 0.0 && self.other_slot_profiles.is_empty() {
            return bad("other_slot_profiles", "needs at least one profile when other_anchor_share > 0".into());
        }
        for p in &self.other_slot_profiles {
            check_weights("other_slot_profiles", p)?;
        }
        let [dmin, dmax] = self.displacement_km;
        if !(dmin.is_finite() && dmax.is_finite() && dmin > 0.0 && dmin <= dmax) {
            return bad("displacement_km", format!("needs 0 < min <= max, got {:?}", self.displacement_km));
        }
        let [fmin, fmax] = self.favorites_per_anchor;
        if fmin == 0 || fmin > fmax {
            return bad("favorites_per_anchor", format!("needs 1 <= min <= max, got {:?}", self.favorites_per_anchor));
        }
        for (field, v) in [
            ("min_anchor_separation_km", self.min_anchor_separation_km),
            ("preference_scale_km", self.preference_scale_km),
            ("favorite_search_km", self.favorite_search_km),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, format!("must be positive, got {v}"));
            }
        }
        if !(self.edge_inset_km.is_finite() && self.edge_inset_km >= 0.0) {
            return bad("edge_inset_km", format!("must be non-negative, got {}", self.edge_inset_km));
        }
        Ok(())
    }

    pub(crate) fn move_margin(&self) -> u32 {
        self.move_window_margin_months.unwrap_or(self.span_months / 3)
    }

    /// Last day covered by the scenario.
    pub fn end_date(&self) -> NaiveDate {
        let end = crate::calendar::YearMonth::of(self.start_date).plus_months(i64::from(self.span_months));
        end.first_day().pred_opt().expect("date in range")
    }

    pub fn calendar(&self) -> HolidayCalendar {
        match &self.holidays {
            Some(days) => HolidayCalendar::with_holidays(days.iter().copied()),
            None => HolidayCalendar::with_holidays(default_holidays(self.start_date, self.end_date())),
        }
    }
}

/// New Year's Day, May 1-3 and October 1-7 of every year in range.
fn default_holidays(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    use chrono::Datelike;
    let mut out = Vec::new();
    for year in from.year()..=to.year() {
        let days = [(1, 1)].into_iter().chain((1..=3).map(|d| (5, d))).chain((1..=7).map(|d| (10, d)));
        out.extend(days.filter_map(|(m, d)| NaiveDate::from_ymd_opt(year, m, d)).filter(|d| (from..=to).contains(d)));
    }
    out
}

fn check_shares(field: &str, shares: impl IntoIterator<Item = f64>) -> Result<()> {
    let shares: Vec<f64> = shares.into_iter().collect();
    if shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Config(format!("{field}: shares must be non-negative")));
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > SHARE_TOLERANCE {
        return Err(Error::Config(format!("{field}: shares sum to {total}, expected 1")));
    }
    Ok(())
}

fn check_weights(field: &str, weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Config(format!("{field}: weights must be non-negative with a positive total")));
    }
    Ok(())
}

/// Slot weights with day types that never occur in the span zeroed out.
pub(crate) fn usable_profile(profile: &SlotVector, present: &[bool; 3]) -> Option<SlotVector> {
    let mut out = *profile;
    for label in SlotLabel::all() {
        if !present[label.day_type as usize] {
            out[label.index()] = 0.0;
        }
    }
    (out.iter().sum::<f64>() > 0.0).then_some(out)
}

//! Weighted kernelized mean shift: turns one user's orders into dining hubs.
//!
//! Every restaurant a user ordered from becomes a site weighted by the
//! inverse of its mean delivery time to that user. Mean shift with a
//! weighted Gaussian kernel (great-circle distance, truncated at 3 sigma)
//! is run from every site; converged points that land within
//! `mode_merge_km` of each other are merged into one mode. Restaurants are
//! then assigned to the nearest mode within `sigma_km`, and hub centers
//! are the weighted centroids of their members, pruned until every member
//! lies within `sigma_km` of its center.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_km, weighted_centroid, GeoPoint};
use crate::orders::{Order, RestaurantId, UserId};

/// Mean delivery times below this many minutes are floored before inversion.
pub const EPSILON_MINUTES: f64 = 1.0;

/// Kernel support, in multiples of sigma.
pub const TRUNCATION_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSite {
    pub restaurant_id: RestaurantId,
    pub location: GeoPoint,
    /// Inverse mean delivery time, 1/minutes.
    pub weight: f64,
    pub order_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub sigma_km: f64,
    pub convergence_tol_km: f64,
    pub max_iterations: usize,
    pub mode_merge_km: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { sigma_km: 4.4, convergence_tol_km: 0.001, max_iterations: 200, mode_merge_km: 0.1 }
    }
}

impl KernelConfig {
    pub fn with_sigma(sigma_km: f64) -> Self {
        KernelConfig { sigma_km, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.sigma_km, self.convergence_tol_km, self.mode_merge_km].iter().all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.max_iterations == 0 {
            return Err(Error::Config(format!("kernel parameters must be positive: {self:?}")));
        }
        if self.mode_merge_km >= self.sigma_km {
            return Err(Error::Config(format!(
                "mode_merge_km ({}) must be smaller than sigma_km ({})",
                self.mode_merge_km, self.sigma_km
            )));
        }
        Ok(())
    }
}

/// One restaurant cluster of a single user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiningHub {
    pub user_id: UserId,
    /// Per-user index, ordered by first activity.
    pub hub_id: u32,
    pub center: GeoPoint,
    /// Sorted restaurant ids.
    pub members: Vec<RestaurantId>,
    /// Orders in log order.
    pub orders: Vec<Order>,
    pub first_order: NaiveDateTime,
    pub last_order: NaiveDateTime,
}

impl DiningHub {
    fn from_parts(user_id: &UserId, center: GeoPoint, members: Vec<RestaurantId>, orders: Vec<Order>) -> Option<Self> {
        let first_order = orders.iter().map(|o| o.delivered_at).min()?;
        let last_order = orders.iter().map(|o| o.delivered_at).max()?;
        Some(DiningHub { user_id: user_id.clone(), hub_id: 0, center, members, orders, first_order, last_order })
    }

    pub fn order_count(&self) -> usize {
        self.orders.len()
    }

    /// Whole days between first and last order.
    pub fn active_days(&self) -> i64 {
        (self.last_order.date() - self.first_order.date()).num_days()
    }

    /// Intervals are closed; `self` precedes `other` strictly.
    pub fn precedes(&self, other: &DiningHub) -> bool {
        self.last_order < other.first_order
    }

    pub fn active_on(&self, date: chrono::NaiveDate) -> bool {
        self.first_order.date() <= date && date <= self.last_order.date()
    }
}

/// Per-user clustering result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    pub user_id: UserId,
    pub hubs: Vec<DiningHub>,
    /// Restaurants not assigned to any hub, sorted.
    pub outliers: Vec<RestaurantId>,
    pub outlier_orders: Vec<Order>,
    /// Hubs removed as temporary by the hub filter.
    pub temporary: Vec<DiningHub>,
    pub clusterable: bool,
    /// Seeds that hit `max_iterations` before converging.
    pub non_converged_seeds: usize,
}

impl ClusterOutcome {
    pub fn total_orders(&self) -> usize {
        self.hubs.iter().map(DiningHub::order_count).sum::<usize>()
            + self.temporary.iter().map(DiningHub::order_count).sum::<usize>()
            + self.outlier_orders.len()
    }
}

/// Modes found by mean shift plus the count of seeds that failed to converge.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub modes: Vec<GeoPoint>,
    pub non_converged: usize,
}

/// One site per distinct restaurant, weight = 1 / mean delivery minutes.
/// Sites are sorted by restaurant id.
pub fn restaurant_weights(orders_of_user: &[Order]) -> Vec<WeightedSite> {
    let mut acc: BTreeMap<&RestaurantId, (GeoPoint, f64, usize)> = BTreeMap::new();
    for o in orders_of_user {
        let e = acc.entry(&o.restaurant_id).or_insert((o.location, 0.0, 0));
        e.1 += o.delivery_minutes;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(id, (location, total, n))| {
            let mean = (total / n as f64).max(EPSILON_MINUTES);
            WeightedSite { restaurant_id: id.clone(), location, weight: 1.0 / mean, order_count: n }
        })
        .collect()
}

/// Weighted Gaussian kernel value at distance `d_km`.
#[inline]
pub fn kernel(weight: f64, d_km: f64, sigma_km: f64) -> f64 {
    weight * (-(d_km * d_km) / (2.0 * sigma_km * sigma_km)).exp()
}

/// One mean-shift step from `x`; `None` when no site lies within the kernel support.
fn shift_once(x: GeoPoint, sites: &[WeightedSite], cfg: &KernelConfig) -> Option<GeoPoint> {
    let support = TRUNCATION_SIGMAS * cfg.sigma_km;
    let (mut den, mut lat, mut lon) = (0.0, 0.0, 0.0);
    for s in sites {
        let d = haversine_km(x, s.location);
        if d <= support {
            let k = kernel(s.weight, d, cfg.sigma_km);
            den += k;
            lat += k * s.location.lat();
            lon += k * s.location.lon();
        }
    }
    (den > 0.0).then(|| GeoPoint::new_unchecked(lat / den, lon / den))
}

/// Runs mean shift from every site (in the given order) and merges the
/// converged points into modes.
pub fn mean_shift_modes(sites: &[WeightedSite], cfg: &KernelConfig) -> ModeSet {
    let mut non_converged = 0;
    // (first endpoint, endpoints with seed weights)
    let mut basins: Vec<(GeoPoint, Vec<(GeoPoint, f64)>)> = Vec::new();
    for seed in sites {
        let mut x = seed.location;
        let mut converged = false;
        for _ in 0..cfg.max_iterations {
            let Some(next) = shift_once(x, sites, cfg) else {
                converged = true;
                break;
            };
            let step = haversine_km(x, next);
            x = next;
            if step < cfg.convergence_tol_km {
                converged = true;
                break;
            }
        }
        if !converged {
            non_converged += 1;
        }
        match basins.iter_mut().find(|(anchor, _)| haversine_km(*anchor, x) <= cfg.mode_merge_km) {
            Some((_, members)) => members.push((x, seed.weight)),
            None => basins.push((x, vec![(x, seed.weight)])),
        }
    }
    let modes = basins
        .into_iter()
        .map(|(anchor, members)| weighted_centroid(members).unwrap_or(anchor))
        .collect();
    ModeSet { modes, non_converged }
}

fn nearest(p: GeoPoint, centers: &[GeoPoint]) -> Option<(usize, f64)> {
    centers
        .iter()
        .enumerate()
        .map(|(i, c)| (i, haversine_km(p, *c)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

/// Assigns each restaurant to its nearest mode within `sigma_km`, builds hubs
/// and sends everything else to the outliers.
pub fn assign_hubs(orders_of_user: &[Order], modes: &[GeoPoint], cfg: &KernelConfig) -> ClusterOutcome {
    let sites = restaurant_weights(orders_of_user);
    let user_id = orders_of_user.first().map(|o| o.user_id.clone()).unwrap_or_else(|| UserId(String::new()));

    let mut groups: Vec<Vec<&WeightedSite>> = vec![Vec::new(); modes.len()];
    let mut outlier_sites: Vec<&WeightedSite> = Vec::new();
    for s in &sites {
        match nearest(s.location, modes) {
            Some((i, d)) if d <= cfg.sigma_km => groups[i].push(s),
            _ => outlier_sites.push(s),
        }
    }

    let mut hubs = Vec::new();
    for mut members in groups {
        // Prune members farther than sigma from the weighted centroid until stable.
        let center = loop {
            let Some(center) = weighted_centroid(members.iter().map(|s| (s.location, s.weight))) else {
                break None;
            };
            let (inside, outside): (Vec<_>, Vec<_>) =
                members.iter().partition(|s| haversine_km(s.location, center) <= cfg.sigma_km);
            if outside.is_empty() {
                break Some(center);
            }
            outlier_sites.extend(outside);
            members = inside;
        };
        let Some(center) = center else { continue };
        let ids: Vec<RestaurantId> = members.iter().map(|s| s.restaurant_id.clone()).collect();
        let orders: Vec<Order> = orders_of_user.iter().filter(|o| ids.binary_search(&o.restaurant_id).is_ok()).cloned().collect();
        if let Some(hub) = DiningHub::from_parts(&user_id, center, ids, orders) {
            hubs.push(hub);
        }
    }
    number_hubs(&mut hubs);

    let mut outliers: Vec<RestaurantId> = outlier_sites.iter().map(|s| s.restaurant_id.clone()).collect();
    outliers.sort();
    let outlier_orders = orders_of_user.iter().filter(|o| outliers.binary_search(&o.restaurant_id).is_ok()).cloned().collect();

    ClusterOutcome {
        user_id,
        clusterable: !hubs.is_empty(),
        hubs,
        outliers,
        outlier_orders,
        temporary: Vec::new(),
        non_converged_seeds: 0,
    }
}

/// Orders hubs by first activity (then position) and renumbers them.
pub(crate) fn number_hubs(hubs: &mut [DiningHub]) {
    hubs.sort_by(|a, b| {
        a.first_order
            .cmp(&b.first_order)
            .then(a.center.lat().total_cmp(&b.center.lat()))
            .then(a.center.lon().total_cmp(&b.center.lon()))
    });
    for (i, h) in hubs.iter_mut().enumerate() {
        h.hub_id = i as u32;
    }
}

/// Full per-user clustering: weights, modes, assignment.
pub fn cluster_user(orders_of_user: &[Order], cfg: &KernelConfig) -> ClusterOutcome {
    let sites = restaurant_weights(orders_of_user);
    let modes = mean_shift_modes(&sites, cfg);
    let mut outcome = assign_hubs(orders_of_user, &modes.modes, cfg);
    outcome.non_converged_seeds = modes.non_converged;
    outcome
}

/// Delivery method tag attached to a delivery distance sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeliveryMethod {
    BaiduLogistics,
    BaiduZhongbao,
    CityExpress,
    #[serde(rename = "self")]
    SelfDelivery,
}

impl DeliveryMethod {
    pub const ALL: [DeliveryMethod; 4] =
        [DeliveryMethod::BaiduLogistics, DeliveryMethod::BaiduZhongbao, DeliveryMethod::CityExpress, DeliveryMethod::SelfDelivery];
}

/// Nearest-rank percentile of a sample (`0 < percentile < 100`).
pub fn nearest_rank_percentile(values: &[f64], percentile: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Data("percentile of an empty sample".into()));
    }
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::Config(format!("percentile must be in (0, 100), got {percentile}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Kernel bandwidth from pooled delivery-zone distances.
pub fn estimate_bandwidth(delivery_distances: &[(DeliveryMethod, f64)], percentile: f64) -> Result<f64> {
    let pooled: Vec<f64> = delivery_distances.iter().map(|&(_, d)| d).collect();
    nearest_rank_percentile(&pooled, percentile)
}

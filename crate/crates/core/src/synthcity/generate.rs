use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use rayon::prelude::*;

use crate::calendar::{HolidayCalendar, SlotLabel, YearMonth};
use crate::error::{Error, Result};
use crate::geo::{haversine_km, BoundingBox, GeoPoint, KM_PER_DEG_LAT};
use crate::hubprofile::{HubLabel, SlotVector};
use crate::moves::MoveKind;
use crate::orders::{Order, OrderLog, UserId};
use crate::wkms::DeliveryMethod;

use super::city::{km_per_deg_lon, round6, CityContext, CityLayout};
use super::config::{usable_profile, ScenarioConfig};
use super::truth::{Archetype, GroundTruth, RestaurantTruth, TrueAnchor, TrueMove, UserTruth};

/// Standard normal quantile at 0.95.
const Z95: f64 = 1.644_853_626_951_472_2;
const MAX_PLACEMENT_ATTEMPTS: usize = 500;
const BASE_MINUTES: f64 = 15.0;
const MINUTES_PER_KM: f64 = 8.0;
const MINUTES_NOISE_SD: f64 = 5.0;
const MIN_MINUTES: f64 = 5.0;
const NOISE_VISIT_DAYS: i64 = 3;
const NOISE_VISIT_MAX_ORDERS: usize = 3;

const DOMAIN_RESTAURANTS: u64 = 1;
const DOMAIN_USERS: u64 = 2;
const DOMAIN_NOISE: u64 = 3;
const DOMAIN_CITY: u64 = 4;

/// A generated order log with everything needed to score detection on it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub log: OrderLog,
    pub truth: GroundTruth,
    pub city: Option<CityContext>,
}

/// Median of a log-normal whose 95th percentile is `p95_km`.
pub fn radius_median_km(p95_km: f64, log_sd: f64) -> f64 {
    p95_km / (Z95 * log_sd).exp()
}

/// Independent random stream for one (domain, index) pair of a seed.
fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

struct RadiusSampler {
    methods: Vec<DeliveryMethod>,
    pick: WeightedIndex<f64>,
    radii: Vec<LogNormal<f64>>,
}

impl RadiusSampler {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let (methods, shares): (Vec<DeliveryMethod>, Vec<f64>) =
            cfg.delivery_method_mix.iter().filter(|(_, s)| **s > 0.0).map(|(m, s)| (*m, *s)).unzip();
        let pick = WeightedIndex::new(&shares).map_err(|e| Error::Config(format!("delivery_method_mix: {e}")))?;
        let radii = methods
            .iter()
            .map(|m| {
                let sd = cfg.per_method_radius_log_sd[m];
                LogNormal::new(radius_median_km(cfg.per_method_radius_p95_km[m], sd).ln(), sd)
                    .map_err(|e| Error::Config(format!("radius distribution for {m:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(RadiusSampler { methods, pick, radii })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (DeliveryMethod, f64) {
        let i = self.pick.sample(rng);
        (self.methods[i], self.radii[i].sample(rng))
    }
}

/// Draws `n` (method, delivery radius) pairs from the configured mix.
pub fn sample_delivery_zones(cfg: &ScenarioConfig, n: usize) -> Result<Vec<(DeliveryMethod, f64)>> {
    let sampler = RadiusSampler::new(cfg)?;
    let mut rng = substream(cfg.seed, DOMAIN_RESTAURANTS, 1);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}

/// Uniform grid over the extent for radius queries on restaurants.
struct RestaurantGrid {
    extent: BoundingBox,
    cell_deg_lat: f64,
    cell_deg_lon: f64,
    rows: usize,
    cols: usize,
    cells: Vec<Vec<u32>>,
}

impl RestaurantGrid {
    const CELL_KM: f64 = 1.0;

    fn new(extent: BoundingBox, restaurants: &[RestaurantTruth]) -> Self {
        let cell_deg_lat = Self::CELL_KM / KM_PER_DEG_LAT;
        let cell_deg_lon = Self::CELL_KM / km_per_deg_lon(extent.max_lat.abs().max(extent.min_lat.abs()));
        let rows = ((extent.max_lat - extent.min_lat) / cell_deg_lat).ceil() as usize + 1;
        let cols = ((extent.max_lon - extent.min_lon) / cell_deg_lon).ceil() as usize + 1;
        let mut grid = RestaurantGrid { extent, cell_deg_lat, cell_deg_lon, rows, cols, cells: vec![Vec::new(); rows * cols] };
        for (i, r) in restaurants.iter().enumerate() {
            let (row, col) = grid.cell_of(r.location);
            grid.cells[row * cols + col].push(i as u32);
        }
        grid
    }

    fn cell_of(&self, p: GeoPoint) -> (usize, usize) {
        let row = ((p.lat() - self.extent.min_lat) / self.cell_deg_lat).floor().clamp(0.0, (self.rows - 1) as f64) as usize;
        let col = ((p.lon() - self.extent.min_lon) / self.cell_deg_lon).floor().clamp(0.0, (self.cols - 1) as f64) as usize;
        (row, col)
    }

    /// Indices of restaurants within `radius_km` of `p`, ascending.
    fn within(&self, restaurants: &[RestaurantTruth], p: GeoPoint, radius_km: f64) -> Vec<(u32, f64)> {
        let span = (radius_km / Self::CELL_KM).ceil() as i64 + 1;
        let (r0, c0) = self.cell_of(p);
        let mut out = Vec::new();
        for row in (r0 as i64 - span).max(0)..=(r0 as i64 + span).min(self.rows as i64 - 1) {
            for col in (c0 as i64 - span).max(0)..=(c0 as i64 + span).min(self.cols as i64 - 1) {
                for &i in &self.cells[row as usize * self.cols + col as usize] {
                    let d = haversine_km(p, restaurants[i as usize].location);
                    if d <= radius_km {
                        out.push((i, d));
                    }
                }
            }
        }
        out.sort_by_key(|&(i, _)| i);
        out
    }
}

/// Shared read-only state for per-user generation.
struct World<'a> {
    cfg: &'a ScenarioConfig,
    restaurants: Vec<RestaurantTruth>,
    grid: RestaurantGrid,
    layout: CityLayout,
    dates: [Vec<NaiveDate>; 3],
    all_dates: Vec<NaiveDate>,
    home_slots: WeightedIndex<f64>,
    work_slots: WeightedIndex<f64>,
    other_slots: Vec<WeightedIndex<f64>>,
    archetypes: WeightedIndex<f64>,
    /// Absolute month offsets open for moves, with their weights.
    move_months: (Vec<i64>, WeightedIndex<f64>),
    minutes: Normal<f64>,
}

/// An anchor with the restaurants its user orders from.
struct Anchor {
    truth: TrueAnchor,
    favorites: Vec<(u32, f64)>,
    pick: WeightedIndex<f64>,
}

/// Generates an order log and its ground truth. Deterministic in `cfg`,
/// independent of the rayon pool size.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let world = World::new(cfg)?;
    let users: Vec<(UserTruth, Vec<Order>)> = (0..cfg.n_users).into_par_iter().map(|i| world.user(i)).collect::<Result<_>>()?;
    let mut orders = Vec::with_capacity(users.iter().map(|(_, o)| o.len()).sum());
    let mut truths = Vec::with_capacity(users.len());
    for (truth, user_orders) in users {
        truths.push(truth);
        orders.extend(user_orders);
    }
    let truth = GroundTruth { start_date: cfg.start_date, end_date: cfg.end_date(), users: truths, restaurants: world.restaurants };
    let city = if cfg.city_context {
        Some(CityContext::build(cfg, &truth, &mut substream(cfg.seed, DOMAIN_CITY, 0))?)
    } else {
        None
    };
    Ok(Scenario { log: OrderLog::new(orders), truth, city })
}

impl<'a> World<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let sampler = RadiusSampler::new(cfg)?;
        let mut rng = substream(cfg.seed, DOMAIN_RESTAURANTS, 0);
        let e = cfg.extent;
        let restaurants: Vec<RestaurantTruth> = (0..cfg.n_restaurants)
            .map(|_| {
                let lat = round6(rng.random_range(e.min_lat..e.max_lat));
                let lon = round6(rng.random_range(e.min_lon..e.max_lon));
                let (method, radius_km) = sampler.sample(&mut rng);
                RestaurantTruth { location: GeoPoint::new_unchecked(lat, lon), method, radius_km }
            })
            .collect();
        let grid = RestaurantGrid::new(e, &restaurants);

        let cal: HolidayCalendar = cfg.calendar();
        let mut dates: [Vec<NaiveDate>; 3] = Default::default();
        let all_dates: Vec<NaiveDate> = cfg.start_date.iter_days().take_while(|d| *d <= cfg.end_date()).collect();
        for &d in &all_dates {
            dates[cal.day_type(d) as usize].push(d);
        }
        let present = [0, 1, 2].map(|i| !dates[i].is_empty());
        let slot_index = |field: &str, p: &SlotVector| {
            let usable = usable_profile(p, &present).ok_or_else(|| Error::Config(format!("{field}: no weight on day types present in the span")))?;
            WeightedIndex::new(usable).map_err(|e| Error::Config(format!("{field}: {e}")))
        };
        let home_slots = slot_index("home_slot_profile", &cfg.home_slot_profile)?;
        let work_slots = slot_index("work_slot_profile", &cfg.work_slot_profile)?;
        let other_slots = cfg.other_slot_profiles.iter().map(|p| slot_index("other_slot_profiles", p)).collect::<Result<_>>()?;
        let archetypes = WeightedIndex::new(cfg.archetype_shares.as_array()).map_err(|e| Error::Config(format!("archetype_shares: {e}")))?;

        let margin = i64::from(cfg.move_margin());
        let first = YearMonth::of(cfg.start_date);
        let offsets: Vec<i64> = (margin..i64::from(cfg.span_months) - margin).collect();
        let weights: Vec<f64> = offsets.iter().map(|&k| cfg.move_month_weights[first.plus_months(k).month as usize - 1]).collect();
        let move_months = WeightedIndex::new(&weights).map_err(|e| Error::Config(format!("move_month_weights: no weight inside the move window ({e})")))?;

        Ok(World {
            cfg,
            restaurants,
            grid,
            layout: CityLayout::for_extent(e),
            dates,
            all_dates,
            home_slots,
            work_slots,
            other_slots,
            archetypes,
            move_months: (offsets, move_months),
            minutes: Normal::new(0.0, MINUTES_NOISE_SD).expect("valid normal"),
        })
    }

    fn user_id(index: usize) -> UserId {
        UserId(format!("u{index:06}"))
    }

    fn user(&self, index: usize) -> Result<(UserTruth, Vec<Order>)> {
        let cfg = self.cfg;
        let user_id = Self::user_id(index);
        let mut rng = substream(cfg.seed, DOMAIN_USERS, index as u64);
        let archetype = Archetype::ALL[self.archetypes.sample(&mut rng)];
        let (start, end) = (cfg.start_date, cfg.end_date());

        let mut placed: Vec<GeoPoint> = Vec::new();
        let (home0, work0) = if cfg.outward_housing_moves && archetype.moves(MoveKind::Housing) {
            self.place_core_pair(&user_id, &mut rng)?
        } else {
            let home = self.place_anchor(&user_id, &mut rng, &placed, None)?;
            placed.push(home.0);
            let work = self.place_anchor(&user_id, &mut rng, &placed, None)?;
            (home, work)
        };
        placed = vec![home0.0, work0.0];

        let mut anchors: Vec<Anchor> = Vec::new();
        let mut moves = Vec::new();
        for (kind, (loc0, favs0)) in [(MoveKind::Housing, home0), (MoveKind::Job, work0)] {
            let label = kind.label();
            if archetype.moves(kind) {
                let date = self.move_date(&mut rng);
                let dest = if cfg.outward_housing_moves && kind == MoveKind::Housing {
                    self.place_outward(&user_id, &mut rng, loc0, &placed)?
                } else {
                    self.place_anchor(&user_id, &mut rng, &placed, Some(loc0))?
                };
                placed.push(dest.0);
                let before = date.pred_opt().expect("date in range");
                anchors.push(Anchor::new(label, loc0, start, before, favs0, cfg.preference_scale_km));
                moves.push(TrueMove { kind, month: YearMonth::of(date), date, from: loc0, to: dest.0 });
                anchors.push(Anchor::new(label, dest.0, date, end, dest.1, cfg.preference_scale_km));
            } else {
                anchors.push(Anchor::new(label, loc0, start, end, favs0, cfg.preference_scale_km));
            }
        }
        moves.sort_by_key(|m| (m.date, m.kind));

        let other_slots = if !self.other_slots.is_empty() && rng.random_bool(cfg.other_anchor_share) {
            let slots = &self.other_slots[rng.random_range(0..self.other_slots.len())];
            let (loc, favs) = self.place_anchor(&user_id, &mut rng, &placed, None)?;
            anchors.push(Anchor::new(HubLabel::Other, loc, start, end, favs, cfg.preference_scale_km));
            Some(slots)
        } else {
            None
        };

        let n_clean = match cfg.orders_per_user.mean - cfg.orders_per_user.min as f64 {
            extra if extra > 0.0 => cfg.orders_per_user.min + Poisson::new(extra).expect("positive rate").sample(&mut rng) as usize,
            _ => cfg.orders_per_user.min,
        };
        let mut orders = Vec::with_capacity(n_clean);
        for _ in 0..n_clean {
            let other = other_slots.filter(|_| rng.random_bool(cfg.other_order_share));
            let (label, slots) = if let Some(slots) = other {
                (HubLabel::Other, slots)
            } else if rng.random_bool(cfg.home_order_share) {
                (HubLabel::Home, &self.home_slots)
            } else {
                (HubLabel::Work, &self.work_slots)
            };
            let slot = SlotLabel::from_index(slots.sample(&mut rng)).expect("index below 15");
            let days = &self.dates[slot.day_type as usize];
            let date = days[rng.random_range(0..days.len())];
            let anchor = anchors.iter().find(|a| a.truth.kind == label && a.truth.from <= date && date <= a.truth.to).expect("anchors cover the span");
            let at = random_time_in_slot(&mut rng, date, slot);
            let (r, d) = anchor.favorites[anchor.pick.sample(&mut rng)];
            orders.push(self.order(&user_id, r, d, at, &mut rng));
        }
        self.add_noise(&user_id, index, n_clean, &mut orders)?;

        let mut truth_anchors: Vec<TrueAnchor> = anchors.into_iter().map(|a| a.truth).collect();
        truth_anchors.sort_by_key(|a| (a.kind, a.from));
        Ok((UserTruth { user_id, archetype, anchors: truth_anchors, moves }, orders))
    }

    fn order(&self, user_id: &UserId, restaurant: u32, d_km: f64, at: NaiveDateTime, rng: &mut ChaCha8Rng) -> Order {
        let minutes = (BASE_MINUTES + MINUTES_PER_KM * d_km + self.minutes.sample(rng)).max(MIN_MINUTES);
        Order {
            user_id: user_id.clone(),
            restaurant_id: RestaurantTruth::id(restaurant as usize),
            location: self.restaurants[restaurant as usize].location,
            delivered_at: at,
            delivery_minutes: (minutes * 10.0).round() / 10.0,
        }
    }

    /// Short visits to random places, from a stream separate from the
    /// user's clean orders so that raising the noise level leaves those intact.
    fn add_noise(&self, user_id: &UserId, index: usize, n_clean: usize, orders: &mut Vec<Order>) -> Result<()> {
        let noise = self.cfg.noise;
        if noise <= 0.0 {
            return Ok(());
        }
        let mut rng = substream(self.cfg.seed, DOMAIN_NOISE, index as u64);
        let mut remaining = (n_clean as f64 * noise / (1.0 - noise)).round() as usize;
        while remaining > 0 {
            let size = rng.random_range(1..=NOISE_VISIT_MAX_ORDERS).min(remaining);
            remaining -= size;
            let candidates = self.reachable_spot(user_id, &mut rng)?;
            let pick = preference_index(&candidates, self.cfg.preference_scale_km);
            let start = self.all_dates[rng.random_range(0..self.all_dates.len())];
            for _ in 0..size {
                let date = (start + Duration::days(rng.random_range(0..NOISE_VISIT_DAYS))).min(*self.all_dates.last().expect("non-empty span"));
                let at = date.and_hms_opt(0, 0, 0).expect("midnight") + Duration::minutes(rng.random_range(0..1440));
                let (r, d) = candidates[pick.sample(&mut rng)];
                orders.push(self.order(user_id, r, d, at, &mut rng));
            }
        }
        Ok(())
    }

    fn reachable_spot(&self, user_id: &UserId, rng: &mut ChaCha8Rng) -> Result<Vec<(u32, f64)>> {
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let candidates = self.reachable(self.random_inset_point(rng));
            if !candidates.is_empty() {
                return Ok(candidates);
            }
        }
        Err(Error::Config(format!("user {user_id}: no reachable restaurant for a noise visit after {MAX_PLACEMENT_ATTEMPTS} attempts")))
    }

    /// Restaurants within the favorite search radius whose delivery zone covers `p`.
    fn reachable(&self, p: GeoPoint) -> Vec<(u32, f64)> {
        let mut c = self.grid.within(&self.restaurants, p, self.cfg.favorite_search_km);
        c.retain(|&(i, d)| d <= self.restaurants[i as usize].radius_km);
        c
    }

    fn random_inset_point(&self, rng: &mut ChaCha8Rng) -> GeoPoint {
        let e = self.cfg.extent;
        let inset = self.cfg.edge_inset_km;
        let dlat = (inset / KM_PER_DEG_LAT).min((e.max_lat - e.min_lat) / 2.0 * 0.999);
        let dlon = (inset / km_per_deg_lon(e.center().lat())).min((e.max_lon - e.min_lon) / 2.0 * 0.999);
        GeoPoint::new_unchecked(rng.random_range(e.min_lat + dlat..e.max_lat - dlat), rng.random_range(e.min_lon + dlon..e.max_lon - dlon))
    }

    fn favorites(&self, p: GeoPoint, rng: &mut ChaCha8Rng) -> Option<Vec<(u32, f64)>> {
        let mut candidates = self.reachable(p);
        if candidates.is_empty() {
            return None;
        }
        let [lo, hi] = self.cfg.favorites_per_anchor;
        let k = rng.random_range(lo..=hi).min(candidates.len());
        let mut chosen = Vec::with_capacity(k);
        for _ in 0..k {
            let i = preference_index(&candidates, self.cfg.preference_scale_km).sample(rng);
            chosen.push(candidates.remove(i));
        }
        chosen.sort_by_key(|&(i, _)| i);
        Some(chosen)
    }

    fn separated(&self, p: GeoPoint, placed: &[GeoPoint]) -> bool {
        placed.iter().all(|&q| haversine_km(p, q) >= self.cfg.min_anchor_separation_km)
    }

    /// Uniform anchor in the inset extent, away from the user's other anchors;
    /// with `from`, at a configured displacement from that point instead.
    fn place_anchor(&self, user_id: &UserId, rng: &mut ChaCha8Rng, placed: &[GeoPoint], from: Option<GeoPoint>) -> Result<(GeoPoint, Vec<(u32, f64)>)> {
        let [dmin, dmax] = self.cfg.displacement_km;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = match from {
                None => self.random_inset_point(rng),
                Some(o) => {
                    let (d, theta) = (rng.random_range(dmin..=dmax), rng.random_range(0.0..std::f64::consts::TAU));
                    let p = o.offset_km(d * theta.sin(), d * theta.cos());
                    if !self.inset_contains(p) {
                        continue;
                    }
                    p
                }
            };
            let p = GeoPoint::new_unchecked(round6(p.lat()), round6(p.lon()));
            if !self.separated(p, placed) {
                continue;
            }
            if let Some(f) = self.favorites(p, rng) {
                return Ok((p, f));
            }
        }
        Err(Error::Config(format!("user {user_id}: no feasible anchor after {MAX_PLACEMENT_ATTEMPTS} attempts")))
    }

    fn inset_contains(&self, p: GeoPoint) -> bool {
        let e = self.cfg.extent;
        let inset = self.cfg.edge_inset_km;
        let dlat = inset / KM_PER_DEG_LAT;
        let dlon = inset / km_per_deg_lon(e.center().lat());
        (e.min_lat + dlat..=e.max_lat - dlat).contains(&p.lat()) && (e.min_lon + dlon..=e.max_lon - dlon).contains(&p.lon())
    }

    /// Work near the center and home in the outer part of the core, on
    /// opposite sides of the center.
    #[allow(clippy::type_complexity)]
    fn place_core_pair(&self, user_id: &UserId, rng: &mut ChaCha8Rng) -> Result<((GeoPoint, Vec<(u32, f64)>), (GeoPoint, Vec<(u32, f64)>))> {
        let core = self.layout.core_radius_km();
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let rw = rng.random_range(1.0..4.0);
            let (lo, hi) = ((self.cfg.min_anchor_separation_km - rw).max(0.0), core - 1.0);
            if lo >= hi {
                break;
            }
            let rh = rng.random_range(lo..hi);
            let c = self.layout.center;
            let work = c.offset_km(-rw * theta.sin(), -rw * theta.cos());
            let home = c.offset_km(rh * theta.sin(), rh * theta.cos());
            let (work, home) = (GeoPoint::new_unchecked(round6(work.lat()), round6(work.lon())), GeoPoint::new_unchecked(round6(home.lat()), round6(home.lon())));
            if !self.separated(home, &[work]) {
                continue;
            }
            if let (Some(fh), Some(fw)) = (self.favorites(home, rng), self.favorites(work, rng)) {
                return Ok(((home, fh), (work, fw)));
            }
        }
        Err(Error::Config(format!("user {user_id}: no feasible core anchors after {MAX_PLACEMENT_ATTEMPTS} attempts")))
    }

    /// New home further out along roughly the same bearing from the center.
    fn place_outward(&self, user_id: &UserId, rng: &mut ChaCha8Rng, home: GeoPoint, placed: &[GeoPoint]) -> Result<(GeoPoint, Vec<(u32, f64)>)> {
        let c = self.layout.center;
        let r0 = haversine_km(c, home);
        let bearing = (home.lat() - c.lat()).atan2((home.lon() - c.lon()) * c.lat().to_radians().cos());
        let [dmin, dmax] = self.cfg.displacement_km;
        let outer = self.layout.ring_inradius_km[2] - 3.0;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let r1 = rng.random_range(r0 + dmin..=(r0 + dmax).min(outer).max(r0 + dmin));
            let theta = bearing + rng.random_range(-0.3..=0.3);
            let p = c.offset_km(r1 * theta.sin(), r1 * theta.cos());
            let p = GeoPoint::new_unchecked(round6(p.lat()), round6(p.lon()));
            if !self.inset_contains(p) || !self.separated(p, placed) {
                continue;
            }
            if let Some(f) = self.favorites(p, rng) {
                return Ok((p, f));
            }
        }
        Err(Error::Config(format!("user {user_id}: no feasible outward home after {MAX_PLACEMENT_ATTEMPTS} attempts")))
    }

    fn move_date(&self, rng: &mut ChaCha8Rng) -> NaiveDate {
        let (offsets, pick) = &self.move_months;
        let month = YearMonth::of(self.cfg.start_date).plus_months(offsets[pick.sample(rng)]);
        let day = rng.random_range(1..=month.days_in_month());
        month.first_day().with_day(day).expect("day within month")
    }
}

impl Anchor {
    fn new(kind: HubLabel, location: GeoPoint, from: NaiveDate, to: NaiveDate, favorites: Vec<(u32, f64)>, scale_km: f64) -> Self {
        let pick = preference_index(&favorites, scale_km);
        Anchor { truth: TrueAnchor { kind, location, from, to }, favorites, pick }
    }
}

fn preference_index(candidates: &[(u32, f64)], scale_km: f64) -> WeightedIndex<f64> {
    let weights: Vec<f64> = candidates.iter().map(|&(_, d)| (-d / scale_km).exp().max(f64::MIN_POSITIVE)).collect();
    WeightedIndex::new(&weights).expect("positive weights")
}

fn random_time_in_slot(rng: &mut ChaCha8Rng, date: NaiveDate, slot: SlotLabel) -> NaiveDateTime {
    let ranges = slot.slot.minute_ranges();
    let total: u32 = ranges.iter().map(|(a, b)| b - a).sum();
    let mut k = rng.random_range(0..total);
    for &(a, b) in ranges {
        if k < b - a {
            return date.and_hms_opt(0, 0, 0).expect("midnight") + Duration::minutes(i64::from(a + k));
        }
        k -= b - a;
    }
    unreachable!("offset within slot minutes")
}

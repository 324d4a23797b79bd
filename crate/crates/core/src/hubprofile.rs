//! Temporary-hub filtering, time-slot ordering profiles, K-means with
//! silhouette selection and Home/Work/Other labeling.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{time_slot, DayType, HolidayCalendar, Slot, SlotLabel};
use crate::error::{Error, Result};
use crate::orders::UserId;
use crate::wkms::{ClusterOutcome, DiningHub};

/// Per-hub ordering frequencies over the 15 slot labels.
pub type SlotVector = [f64; SlotLabel::COUNT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HubLabel {
    #[serde(rename = "H")]
    Home,
    #[serde(rename = "W")]
    Work,
    #[serde(rename = "O")]
    Other,
}

impl HubLabel {
    pub fn code(self) -> &'static str {
        match self {
            HubLabel::Home => "H",
            HubLabel::Work => "W",
            HubLabel::Other => "O",
        }
    }

    pub fn from_code(s: &str) -> Option<HubLabel> {
        match s {
            "H" => Some(HubLabel::Home),
            "W" => Some(HubLabel::Work),
            "O" => Some(HubLabel::Other),
            _ => None,
        }
    }
}

impl fmt::Display for HubLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub min_order_share: f64,
    pub min_duration_days: i64,
    /// Inclusive `[min, max]` candidate cluster counts for silhouette selection.
    pub k_range: [usize; 2],
    /// Skips silhouette selection when set.
    pub fixed_k: Option<usize>,
    pub kmeans_restarts: usize,
    pub max_kmeans_iterations: usize,
    pub seed: u64,
    /// Required mass difference for a Home or Work label.
    pub label_margin: f64,
    /// Silhouette is computed on at most this many hubs.
    pub silhouette_sample: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            min_order_share: 0.10,
            min_duration_days: 30,
            k_range: [2, 8],
            fixed_k: Some(4),
            kmeans_restarts: 16,
            max_kmeans_iterations: 300,
            seed: 0,
            label_margin: 0.1,
            silhouette_sample: 10_000,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_order_share > 0.0 && self.min_order_share < 1.0) {
            return Err(Error::Config(format!("min_order_share must be in (0, 1), got {}", self.min_order_share)));
        }
        if self.min_duration_days < 1 {
            return Err(Error::Config("min_duration_days must be >= 1".into()));
        }
        let [lo, hi] = self.k_range;
        if lo < 2 || hi < lo {
            return Err(Error::Config(format!("k_range must satisfy 2 <= min <= max, got {:?}", self.k_range)));
        }
        if self.kmeans_restarts == 0 || self.max_kmeans_iterations == 0 || self.silhouette_sample < 2 {
            return Err(Error::Config("kmeans_restarts, max_kmeans_iterations and silhouette_sample must be positive".into()));
        }
        Ok(())
    }
}

/// Drops hubs holding less than `min_order_share` of the user's orders or
/// active for fewer than `min_duration_days`. Dropped hubs move to
/// `temporary`; the outcome stays clusterable only if a hub survives.
pub fn filter_temporary_hubs(mut outcome: ClusterOutcome, cfg: &ClassifierConfig) -> ClusterOutcome {
    let total = outcome.total_orders() as f64;
    let (keep, drop): (Vec<DiningHub>, Vec<DiningHub>) = std::mem::take(&mut outcome.hubs)
        .into_iter()
        .partition(|h| h.order_count() as f64 >= cfg.min_order_share * total && h.active_days() >= cfg.min_duration_days);
    outcome.hubs = keep;
    outcome.temporary.extend(drop);
    outcome.clusterable = !outcome.hubs.is_empty();
    outcome
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubFeatures {
    pub user_id: UserId,
    pub hub_id: u32,
    pub freq: SlotVector,
}

pub fn slot_counts(hub: &DiningHub, cal: &HolidayCalendar) -> [usize; SlotLabel::COUNT] {
    let mut counts = [0usize; SlotLabel::COUNT];
    for o in &hub.orders {
        counts[time_slot(o.delivered_at, cal).index()] += 1;
    }
    counts
}

pub fn hub_features(hub: &DiningHub, cal: &HolidayCalendar) -> HubFeatures {
    let counts = slot_counts(hub, cal);
    let n = hub.orders.len().max(1) as f64;
    let mut freq = [0.0; SlotLabel::COUNT];
    for (f, c) in freq.iter_mut().zip(counts) {
        *f = c as f64 / n;
    }
    HubFeatures { user_id: hub.user_id.clone(), hub_id: hub.hub_id, freq }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<SlotVector>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub objective_trace: Vec<f64>,
}

impl KMeansFit {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<SlotVector>,
    pub chosen_k: usize,
    pub silhouette: f64,
    /// Mean silhouette per evaluated k.
    pub silhouette_by_k: Vec<(usize, f64)>,
}

#[inline]
fn sq_dist(a: &SlotVector, b: &SlotVector) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centroid(p: &SlotVector, centroids: &[SlotVector]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// D²-weighted seeding.
fn seed_centroids(points: &[SlotVector], k: usize, rng: &mut ChaCha8Rng) -> Vec<SlotVector> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if r < *d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm from a seeded start; stops at a fixed point of the assignment.
pub fn kmeans_once(points: &[SlotVector], k: usize, seed: u64, max_iterations: usize) -> KMeansFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest_centroid(p, &centroids).0).collect();
    let mut trace = Vec::new();
    for _ in 0..max_iterations {
        let mut sums = vec![[0.0; SlotLabel::COUNT]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(&sums).zip(&counts) {
            if n > 0 {
                for (cv, sv) in c.iter_mut().zip(s) {
                    *cv = sv / n as f64;
                }
            }
        }
        let mut changed = false;
        let mut objective = 0.0;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (best, d) = nearest_centroid(p, &centroids);
            // keep the current cluster on ties
            let current = sq_dist(p, &centroids[*a]);
            if d < current {
                *a = best;
                changed = true;
                objective += d;
            } else {
                objective += current;
            }
        }
        trace.push(objective);
        if !changed {
            break;
        }
    }
    KMeansFit { assignments, centroids, objective_trace: trace }
}

fn restart_seed(seed: u64, k: usize, restart: usize) -> u64 {
    seed ^ ((k as u64) << 32) ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Best of `restarts` K-means fits by objective, ties broken by restart index.
pub fn kmeans_best(points: &[SlotVector], k: usize, cfg: &ClassifierConfig) -> Result<KMeansFit> {
    if k == 0 || points.len() < k {
        return Err(Error::Data(format!("K-means needs at least k = {k} points, got {}", points.len())));
    }
    let fits: Vec<KMeansFit> = (0..cfg.kmeans_restarts)
        .into_par_iter()
        .map(|r| kmeans_once(points, k, restart_seed(cfg.seed, k, r), cfg.max_kmeans_iterations))
        .collect();
    fits.into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.objective().total_cmp(&b.objective()).then(i.cmp(j)))
        .map(|(_, f)| f)
        .ok_or_else(|| Error::Internal("no K-means restarts".into()))
}

/// Mean silhouette (Euclidean). Singleton clusters score 0.
pub fn silhouette(points: &[SlotVector], assignments: &[usize], k: usize) -> Result<f64> {
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Degenerate("silhouette needs at least two non-empty clusters".into()));
    }
    let scores: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut sums = vec![0.0; k];
            for (j, q) in points.iter().enumerate() {
                if i != j {
                    sums[assignments[j]] += sq_dist(&points[i], q).sqrt();
                }
            }
            let own = assignments[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k).filter(|&c| c != own && sizes[c] > 0).map(|c| sums[c] / sizes[c] as f64).fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 { (b - a) / m } else { 0.0 }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn silhouette_subsample(points: &[SlotVector], assignments: &[usize], k: usize, cfg: &ClassifierConfig) -> Result<f64> {
    if points.len() <= cfg.silhouette_sample {
        return silhouette(points, assignments, k);
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5111_0E77));
    idx.truncate(cfg.silhouette_sample);
    idx.sort_unstable();
    let p: Vec<SlotVector> = idx.iter().map(|&i| points[i]).collect();
    let a: Vec<usize> = idx.iter().map(|&i| assignments[i]).collect();
    silhouette(&p, &a, k)
}

/// K-means on slot vectors with `fixed_k`, or the silhouette-maximizing k in `k_range`.
pub fn kmeans_with_silhouette(features: &[SlotVector], cfg: &ClassifierConfig) -> Result<Clustering> {
    let candidates: Vec<usize> = match cfg.fixed_k {
        Some(k) if k < 2 => return Err(Error::Degenerate(format!("k must be >= 2 for silhouette, got {k}"))),
        Some(k) => vec![k],
        None => (cfg.k_range[0]..=cfg.k_range[1]).collect(),
    };
    if features.len() < candidates[0] {
        return Err(Error::Data(format!("{} hub profiles are fewer than k = {}", features.len(), candidates[0])));
    }
    let mut best: Option<(f64, usize, KMeansFit)> = None;
    let mut by_k = Vec::new();
    for k in candidates.into_iter().filter(|&k| k <= features.len()) {
        let fit = kmeans_best(features, k, cfg)?;
        let score = silhouette_subsample(features, &fit.assignments, k, cfg)?;
        by_k.push((k, score));
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, k, fit));
        }
    }
    let (silhouette, chosen_k, fit) = best.ok_or_else(|| Error::Internal("no candidate k".into()))?;
    Ok(Clustering { assignments: fit.assignments, centroids: fit.centroids, chosen_k, silhouette, silhouette_by_k: by_k })
}

/// Weekday morning + weekday noon.
pub fn work_mass(freq: &SlotVector) -> f64 {
    freq[SlotLabel::new(DayType::Weekday, Slot::Noon).index()] + freq[SlotLabel::new(DayType::Weekday, Slot::Morning).index()]
}

/// All weekend and holiday slots + weekday evening + weekday night.
pub fn home_mass(freq: &SlotVector) -> f64 {
    SlotLabel::all()
        .filter(|l| l.day_type != DayType::Weekday || matches!(l.slot, Slot::Evening | Slot::Night))
        .map(|l| freq[l.index()])
        .sum()
}

/// Labels each centroid: the centroid(s) with the largest work-minus-home
/// mass become Work and those with the largest home-minus-work mass become
/// Home, provided the difference exceeds `margin`; all others are Other.
pub fn label_centroids(centroids: &[SlotVector], margin: f64) -> Vec<HubLabel> {
    let diffs: Vec<f64> = centroids.iter().map(|c| work_mass(c) - home_mass(c)).collect();
    let max = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    diffs
        .iter()
        .map(|&d| {
            if d == max && d > margin {
                HubLabel::Work
            } else if d == min && -d > margin {
                HubLabel::Home
            } else {
                HubLabel::Other
            }
        })
        .collect()
}

/// Label per hub, inherited from its cluster.
pub fn label_clusters(centroids: &[SlotVector], assignments: &[usize], margin: f64) -> Vec<HubLabel> {
    let per_cluster = label_centroids(centroids, margin);
    assignments.iter().map(|&a| per_cluster[a]).collect()
}

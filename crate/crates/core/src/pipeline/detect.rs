//! The detection stage: ad-hoc filter, WKMS, temporary-hub filter, slot
//! features, K-means, labels, transitions and user groups.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::calendar::HolidayCalendar;
use crate::error::{Error, Result};
use crate::geo::haversine_km;
use crate::hubprofile::{filter_temporary_hubs, hub_features, kmeans_with_silhouette, label_centroids, label_clusters, ClassifierConfig, HubLabel, SlotVector};
use crate::moves::{classify_user, detect_transitions, overtime_ratio, Exclusion, LabeledHub, Move, MoveConfig, MoveKind, UserGroup};
use crate::orders::{filter_adhoc_users, OrderLog, UserId};
use crate::synthcity::{DetectedHub, DetectedMove, Detection};
use crate::wkms::{cluster_user, ClusterOutcome, KernelConfig};

use super::records::*;

pub const DETECT_REPORT_FILE: &str = "detect_report.json";

/// Detection parameters.
#[derive(Debug, Clone)]
pub struct DetectParams<'a> {
    pub kernel: &'a KernelConfig,
    pub classifier: &'a ClassifierConfig,
    pub moves: &'a MoveConfig,
    pub min_orders: usize,
    pub calendar: &'a HolidayCalendar,
}

/// Everything detection produced for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDetection {
    pub user_id: UserId,
    pub n_orders: usize,
    /// False for ad-hoc users and users without a surviving hub.
    pub clusterable: bool,
    pub adhoc: bool,
    pub hubs: Vec<LabeledHub>,
    pub temporary: usize,
    pub moves: Vec<Move>,
    pub group: Option<std::result::Result<UserGroup, Exclusion>>,
}

impl UserDetection {
    fn group_code(&self) -> String {
        match (&self.group, self.adhoc) {
            (_, true) => "adhoc".into(),
            (None, _) => "unclusterable".into(),
            (Some(Ok(g)), _) => g.codes(),
            (Some(Err(Exclusion::NoHomeHub)), _) => "no_home_hub".into(),
            (Some(Err(Exclusion::NoWorkHub)), _) => "no_work_hub".into(),
        }
    }

    fn record(&self) -> UserRecord {
        let count = |l: HubLabel| self.hubs.iter().filter(|h| h.label == l).count();
        let moves = |k: MoveKind| self.moves.iter().filter(|m| m.kind == k).count();
        UserRecord {
            user_id: self.user_id.clone(),
            n_orders: self.n_orders,
            clusterable: self.clusterable,
            n_hubs: self.hubs.len(),
            n_temporary: self.temporary,
            n_home: count(HubLabel::Home),
            n_work: count(HubLabel::Work),
            n_other: count(HubLabel::Other),
            n_housing_moves: moves(MoveKind::Housing),
            n_job_moves: moves(MoveKind::Job),
            group: self.group_code(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClusteringReport {
    pub hub_profiles: usize,
    pub chosen_k: Option<usize>,
    pub silhouette: Option<f64>,
    pub silhouette_by_k: Vec<(usize, f64)>,
    pub centroids: Vec<SlotVector>,
    pub centroid_labels: Vec<HubLabel>,
    /// Set when K-means could not run and all hubs share one centroid.
    pub notice: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GroupCounts {
    pub stayer: usize,
    pub job_hopper: usize,
    pub home_mover: usize,
    pub job_hopper_and_home_mover: usize,
    pub no_home_hub: usize,
    pub no_work_hub: usize,
}

/// Bookkeeping of one detection run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DetectReport {
    pub users_in: usize,
    pub orders_in: usize,
    pub adhoc_users: usize,
    pub users_unclusterable: usize,
    pub hubs: usize,
    pub temporary_hubs: usize,
    pub outlier_orders: usize,
    pub home_hubs: usize,
    pub work_hubs: usize,
    pub other_hubs: usize,
    pub housing_moves: usize,
    pub job_moves: usize,
    pub groups: GroupCounts,
    pub non_converged_seeds: usize,
    /// Hub members farther than sigma from their hub center.
    pub sigma_violations: usize,
    pub clustering: ClusteringReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detected {
    pub users: Vec<UserDetection>,
    pub profiles: Vec<HubProfileRecord>,
    pub report: DetectReport,
}

fn sigma_violations(outcome: &ClusterOutcome, sigma_km: f64) -> usize {
    outcome.hubs.iter().flat_map(|h| h.orders.iter().map(move |o| haversine_km(h.center, o.location))).filter(|&d| d > sigma_km).count()
}

/// Runs detection on an order log.
pub fn detect(log: &OrderLog, p: &DetectParams) -> Result<Detected> {
    let kept = filter_adhoc_users(log, p.min_orders);
    let mut report = DetectReport { users_in: log.user_count(), orders_in: log.len(), ..Default::default() };
    report.adhoc_users = report.users_in - kept.user_count();

    let per_user: Vec<(&UserId, &[crate::orders::Order])> = kept.by_user().collect();
    let outcomes: Vec<ClusterOutcome> =
        per_user.par_iter().map(|(_, orders)| filter_temporary_hubs(cluster_user(orders, p.kernel), p.classifier)).collect();

    let features: Vec<Vec<SlotVector>> =
        outcomes.par_iter().map(|o| o.hubs.iter().map(|h| hub_features(h, p.calendar).freq).collect()).collect();
    let flat: Vec<SlotVector> = features.iter().flatten().copied().collect();
    let (labels, clustering) = classify_hubs(&flat, p.classifier);

    let mut next_label = labels.into_iter();
    let labeled: Vec<Vec<LabeledHub>> = outcomes
        .iter()
        .map(|o| o.hubs.iter().map(|h| LabeledHub { hub: h.clone(), label: next_label.next().expect("one label per hub") }).collect())
        .collect();

    let users: Vec<UserDetection> = outcomes
        .par_iter()
        .zip(labeled)
        .map(|(o, hubs)| {
            let moves = detect_transitions(&hubs, p.moves);
            let group = o.clusterable.then(|| classify_user(&hubs, &moves));
            UserDetection {
                user_id: o.user_id.clone(),
                n_orders: o.total_orders(),
                clusterable: o.clusterable,
                adhoc: false,
                hubs,
                temporary: o.temporary.len(),
                moves,
                group,
            }
        })
        .collect();

    let mut profiles = Vec::with_capacity(flat.len());
    for (u, freqs) in users.iter().zip(&features) {
        for (h, freq) in u.hubs.iter().zip(freqs) {
            profiles.push(HubProfileRecord {
                user_id: u.user_id.clone(),
                hub_id: h.hub.hub_id,
                label: h.label,
                overtime_ratio: overtime_ratio(&h.hub, p.calendar),
                freq: *freq,
            });
        }
    }

    for o in &outcomes {
        report.temporary_hubs += o.temporary.len();
        report.outlier_orders += o.outlier_orders.len();
        report.non_converged_seeds += o.non_converged_seeds;
        report.sigma_violations += sigma_violations(o, p.kernel.sigma_km);
    }
    for u in &users {
        report.users_unclusterable += usize::from(!u.clusterable);
        report.hubs += u.hubs.len();
        for h in &u.hubs {
            match h.label {
                HubLabel::Home => report.home_hubs += 1,
                HubLabel::Work => report.work_hubs += 1,
                HubLabel::Other => report.other_hubs += 1,
            }
        }
        report.housing_moves += u.moves.iter().filter(|m| m.kind == MoveKind::Housing).count();
        report.job_moves += u.moves.iter().filter(|m| m.kind == MoveKind::Job).count();
        let g = &mut report.groups;
        match &u.group {
            Some(Ok(UserGroup { stayer: true, .. })) => g.stayer += 1,
            Some(Ok(UserGroup { job_hopper: true, home_mover: true, .. })) => g.job_hopper_and_home_mover += 1,
            Some(Ok(UserGroup { job_hopper: true, .. })) => g.job_hopper += 1,
            Some(Ok(UserGroup { home_mover: true, .. })) => g.home_mover += 1,
            Some(Ok(_)) => {}
            Some(Err(Exclusion::NoHomeHub)) => g.no_home_hub += 1,
            Some(Err(Exclusion::NoWorkHub)) => g.no_work_hub += 1,
            None => {}
        }
    }
    report.clustering = clustering;

    // ad-hoc users stay in the user table so the universe matches the input log
    let mut all_users = users;
    let kept_ids: std::collections::BTreeSet<&UserId> = per_user.iter().map(|(u, _)| *u).collect();
    let adhoc: Vec<UserDetection> = log
        .by_user()
        .filter(|(u, _)| !kept_ids.contains(u))
        .map(|(u, orders)| UserDetection {
            user_id: u.clone(),
            n_orders: orders.len(),
            clusterable: false,
            adhoc: true,
            hubs: Vec::new(),
            temporary: 0,
            moves: Vec::new(),
            group: None,
        })
        .collect();
    all_users.extend(adhoc);
    all_users.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    Ok(Detected { users: all_users, profiles, report })
}

/// K-means labels, or one shared centroid when K-means cannot run.
fn classify_hubs(features: &[SlotVector], cfg: &ClassifierConfig) -> (Vec<HubLabel>, ClusteringReport) {
    let mut report = ClusteringReport { hub_profiles: features.len(), ..Default::default() };
    if features.is_empty() {
        return (Vec::new(), report);
    }
    match kmeans_with_silhouette(features, cfg) {
        Ok(c) => {
            report.centroid_labels = label_centroids(&c.centroids, cfg.label_margin);
            let labels = label_clusters(&c.centroids, &c.assignments, cfg.label_margin);
            report.chosen_k = Some(c.chosen_k);
            report.silhouette = Some(c.silhouette);
            report.silhouette_by_k = c.silhouette_by_k;
            report.centroids = c.centroids;
            (labels, report)
        }
        Err(e) => {
            let mut mean = [0.0; crate::calendar::SlotLabel::COUNT];
            for f in features {
                for (m, v) in mean.iter_mut().zip(f) {
                    *m += v / features.len() as f64;
                }
            }
            let label = label_centroids(&[mean], cfg.label_margin)[0];
            report.notice = Some(format!("K-means skipped ({e}); all hubs share the mean profile"));
            report.centroids = vec![mean];
            report.centroid_labels = vec![label];
            (vec![label; features.len()], report)
        }
    }
}

impl Detected {
    /// The evaluation view of this run, equal to what `load_detection` reads back from disk.
    pub fn to_detection(&self) -> Detection {
        let mut det = Detection { users: self.users.iter().map(|u| u.user_id.clone()).collect(), ..Default::default() };
        for u in &self.users {
            for h in &u.hubs {
                det.hubs.push(DetectedHub { user_id: u.user_id.clone(), hub_id: h.hub.hub_id, center: h.hub.center, label: h.label });
            }
            for m in &u.moves {
                det.moves.push(DetectedMove { user_id: m.user_id.clone(), kind: m.kind, from: m.from_center, to: m.to_center, month: m.move_month });
            }
        }
        det
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let hubs: Vec<&LabeledHub> = self.users.iter().flat_map(|u| &u.hubs).collect();
        write_csv(&dir.join(HUBS_FILE), &hubs.iter().map(|h| HubRecord::of(&h.hub)).collect::<Vec<_>>(), &HUB_HEADER)?;
        write_csv(&dir.join(LABELED_HUBS_FILE), &hubs.iter().map(|h| LabeledHubRecord::of(h)).collect::<Vec<_>>(), &LABELED_HUB_HEADER)?;
        write_profiles(&dir.join(HUB_PROFILES_FILE), &self.profiles)?;
        let moves: Vec<MoveRecord> = self.users.iter().flat_map(|u| &u.moves).map(MoveRecord::of).collect();
        write_csv(&dir.join(MOVES_FILE), &moves, &MOVE_HEADER)?;
        let users: Vec<UserRecord> = self.users.iter().map(UserDetection::record).collect();
        write_csv(&dir.join(USERS_FILE), &users, &USER_HEADER)?;
        let path = dir.join(DETECT_REPORT_FILE);
        let text = serde_json::to_string_pretty(&self.report).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analytics::stats::Summary;
use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint};
use crate::hubprofile::HubLabel;
use crate::moves::MoveKind;
use crate::orders::UserId;

use super::truth::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedHub {
    pub user_id: UserId,
    pub hub_id: u32,
    pub center: GeoPoint,
    pub label: HubLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedMove {
    pub user_id: UserId,
    pub kind: MoveKind,
    pub from: GeoPoint,
    pub to: GeoPoint,
    pub month: YearMonth,
}

/// What a detection run produced, reduced to what evaluation needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Every user that entered detection, with or without hubs.
    pub users: BTreeSet<UserId>,
    pub hubs: Vec<DetectedHub>,
    pub moves: Vec<DetectedMove>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub match_radius_km: f64,
    pub month_slack: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { match_radius_km: 2.0, month_slack: 1 }
    }
}

/// Why a fraction has no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Undefined {
    /// Nothing was detected, so precision has no denominator.
    NoDetections,
    /// The truth holds nothing, so recall has no denominator.
    NoTruth,
}

/// A fraction in [0, 1] or the reason it is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Value(f64),
    Undefined(Undefined),
}

impl Metric {
    fn ratio(num: usize, den: usize, empty: Undefined) -> Metric {
        if den == 0 {
            Metric::Undefined(empty)
        } else {
            Metric::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::Undefined(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindScore {
    pub true_moves: usize,
    pub detected_moves: usize,
    pub matched: usize,
    pub precision: Metric,
    pub recall: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub match_radius_km: f64,
    pub month_slack: u32,
    pub users: usize,
    pub hubs_detected: usize,
    pub anchors_true: usize,
    pub hubs_matched: usize,
    pub hub_center_error_km: Option<Summary>,
    pub label_accuracy: Metric,
    pub moves: BTreeMap<MoveKind, KindScore>,
    /// Absolute month difference over matched moves.
    pub move_month_error: Option<Summary>,
    /// Share of matched moves whose month is off by at most one.
    pub month_error_within_one: Metric,
}

impl EvalReport {
    pub fn precision(&self, kind: MoveKind) -> Metric {
        self.moves.get(&kind).map_or(Metric::Undefined(Undefined::NoDetections), |s| s.precision)
    }

    pub fn recall(&self, kind: MoveKind) -> Metric {
        self.moves.get(&kind).map_or(Metric::Undefined(Undefined::NoTruth), |s| s.recall)
    }
}

/// Greedy one-to-one matching of `(cost, left, right)` candidates, cheapest first.
fn greedy(mut candidates: Vec<(f64, usize, usize)>) -> Vec<(f64, usize, usize)> {
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut left, mut right) = (BTreeSet::new(), BTreeSet::new());
    candidates.into_iter().filter(|&(_, l, r)| !left.contains(&l) && !right.contains(&r) && left.insert(l) && right.insert(r)).collect()
}

fn check_universe(detected: &Detection, truth: &GroundTruth) -> Result<()> {
    let truth_users: BTreeSet<&UserId> = truth.users.iter().map(|u| &u.user_id).collect();
    let detected_users: BTreeSet<&UserId> = detected.users.iter().collect();
    let sample = |ids: Vec<&&UserId>| ids.iter().take(5).map(|u| u.0.as_str()).collect::<Vec<_>>().join(", ");
    let extra: Vec<_> = detected_users.difference(&truth_users).collect();
    if !extra.is_empty() {
        return Err(Error::Data(format!("{} detected users are not in the truth (e.g. {})", extra.len(), sample(extra))));
    }
    let missing: Vec<_> = truth_users.difference(&detected_users).collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!("{} truth users are missing from the detection (e.g. {})", missing.len(), sample(missing))));
    }
    let stray = detected.hubs.iter().map(|h| &h.user_id).chain(detected.moves.iter().map(|m| &m.user_id)).find(|u| !detected.users.contains(*u));
    if let Some(u) = stray {
        return Err(Error::Data(format!("detected hubs or moves reference unknown user {u}")));
    }
    Ok(())
}

/// Scores a detection against the truth that generated its input.
pub fn evaluate(detected: &Detection, truth: &GroundTruth, cfg: &EvalConfig) -> Result<EvalReport> {
    check_universe(detected, truth)?;
    let r = cfg.match_radius_km;

    let mut hubs_by_user: BTreeMap<&UserId, Vec<&DetectedHub>> = BTreeMap::new();
    for h in &detected.hubs {
        hubs_by_user.entry(&h.user_id).or_default().push(h);
    }
    let mut moves_by_user: BTreeMap<(&UserId, MoveKind), Vec<&DetectedMove>> = BTreeMap::new();
    for m in &detected.moves {
        moves_by_user.entry((&m.user_id, m.kind)).or_default().push(m);
    }

    let (mut center_errors, mut labels_right) = (Vec::new(), 0usize);
    let mut month_errors = Vec::new();
    let mut matched_by_kind: BTreeMap<MoveKind, usize> = BTreeMap::new();
    for u in &truth.users {
        let hubs = hubs_by_user.get(&u.user_id).map_or(&[][..], Vec::as_slice);
        let candidates = hubs
            .iter()
            .enumerate()
            .flat_map(|(i, h)| u.anchors.iter().enumerate().map(move |(j, a)| (haversine_km(h.center, a.location), i, j)))
            .filter(|c| c.0 <= r)
            .collect();
        for (d, i, j) in greedy(candidates) {
            center_errors.push(d);
            labels_right += usize::from(hubs[i].label == u.anchors[j].kind);
        }

        for kind in MoveKind::ALL {
            let det = moves_by_user.get(&(&u.user_id, kind)).map_or(&[][..], Vec::as_slice);
            let truths: Vec<_> = u.moves.iter().filter(|m| m.kind == kind).collect();
            let mut candidates = Vec::new();
            for (i, m) in det.iter().enumerate() {
                for (j, t) in truths.iter().enumerate() {
                    let (df, dt) = (haversine_km(m.from, t.from), haversine_km(m.to, t.to));
                    if df <= r && dt <= r && t.month.months_until(m.month).unsigned_abs() <= u64::from(cfg.month_slack) {
                        candidates.push((df + dt, i, j));
                    }
                }
            }
            for (_, i, j) in greedy(candidates) {
                *matched_by_kind.entry(kind).or_default() += 1;
                month_errors.push(truths[j].month.months_until(det[i].month).unsigned_abs() as f64);
            }
        }
    }

    let moves = MoveKind::ALL
        .iter()
        .map(|&kind| {
            let true_moves = truth.moves().filter(|(_, m)| m.kind == kind).count();
            let detected_moves = detected.moves.iter().filter(|m| m.kind == kind).count();
            let matched = matched_by_kind.get(&kind).copied().unwrap_or(0);
            let score = KindScore {
                true_moves,
                detected_moves,
                matched,
                precision: Metric::ratio(matched, detected_moves, Undefined::NoDetections),
                recall: Metric::ratio(matched, true_moves, Undefined::NoTruth),
            };
            (kind, score)
        })
        .collect();

    Ok(EvalReport {
        match_radius_km: r,
        month_slack: cfg.month_slack,
        users: truth.users.len(),
        hubs_detected: detected.hubs.len(),
        anchors_true: truth.users.iter().map(|u| u.anchors.len()).sum(),
        hubs_matched: center_errors.len(),
        hub_center_error_km: Summary::of(&center_errors),
        label_accuracy: Metric::ratio(labels_right, center_errors.len(), Undefined::NoDetections),
        moves,
        move_month_error: Summary::of(&month_errors),
        month_error_within_one: Metric::ratio(month_errors.iter().filter(|&&e| e <= 1.0).count(), month_errors.len(), Undefined::NoDetections),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthcity::truth::{Archetype, TrueAnchor, TrueMove, UserTruth};
    use chrono::NaiveDate;

    fn p(km_east: f64) -> GeoPoint {
        GeoPoint::new(39.9, 116.4).unwrap().offset_km(0.0, km_east)
    }

    fn day(m: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2016, m, 10).unwrap()
    }

    /// Ten users, each with one housing move from 0 km to 20 km east.
    fn truth() -> GroundTruth {
        let users = (0..10)
            .map(|i| UserTruth {
                user_id: UserId(format!("u{i}")),
                archetype: Archetype::HomeMover,
                anchors: vec![
                    TrueAnchor { kind: HubLabel::Home, location: p(0.0), from: day(1), to: day(6).pred_opt().unwrap() },
                    TrueAnchor { kind: HubLabel::Home, location: p(20.0), from: day(6), to: day(12) },
                    TrueAnchor { kind: HubLabel::Work, location: p(-15.0), from: day(1), to: day(12) },
                ],
                moves: vec![TrueMove { kind: MoveKind::Housing, month: YearMonth::of(day(6)), date: day(6), from: p(0.0), to: p(20.0) }],
            })
            .collect();
        GroundTruth { start_date: day(1), end_date: day(12), users, restaurants: Vec::new() }
    }

    #[test]
    fn truth_against_itself_is_perfect() {
        let t = truth();
        let rep = evaluate(&t.as_detection(), &t, &EvalConfig::default()).unwrap();
        assert_eq!(rep.precision(MoveKind::Housing), Metric::Value(1.0));
        assert_eq!(rep.recall(MoveKind::Housing), Metric::Value(1.0));
        assert_eq!(rep.recall(MoveKind::Job), Metric::Undefined(Undefined::NoTruth));
        assert_eq!(rep.label_accuracy, Metric::Value(1.0));
        assert_eq!(rep.hub_center_error_km.unwrap().max, 0.0);
        assert_eq!(rep.move_month_error.unwrap().max, 0.0);
    }

    #[test]
    fn empty_detection_has_no_precision() {
        let t = truth();
        let mut det = t.as_detection();
        det.moves.clear();
        let rep = evaluate(&det, &t, &EvalConfig::default()).unwrap();
        assert_eq!(rep.recall(MoveKind::Housing), Metric::Value(0.0));
        assert_eq!(rep.precision(MoveKind::Housing), Metric::Undefined(Undefined::NoDetections));
        assert_eq!(serde_json::to_value(rep.precision(MoveKind::Housing)).unwrap(), "NoDetections");
    }

    #[test]
    fn eight_correct_two_spurious() {
        let t = truth();
        let mut det = t.as_detection();
        // break two users' moves and add a spurious move elsewhere for each
        for m in det.moves.iter_mut().take(2) {
            m.to = p(-40.0);
        }
        let rep = evaluate(&det, &t, &EvalConfig::default()).unwrap();
        let s = rep.moves[&MoveKind::Housing];
        assert_eq!((s.matched, s.detected_moves, s.true_moves), (8, 10, 10));
        assert_eq!(s.precision, Metric::Value(0.8));
        assert_eq!(s.recall, Metric::Value(0.8));
    }

    #[test]
    fn month_slack_and_radius_apply() {
        let t = truth();
        let mut det = t.as_detection();
        det.moves[0].month = det.moves[0].month.plus_months(2);
        det.moves[1].from = p(1.5);
        let rep = evaluate(&det, &t, &EvalConfig::default()).unwrap();
        assert_eq!(rep.moves[&MoveKind::Housing].matched, 9);
        let tight = evaluate(&det, &t, &EvalConfig { match_radius_km: 0.1, month_slack: 1 }).unwrap();
        assert_eq!(tight.moves[&MoveKind::Housing].matched, 8);
    }

    #[test]
    fn mismatched_universe_is_named() {
        let t = truth();
        let mut det = t.as_detection();
        det.users.insert(UserId("ghost".into()));
        let err = evaluate(&det, &t, &EvalConfig::default()).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }
}

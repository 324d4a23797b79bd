//! Hub transitions (job and housing moves), user groups, commuting
//! distance and the working-overtime ratio.

use std::fmt;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::calendar::{time_slot, DayType, HolidayCalendar, Slot, YearMonth};
use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint};
use crate::hubprofile::HubLabel;
use crate::orders::UserId;
use crate::wkms::DiningHub;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    /// Home to home.
    Housing,
    /// Work to work.
    Job,
}

impl MoveKind {
    pub const ALL: [MoveKind; 2] = [MoveKind::Housing, MoveKind::Job];

    pub fn label(self) -> HubLabel {
        match self {
            MoveKind::Housing => HubLabel::Home,
            MoveKind::Job => HubLabel::Work,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Housing => "housing",
            MoveKind::Job => "job",
        }
    }

    pub fn parse(s: &str) -> Option<MoveKind> {
        match s {
            "housing" => Some(MoveKind::Housing),
            "job" => Some(MoveKind::Job),
            _ => None,
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledHub {
    pub hub: DiningHub,
    pub label: HubLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub user_id: UserId,
    pub kind: MoveKind,
    pub from_hub: u32,
    pub to_hub: u32,
    pub from_center: GeoPoint,
    pub to_center: GeoPoint,
    /// First month of destination-hub activity.
    pub move_month: YearMonth,
    /// First day of destination-hub activity.
    pub move_date: NaiveDate,
    pub displacement_km: f64,
    pub pre_commute_km: Option<f64>,
    pub post_commute_km: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoveConfig {
    pub min_separation_km: f64,
}

impl Default for MoveConfig {
    fn default() -> Self {
        MoveConfig { min_separation_km: 4.4 }
    }
}

impl MoveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_separation_km.is_finite() && self.min_separation_km > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("min_separation_km must be > 0, got {}", self.min_separation_km)))
        }
    }
}

/// Same-label pairs (A, B) with A strictly before B and no same-label hub
/// strictly between them, as indices into `hubs`.
pub fn chained_pairs(hubs: &[LabeledHub], label: HubLabel) -> Vec<(usize, usize)> {
    let idx: Vec<usize> = (0..hubs.len()).filter(|&i| hubs[i].label == label).collect();
    let mut pairs = Vec::new();
    for &a in &idx {
        for &b in &idx {
            if !hubs[a].hub.precedes(&hubs[b].hub) {
                continue;
            }
            let between = idx.iter().any(|&c| hubs[a].hub.precedes(&hubs[c].hub) && hubs[c].hub.precedes(&hubs[b].hub));
            if !between {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Emits a move for every chained same-label pair whose centers are at least
/// `min_separation_km` apart. Commute fields are filled in.
pub fn detect_transitions(hubs: &[LabeledHub], cfg: &MoveConfig) -> Vec<Move> {
    let mut moves = Vec::new();
    for kind in MoveKind::ALL {
        for (a, b) in chained_pairs(hubs, kind.label()) {
            let (from, to) = (&hubs[a].hub, &hubs[b].hub);
            let displacement_km = haversine_km(from.center, to.center);
            if displacement_km < cfg.min_separation_km {
                continue;
            }
            let move_date = to.first_order.date();
            let mut mv = Move {
                user_id: to.user_id.clone(),
                kind,
                from_hub: from.hub_id,
                to_hub: to.hub_id,
                from_center: from.center,
                to_center: to.center,
                move_month: YearMonth::of(move_date),
                move_date,
                displacement_km,
                pre_commute_km: None,
                post_commute_km: None,
            };
            let (pre, post) = move_commutes(hubs, &mv);
            mv.pre_commute_km = pre.ok();
            mv.post_commute_km = post.ok();
            moves.push(mv);
        }
    }
    moves.sort_by(|a, b| (&a.user_id, a.move_month, a.kind, a.from_hub, a.to_hub).cmp(&(&b.user_id, b.move_month, b.kind, b.from_hub, b.to_hub)));
    moves
}

/// Membership in the three user groups. Stayer excludes the other two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UserGroup {
    pub stayer: bool,
    pub job_hopper: bool,
    pub home_mover: bool,
}

impl UserGroup {
    pub fn codes(&self) -> String {
        let mut parts = Vec::new();
        if self.stayer {
            parts.push("stayer");
        }
        if self.job_hopper {
            parts.push("job_hopper");
        }
        if self.home_mover {
            parts.push("home_mover");
        }
        parts.join("+")
    }
}

/// Why a user has no group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Exclusion {
    NoHomeHub,
    NoWorkHub,
}

/// Groups a user with at least one Home and one Work hub.
pub fn classify_user(hubs: &[LabeledHub], moves: &[Move]) -> std::result::Result<UserGroup, Exclusion> {
    if !hubs.iter().any(|h| h.label == HubLabel::Home) {
        return Err(Exclusion::NoHomeHub);
    }
    if !hubs.iter().any(|h| h.label == HubLabel::Work) {
        return Err(Exclusion::NoWorkHub);
    }
    let job_hopper = moves.iter().any(|m| m.kind == MoveKind::Job);
    let home_mover = moves.iter().any(|m| m.kind == MoveKind::Housing);
    Ok(UserGroup { stayer: !job_hopper && !home_mover, job_hopper, home_mover })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CommuteError {
    /// No hub with the required label.
    Missing,
    /// Several candidate hubs with the required label.
    Ambiguous,
}

/// The hub of `label` in effect on `date`: the unique hub active that day,
/// else the unique hub closest in time.
pub fn hub_in_effect(hubs: &[LabeledHub], label: HubLabel, date: NaiveDate) -> std::result::Result<&DiningHub, CommuteError> {
    let candidates: Vec<&DiningHub> = hubs.iter().filter(|h| h.label == label).map(|h| &h.hub).collect();
    if candidates.is_empty() {
        return Err(CommuteError::Missing);
    }
    let active: Vec<&DiningHub> = candidates.iter().copied().filter(|h| h.active_on(date)).collect();
    match active.len() {
        1 => return Ok(active[0]),
        n if n > 1 => return Err(CommuteError::Ambiguous),
        _ => {}
    }
    let gap = |h: &DiningHub| {
        if date < h.first_order.date() {
            (h.first_order.date() - date).num_days()
        } else {
            (date - h.last_order.date()).num_days()
        }
    };
    let best = candidates.iter().map(|h| gap(h)).min().unwrap_or(i64::MAX);
    let nearest: Vec<&DiningHub> = candidates.into_iter().filter(|h| gap(h) == best).collect();
    if nearest.len() == 1 {
        Ok(nearest[0])
    } else {
        Err(CommuteError::Ambiguous)
    }
}

/// Distance between the Home and Work hubs in effect on `at`.
pub fn commuting_distance(hubs: &[LabeledHub], at: NaiveDate) -> std::result::Result<f64, CommuteError> {
    let home = hub_in_effect(hubs, HubLabel::Home, at)?;
    let work = hub_in_effect(hubs, HubLabel::Work, at)?;
    Ok(haversine_km(home.center, work.center))
}

type CommutePair = (std::result::Result<f64, CommuteError>, std::result::Result<f64, CommuteError>);

/// Pre-move (day before the destination hub starts) and post-move (its first
/// day) commuting distances. The moved side uses the move's own hubs.
pub fn move_commutes(hubs: &[LabeledHub], mv: &Move) -> CommutePair {
    let pre_date = mv.move_date - Duration::days(1);
    let post_date = mv.move_date;
    let other = match mv.kind {
        MoveKind::Housing => HubLabel::Work,
        MoveKind::Job => HubLabel::Home,
    };
    let pre = hub_in_effect(hubs, other, pre_date).map(|h| haversine_km(h.center, mv.from_center));
    let post = hub_in_effect(hubs, other, post_date).map(|h| haversine_km(h.center, mv.to_center));
    (pre, post)
}

fn is_overtime(ts: chrono::NaiveDateTime, cal: &HolidayCalendar) -> bool {
    let l = time_slot(ts, cal);
    l.day_type != DayType::Weekday || matches!(l.slot, Slot::Evening | Slot::Night)
}

/// Share of a work hub's orders on weekday evenings/nights, weekends or holidays.
pub fn overtime_ratio(w_hub: &DiningHub, cal: &HolidayCalendar) -> f64 {
    if w_hub.orders.is_empty() {
        return 0.0;
    }
    let n = w_hub.orders.iter().filter(|o| is_overtime(o.delivered_at, cal)).count();
    n as f64 / w_hub.orders.len() as f64
}

/// Share of orders in weekday morning, noon or afternoon.
pub fn regular_ratio(w_hub: &DiningHub, cal: &HolidayCalendar) -> f64 {
    if w_hub.orders.is_empty() {
        return 0.0;
    }
    let n = w_hub.orders.iter().filter(|o| !is_overtime(o.delivered_at, cal)).count();
    n as f64 / w_hub.orders.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::Order;
    use chrono::NaiveDateTime;
    use proptest::prelude::*;

    fn day(y: i32, m: u32, d: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d).unwrap().and_hms_opt(12, 0, 0).unwrap()
    }

    fn hub(id: u32, center: GeoPoint, times: &[NaiveDateTime]) -> DiningHub {
        let orders: Vec<Order> = times.iter().map(|&t| Order::new("u", format!("r{id}"), center, t, 20.0).unwrap()).collect();
        DiningHub {
            user_id: "u".into(),
            hub_id: id,
            center,
            members: vec![format!("r{id}").into()],
            first_order: *times.iter().min().unwrap(),
            last_order: *times.iter().max().unwrap(),
            orders,
        }
    }

    fn lh(id: u32, label: HubLabel, center: GeoPoint, from: NaiveDateTime, to: NaiveDateTime) -> LabeledHub {
        LabeledHub { hub: hub(id, center, &[from, to]), label }
    }

    fn base() -> GeoPoint {
        GeoPoint::new(39.9, 116.4).unwrap()
    }

    #[test]
    fn housing_move_in_april() {
        let hubs = vec![
            lh(0, HubLabel::Home, base(), day(2016, 1, 3), day(2016, 3, 28)),
            lh(1, HubLabel::Home, base().offset_km(6.0, 0.0), day(2016, 4, 2), day(2016, 6, 25)),
        ];
        let moves = detect_transitions(&hubs, &MoveConfig::default());
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].kind, MoveKind::Housing);
        assert_eq!(moves[0].move_month.to_string(), "2016-04");
        assert!((moves[0].displacement_km - 6.0).abs() < 0.01);
    }

    #[test]
    fn overlapping_work_hubs_no_move() {
        let hubs = vec![
            lh(0, HubLabel::Work, base(), day(2016, 1, 3), day(2016, 5, 1)),
            lh(1, HubLabel::Work, base().offset_km(10.0, 0.0), day(2016, 4, 2), day(2016, 6, 25)),
        ];
        assert!(detect_transitions(&hubs, &MoveConfig::default()).is_empty());
    }

    #[test]
    fn close_hubs_no_move() {
        let hubs = vec![
            lh(0, HubLabel::Home, base(), day(2016, 1, 3), day(2016, 3, 1)),
            lh(1, HubLabel::Home, base().offset_km(0.5, 0.0), day(2016, 4, 2), day(2016, 6, 25)),
        ];
        assert!(detect_transitions(&hubs, &MoveConfig::default()).is_empty());
    }

    #[test]
    fn chains_are_not_transitive() {
        let hubs = vec![
            lh(0, HubLabel::Work, base(), day(2016, 1, 1), day(2016, 2, 1)),
            lh(1, HubLabel::Work, base().offset_km(10.0, 0.0), day(2016, 3, 1), day(2016, 4, 1)),
            lh(2, HubLabel::Work, base().offset_km(20.0, 0.0), day(2016, 5, 1), day(2016, 6, 1)),
        ];
        let moves = detect_transitions(&hubs, &MoveConfig::default());
        let pairs: Vec<(u32, u32)> = moves.iter().map(|m| (m.from_hub, m.to_hub)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn groups() {
        let h = lh(0, HubLabel::Home, base(), day(2016, 1, 1), day(2016, 6, 1));
        let w = lh(1, HubLabel::Work, base().offset_km(10.0, 0.0), day(2016, 1, 1), day(2016, 6, 1));
        let g = classify_user(&[h.clone(), w.clone()], &[]).unwrap();
        assert_eq!(g, UserGroup { stayer: true, job_hopper: false, home_mover: false });
        assert_eq!(classify_user(std::slice::from_ref(&h), &[]), Err(Exclusion::NoWorkHub));
        assert_eq!(classify_user(std::slice::from_ref(&w), &[]), Err(Exclusion::NoHomeHub));

        let job = Move {
            user_id: "u".into(),
            kind: MoveKind::Job,
            from_hub: 1,
            to_hub: 2,
            from_center: base(),
            to_center: base(),
            move_month: YearMonth::new(2016, 3).unwrap(),
            move_date: day(2016, 3, 1).date(),
            displacement_km: 9.0,
            pre_commute_km: None,
            post_commute_km: None,
        };
        let g = classify_user(&[h.clone(), w.clone()], std::slice::from_ref(&job)).unwrap();
        assert_eq!(g, UserGroup { stayer: false, job_hopper: true, home_mover: false });
        let housing = Move { kind: MoveKind::Housing, ..job.clone() };
        let g = classify_user(&[h, w], &[job, housing]).unwrap();
        assert_eq!(g, UserGroup { stayer: false, job_hopper: true, home_mover: true });
    }

    #[test]
    fn commute_distances() {
        let h = lh(0, HubLabel::Home, base(), day(2016, 1, 1), day(2016, 6, 1));
        let w_same = lh(1, HubLabel::Work, base(), day(2016, 1, 1), day(2016, 6, 1));
        assert_eq!(commuting_distance(&[h.clone(), w_same], day(2016, 3, 1).date()).unwrap(), 0.0);

        let h2 = lh(0, HubLabel::Home, GeoPoint::new(39.90, 116.40).unwrap(), day(2016, 1, 1), day(2016, 6, 1));
        let w2 = lh(1, HubLabel::Work, GeoPoint::new(39.99, 116.40).unwrap(), day(2016, 1, 1), day(2016, 6, 1));
        let d = commuting_distance(&[h2, w2], day(2016, 3, 1).date()).unwrap();
        assert!((d - 10.01).abs() < 0.01, "{d}");

        let w3 = lh(2, HubLabel::Work, base().offset_km(30.0, 0.0), day(2016, 2, 1), day(2016, 4, 1));
        let w4 = lh(3, HubLabel::Work, base().offset_km(-30.0, 0.0), day(2016, 2, 1), day(2016, 4, 1));
        assert_eq!(commuting_distance(&[h, w3, w4], day(2016, 3, 1).date()), Err(CommuteError::Ambiguous));
    }

    #[test]
    fn mover_pre_and_post_commute() {
        let work = base();
        let hubs = vec![
            lh(0, HubLabel::Work, work, day(2016, 1, 1), day(2016, 12, 1)),
            lh(1, HubLabel::Home, work.offset_km(13.0, 0.0), day(2016, 1, 2), day(2016, 5, 20)),
            lh(2, HubLabel::Home, work.offset_km(0.0, -6.0), day(2016, 6, 3), day(2016, 12, 1)),
        ];
        let moves = detect_transitions(&hubs, &MoveConfig::default());
        assert_eq!(moves.len(), 1);
        let (pre, post) = (moves[0].pre_commute_km.unwrap(), moves[0].post_commute_km.unwrap());
        assert!((pre - 13.0).abs() < 0.01 && (post - 6.0).abs() < 0.01, "{pre} {post}");
    }

    #[test]
    fn overtime_examples() {
        let cal = HolidayCalendar::default();
        // 2016-03-09 Wednesday, 2016-03-12 Saturday, 2016-03-13 Sunday
        let noon = day(2016, 3, 9);
        assert_eq!(overtime_ratio(&hub(0, base(), &[noon; 5]), &cal), 0.0);
        assert_eq!(overtime_ratio(&hub(0, base(), &[day(2016, 3, 12); 3]), &cal), 1.0);
        let eve = NaiveDate::from_ymd_opt(2016, 3, 9).unwrap().and_hms_opt(20, 0, 0).unwrap();
        let mut times = vec![eve, eve, day(2016, 3, 13)];
        times.extend([noon; 7]);
        let h = hub(0, base(), &times);
        assert!((overtime_ratio(&h, &cal) - 0.3).abs() < 1e-12);
        assert!((overtime_ratio(&h, &cal) + regular_ratio(&h, &cal) - 1.0).abs() < 1e-12);
    }

    /// Brute force: every ordered same-label pair with no same-label hub strictly between.
    fn brute_force_moves(hubs: &[LabeledHub], sep: f64) -> usize {
        let n = hubs.len();
        let mut count = 0;
        for a in 0..n {
            for b in 0..n {
                let (ha, hb) = (&hubs[a], &hubs[b]);
                if a == b || ha.label != hb.label || ha.label == HubLabel::Other {
                    continue;
                }
                if ha.hub.last_order >= hb.hub.first_order {
                    continue;
                }
                let blocked = (0..n).any(|c| {
                    let hc = &hubs[c];
                    hc.label == ha.label && ha.hub.last_order < hc.hub.first_order && hc.hub.last_order < hb.hub.first_order
                });
                if !blocked && haversine_km(ha.hub.center, hb.hub.center) >= sep {
                    count += 1;
                }
            }
        }
        count
    }

    proptest! {
        #[test]
        fn moves_match_brute_force(plan in proptest::collection::vec((0u8..3, 0i64..300, 1i64..120, -20.0..20.0f64, -20.0..20.0f64), 1..=5)) {
            let start = day(2016, 1, 1);
            let hubs: Vec<LabeledHub> = plan.iter().enumerate().map(|(i, &(l, s, len, n, e))| {
                let label = [HubLabel::Home, HubLabel::Work, HubLabel::Other][l as usize];
                lh(i as u32, label, base().offset_km(n, e), start + Duration::days(s), start + Duration::days(s + len))
            }).collect();
            let cfg = MoveConfig::default();
            let moves = detect_transitions(&hubs, &cfg);
            prop_assert_eq!(moves.len(), brute_force_moves(&hubs, cfg.min_separation_km));
            for m in &moves {
                let from = &hubs[m.from_hub as usize].hub;
                let to = &hubs[m.to_hub as usize].hub;
                prop_assert!(from.last_order < to.first_order);
                prop_assert!(m.displacement_km >= cfg.min_separation_km);
            }
            if let Ok(g) = classify_user(&hubs, &moves) {
                prop_assert!(!(g.stayer && (g.job_hopper || g.home_mover)));
            }
        }
    }
}

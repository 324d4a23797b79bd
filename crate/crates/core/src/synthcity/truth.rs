use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint};
use crate::hubprofile::HubLabel;
use crate::moves::MoveKind;
use crate::orders::{RestaurantId, UserId};
use crate::wkms::DeliveryMethod;

use super::evaluate::{DetectedHub, DetectedMove, Detection};

/// Scripted behavior of one synthetic user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Stayer,
    JobHopper,
    HomeMover,
    Both,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [Archetype::Stayer, Archetype::JobHopper, Archetype::HomeMover, Archetype::Both];

    pub fn moves(self, kind: MoveKind) -> bool {
        matches!(
            (self, kind),
            (Archetype::Both, _) | (Archetype::HomeMover, MoveKind::Housing) | (Archetype::JobHopper, MoveKind::Job)
        )
    }
}

/// A home or work location and the closed date range it is in effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueAnchor {
    pub kind: HubLabel,
    pub location: GeoPoint,
    pub from: NaiveDate,
    pub to: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueMove {
    pub kind: MoveKind,
    pub month: YearMonth,
    /// First day at the new anchor.
    pub date: NaiveDate,
    pub from: GeoPoint,
    pub to: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTruth {
    pub user_id: UserId,
    pub archetype: Archetype,
    /// Sorted by kind, then start date.
    pub anchors: Vec<TrueAnchor>,
    /// Sorted by date.
    pub moves: Vec<TrueMove>,
}

impl UserTruth {
    pub fn anchor_on(&self, kind: HubLabel, date: NaiveDate) -> Option<&TrueAnchor> {
        self.anchors.iter().find(|a| a.kind == kind && a.from <= date && date <= a.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestaurantTruth {
    pub location: GeoPoint,
    pub method: DeliveryMethod,
    pub radius_km: f64,
}

impl RestaurantTruth {
    pub fn id(index: usize) -> RestaurantId {
        RestaurantId(format!("r{index:06}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Sorted by user id.
    pub users: Vec<UserTruth>,
    /// Indexed by the number in the restaurant id.
    pub restaurants: Vec<RestaurantTruth>,
}

impl GroundTruth {
    pub fn user(&self, id: &UserId) -> Option<&UserTruth> {
        self.users.binary_search_by(|u| u.user_id.cmp(id)).ok().map(|i| &self.users[i])
    }

    pub fn moves(&self) -> impl Iterator<Item = (&UserId, &TrueMove)> {
        self.users.iter().flat_map(|u| u.moves.iter().map(move |m| (&u.user_id, m)))
    }

    /// Checks that every move connects two consecutive, date-disjoint
    /// anchors of its kind at least `min_displacement_km` apart.
    pub fn validate(&self, min_displacement_km: f64) -> Result<()> {
        for u in &self.users {
            for m in &u.moves {
                let prev = m.date.pred_opt().and_then(|d| u.anchor_on(m.kind.label(), d));
                let next = u.anchor_on(m.kind.label(), m.date);
                let ok = match (prev, next) {
                    (Some(a), Some(b)) => a.to < b.from && a.location == m.from && b.location == m.to,
                    _ => false,
                };
                if !ok {
                    return Err(Error::Data(format!("user {}: move on {} does not join two anchors", u.user_id, m.date)));
                }
                if haversine_km(m.from, m.to) < min_displacement_km {
                    return Err(Error::Data(format!("user {}: move on {} is shorter than {min_displacement_km} km", u.user_id, m.date)));
                }
            }
        }
        Ok(())
    }

    /// The truth expressed as a detection result: anchors become hubs and
    /// true moves become detected moves.
    pub fn as_detection(&self) -> Detection {
        let mut det = Detection::default();
        for u in &self.users {
            det.users.insert(u.user_id.clone());
            for (i, a) in u.anchors.iter().enumerate() {
                det.hubs.push(DetectedHub { user_id: u.user_id.clone(), hub_id: i as u32, center: a.location, label: a.kind });
            }
            for m in &u.moves {
                det.moves.push(DetectedMove { user_id: u.user_id.clone(), kind: m.kind, from: m.from, to: m.to, month: m.month });
            }
        }
        det
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(format!("serializing ground truth: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

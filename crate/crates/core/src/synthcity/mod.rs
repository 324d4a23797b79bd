//! Synthetic cities with known ground truth.
//!
//! [`generate`] places restaurants with per-method delivery radii, gives
//! every user home and work anchors plus an archetype script (stay, change
//! job, move house, or both) and emits orders from restaurants reachable
//! from the anchor active at each order's date. [`evaluate`] scores a
//! detection run against the truth. [`city`] adds the optional context
//! files (subdistricts, ring roads, census, housing transactions) that the
//! analytics reports consume.

pub mod city;
mod config;
mod evaluate;
mod generate;
mod truth;

pub use city::{CityContext, CityLayout};
pub use config::{ArchetypeShares, OrdersPerUser, ScenarioConfig};
pub use evaluate::{evaluate, DetectedHub, DetectedMove, Detection, EvalConfig, EvalReport, Metric, Undefined};
pub use generate::{generate, radius_median_km, sample_delivery_zones, Scenario};
pub use truth::{Archetype, GroundTruth, RestaurantTruth, TrueAnchor, TrueMove, UserTruth};

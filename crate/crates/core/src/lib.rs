//! Dining-hub detection and job/housing mobility analytics from food
//! delivery order logs.
//!
//! The pipeline runs per user: ad-hoc users are dropped, each user's
//! restaurants are clustered into dining hubs with a weighted kernelized
//! mean shift ([`wkms`]), temporary hubs are filtered and the rest are
//! labeled Home/Work/Other from their time-slot ordering profiles
//! ([`hubprofile`]). Same-label hubs with disjoint activity become job or
//! housing moves ([`moves`]), which feed the aggregate statistics in
//! [`analytics`]. [`synthcity`] generates synthetic cities with ground
//! truth, and [`pipeline`] wires the stages to files.
//!
//! # Examples
//!
//! Clustering and labeling:
//! - `cargo run --example bandwidth`: kernel bandwidth from delivery-zone radii
//! - `cargo run --example wkms_hubs`: one user's orders clustered into hubs
//! - `cargo run --example label_hubs`: K-means over hub time-slot profiles
//!
//! Mobility:
//! - `cargo run --example detect_moves`: full detection on a synthetic log
//! - `cargo run --example analytics_reports`: the statistics behind the reports
//!
//! End to end:
//! - `cargo run --example synth_evaluate`: precision and recall across noise levels
//! - `cargo run --example pipeline`: every stage from a JSON config

pub mod analytics;
pub mod calendar;
pub mod error;
pub mod geo;
pub mod hubprofile;
pub mod moves;
pub mod orders;
pub mod pipeline;
pub mod synthcity;
pub mod wkms;

pub use calendar::{time_slot, DayType, HolidayCalendar, Slot, SlotLabel, YearMonth};
pub use error::{Error, Result};
pub use geo::{haversine_km, GeoPoint};
pub use hubprofile::{ClassifierConfig, HubLabel};
pub use moves::{Move, MoveConfig, MoveKind, UserGroup};
pub use orders::{filter_adhoc_users, load_orders, Order, OrderLog, RestaurantId, UserId};
pub use wkms::{ClusterOutcome, DiningHub, KernelConfig};

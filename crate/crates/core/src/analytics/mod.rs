//! Aggregate and comparative mobility statistics.

pub mod flows;
pub mod housing;
pub mod kde;
pub mod regions;
pub mod stats;

pub use flows::{by_calendar_month, flow_graph, monthly_move_counts, work_home_ratio_correlation, work_home_ratios, FlowGraph, WorkHomeRatios};
pub use housing::{binned_post_pre_diff, match_housing_price, region_transitions, PricedHousingMove, Transaction, TransactionIndex};
pub use kde::{kde_hotspot_grid, DensityGrid};
pub use regions::{point_to_subdistrict, Placement, Region, RingModel, SubdistrictId, SubdistrictSet};
pub use stats::{pearson_r, welch_t, Summary, WelchTest};

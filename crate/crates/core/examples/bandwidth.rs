//! Estimates the kernel bandwidth from a pool of delivery-zone radii drawn
//! with the Table II method mix.
//!
//! ```text
//! cargo run --example bandwidth
//! ```

use std::collections::BTreeMap;

use dinehub::synthcity::{sample_delivery_zones, ScenarioConfig};
use dinehub::wkms::{estimate_bandwidth, nearest_rank_percentile, DeliveryMethod};

fn main() -> dinehub::Result<()> {
    let cfg = ScenarioConfig::baseline(42);
    let zones = sample_delivery_zones(&cfg, 20_294)?;

    let mut by_method: BTreeMap<DeliveryMethod, Vec<f64>> = BTreeMap::new();
    for &(m, d) in &zones {
        by_method.entry(m).or_default().push(d);
    }
    println!("{:<16} {:>7} {:>7} {:>9}", "method", "zones", "share", "p95 km");
    for (m, ds) in &by_method {
        let share = ds.len() as f64 / zones.len() as f64;
        println!("{:<16} {:>7} {:>7.4} {:>9.2}", format!("{m:?}"), ds.len(), share, nearest_rank_percentile(ds, 95.0)?);
    }

    for p in [95.0, 99.0] {
        println!("pooled p{p}: {:.2} km", estimate_bandwidth(&zones, p)?);
    }
    Ok(())
}

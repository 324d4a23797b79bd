//! Clusters one user's orders into dining hubs with weighted mean shift.
//!
//! The user orders from restaurants around a home and an office 10 km
//! apart, plus a single order from a far-away restaurant. That order forms
//! its own hub, which the temporary-hub filter then removes.
//!
//! ```text
//! cargo run --example wkms_hubs
//! ```

use chrono::{Duration, NaiveDate};
use dinehub::wkms::{cluster_user, mean_shift_modes, restaurant_weights};
use dinehub::hubprofile::filter_temporary_hubs;
use dinehub::{ClassifierConfig, GeoPoint, KernelConfig, Order};

fn main() -> dinehub::Result<()> {
    let home = GeoPoint::new(39.95, 116.35)?;
    let office = home.offset_km(0.0, 10.0);
    let start = NaiveDate::from_ymd_opt(2016, 3, 1).expect("valid date").and_hms_opt(12, 0, 0).expect("valid time");

    // (restaurant, offset from its anchor in km, delivery minutes)
    let near_home = [("r-h1", (0.4, 0.3), 25.0), ("r-h2", (-0.8, 0.5), 32.0), ("r-h3", (1.2, -0.6), 40.0)];
    let near_office = [("r-w1", (0.2, -0.3), 20.0), ("r-w2", (-0.5, 0.9), 28.0)];
    let mut orders = Vec::new();
    for day in 0..60 {
        let at = start + Duration::days(day);
        let (id, (n, e), minutes) = if day % 2 == 0 { near_home[day as usize / 2 % 3] } else { near_office[day as usize / 2 % 2] };
        let anchor = if day % 2 == 0 { home } else { office };
        orders.push(Order::new("demo-user", id, anchor.offset_km(n, e), at, minutes)?);
    }
    orders.push(Order::new("demo-user", "r-far", home.offset_km(30.0, 0.0), start, 45.0)?);

    let cfg = KernelConfig::default();
    for s in restaurant_weights(&orders) {
        println!("site {:<6} weight {:.4} /min, {} orders", s.restaurant_id, s.weight, s.order_count);
    }
    let modes = mean_shift_modes(&restaurant_weights(&orders), &cfg);
    println!("{} modes, {} seeds did not converge", modes.modes.len(), modes.non_converged);

    let outcome = cluster_user(&orders, &cfg);
    for h in &outcome.hubs {
        println!(
            "hub {} at ({:.4}, {:.4}): {} restaurants, {} orders, {} to {}",
            h.hub_id,
            h.center.lat(),
            h.center.lon(),
            h.members.len(),
            h.order_count(),
            h.first_order.date(),
            h.last_order.date()
        );
    }
    println!("outlier restaurants: {:?}", outcome.outliers.iter().map(|r| r.to_string()).collect::<Vec<_>>());

    let kept = filter_temporary_hubs(outcome, &ClassifierConfig::default());
    println!("after the temporary-hub filter: {} hubs kept, {} removed", kept.hubs.len(), kept.temporary.len());
    Ok(())
}

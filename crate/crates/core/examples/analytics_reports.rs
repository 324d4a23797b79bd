//! The statistics behind the mobility reports on small hand-made inputs:
//! Welch's t-test, Pearson correlation, binned price differences, ring
//! region transitions and a hotspot density grid.
//!
//! ```text
//! cargo run --example analytics_reports
//! ```

use dinehub::analytics::{binned_post_pre_diff, kde_hotspot_grid, pearson_r, region_transitions, welch_t, PricedHousingMove, RingModel};
use dinehub::geo::BoundingBox;
use dinehub::synthcity::CityLayout;

fn main() -> dinehub::Result<()> {
    let stayers = [9.1, 11.4, 8.7, 12.0, 10.3, 9.8, 11.1];
    let movers = [13.2, 14.8, 12.1, 15.5, 13.9, 14.2];
    let t = welch_t(&movers, &stayers)?;
    println!("commute, movers vs stayers: t = {:.3}, dof = {:.2}, p = {:.4}", t.t, t.dof, t.p_two_sided);

    let ratio = [0.4, 0.9, 1.3, 2.2, 3.1, 0.7];
    let census = [0.5, 1.1, 1.2, 2.6, 2.9, 0.6];
    println!("work-home ratio vs census: r = {:.3}", pearson_r(&ratio, &census)?);

    let prices = [(42_000.0, 38_500.0), (55_000.0, 47_000.0), (61_000.0, 52_500.0), (38_000.0, 36_000.0)];
    for (_, b) in binned_post_pre_diff(&prices, 10_000.0)? {
        println!("pre price [{:.0}, {:.0}): {} moves, mean change {:+.0}", b.lower, b.upper, b.count, b.mean_diff);
    }

    let layout = CityLayout::for_extent(BoundingBox { min_lat: 39.55, min_lon: 115.95, max_lat: 40.25, max_lon: 116.85 });
    let rings = RingModel::new(layout.rings()?)?;
    let c = layout.center;
    let moves = [
        PricedHousingMove {
            from: c.offset_km(2.0, 1.0),
            to: c.offset_km(20.0, 5.0),
            pre_price: layout.price_at(c.offset_km(2.0, 1.0)),
            post_price: layout.price_at(c.offset_km(20.0, 5.0)),
            pre_commute_km: 3.0,
            post_commute_km: 19.5,
        },
        PricedHousingMove {
            from: c.offset_km(-12.0, 0.0),
            to: c.offset_km(-1.0, 1.0),
            pre_price: layout.price_at(c.offset_km(-12.0, 0.0)),
            post_price: layout.price_at(c.offset_km(-1.0, 1.0)),
            pre_commute_km: 14.0,
            post_commute_km: 4.0,
        },
    ];
    for ((from, to), cell) in region_transitions(&moves, &rings).cells {
        println!(
            "{} -> {}: {} moves, price {:+.0}, commute {:+.1} km",
            from.as_str(),
            to.as_str(),
            cell.count,
            cell.mean_delta_price,
            cell.mean_delta_commute_km
        );
    }

    let homes: Vec<_> = (0..200).map(|i| c.offset_km((i % 20) as f64 * 0.3, (i / 20) as f64 * 0.3)).collect();
    let grid = kde_hotspot_grid(&homes, 0.5, 2.0)?;
    if let Some(peak) = grid.argmax() {
        println!("hotspot grid {}x{}, peak at ({:.4}, {:.4})", grid.rows, grid.cols, peak.lat, peak.lon);
    }
    Ok(())
}

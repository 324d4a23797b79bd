//! Runs the whole detection stage on a synthetic log and prints one job
//! hopper's hubs and moves.
//!
//! ```text
//! cargo run --example detect_moves
//! ```

use dinehub::pipeline::{detect, DetectParams};
use dinehub::synthcity::{generate, ScenarioConfig};
use dinehub::{ClassifierConfig, KernelConfig, MoveConfig};

fn main() -> dinehub::Result<()> {
    let scenario_cfg = ScenarioConfig { n_users: 500, ..ScenarioConfig::baseline(5) };
    let scenario = generate(&scenario_cfg)?;
    let calendar = scenario_cfg.calendar();
    let params = DetectParams {
        kernel: &KernelConfig::default(),
        classifier: &ClassifierConfig::default(),
        moves: &MoveConfig::default(),
        min_orders: 10,
        calendar: &calendar,
    };
    let detected = detect(&scenario.log, &params)?;
    let r = &detected.report;
    println!(
        "{} users, {} hubs (H {} / W {} / O {}), {} temporary, {} housing + {} job moves",
        r.users_in, r.hubs, r.home_hubs, r.work_hubs, r.other_hubs, r.temporary_hubs, r.housing_moves, r.job_moves
    );
    println!("groups: {:?}", r.groups);

    let Some(user) = detected.users.iter().find(|u| matches!(&u.group, Some(Ok(g)) if g.job_hopper)) else {
        println!("no job hopper detected");
        return Ok(());
    };
    println!("\nuser {} ({} orders)", user.user_id, user.n_orders);
    for h in &user.hubs {
        println!(
            "  hub {} {} at ({:.4}, {:.4}), {} orders, {} to {}",
            h.hub.hub_id,
            h.label,
            h.hub.center.lat(),
            h.hub.center.lon(),
            h.hub.order_count(),
            h.hub.first_order.date(),
            h.hub.last_order.date()
        );
    }
    for m in &user.moves {
        println!("  {} move hub {} -> hub {} in {}, {:.1} km", m.kind, m.from_hub, m.to_hub, m.move_month, m.displacement_km);
    }
    if let Some(truth) = scenario.truth.user(&user.user_id) {
        for m in &truth.moves {
            println!("  scripted {} move in {}", m.kind, m.month);
        }
    }
    Ok(())
}

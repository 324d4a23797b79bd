//! Labels hubs as Home, Work or Other by clustering their time-slot
//! profiles with K-means.
//!
//! ```text
//! cargo run --example label_hubs
//! ```

use dinehub::calendar::SlotLabel;
use dinehub::hubprofile::{filter_temporary_hubs, home_mass, hub_features, kmeans_with_silhouette, label_centroids, work_mass, SlotVector};
use dinehub::synthcity::{generate, ScenarioConfig};
use dinehub::wkms::cluster_user;
use dinehub::{filter_adhoc_users, ClassifierConfig, KernelConfig};

fn main() -> dinehub::Result<()> {
    let scenario_cfg = ScenarioConfig { n_users: 400, ..ScenarioConfig::baseline(11) };
    let scenario = generate(&scenario_cfg)?;
    let calendar = scenario_cfg.calendar();
    let kernel = KernelConfig::default();
    let classifier = ClassifierConfig::default();

    let log = filter_adhoc_users(&scenario.log, 10);
    let mut features: Vec<SlotVector> = Vec::new();
    for (_, orders) in log.by_user() {
        let outcome = filter_temporary_hubs(cluster_user(orders, &kernel), &classifier);
        features.extend(outcome.hubs.iter().map(|h| hub_features(h, &calendar).freq));
    }
    println!("{} hub profiles from {} users", features.len(), log.user_count());

    let fit = kmeans_with_silhouette(&features, &classifier)?;
    let labels = label_centroids(&fit.centroids, classifier.label_margin);
    println!("k = {} (silhouette {:.3})", fit.chosen_k, fit.silhouette);
    for (i, (c, label)) in fit.centroids.iter().zip(&labels).enumerate() {
        let size = fit.assignments.iter().filter(|&&a| a == i).count();
        let top = (0..SlotLabel::COUNT).max_by(|&a, &b| c[a].total_cmp(&c[b])).and_then(SlotLabel::from_index).expect("non-empty profile");
        println!(
            "cluster {i}: {label}, {size} hubs, work mass {:.2}, home mass {:.2}, busiest slot {top:?}",
            work_mass(c),
            home_mass(c)
        );
    }
    Ok(())
}

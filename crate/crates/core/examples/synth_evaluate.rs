//! Generates scenarios at several noise levels, detects moves and scores
//! them against the scripted ground truth.
//!
//! ```text
//! cargo run --example synth_evaluate
//! ```

use dinehub::pipeline::{detect, DetectParams};
use dinehub::synthcity::{evaluate, generate, EvalConfig, ScenarioConfig};
use dinehub::{ClassifierConfig, KernelConfig, MoveConfig, MoveKind};

fn main() -> dinehub::Result<()> {
    println!("{:>5} {:>9} {:>9} {:>9} {:>9} {:>9}", "noise", "H prec", "H recall", "W prec", "W recall", "labels");
    for noise in [0.0, 0.1, 0.2, 0.3] {
        let cfg = ScenarioConfig { n_users: 800, noise, displacement_km: [8.0, 25.0], ..ScenarioConfig::baseline(3) };
        let scenario = generate(&cfg)?;
        let calendar = cfg.calendar();
        let params = DetectParams {
            kernel: &KernelConfig::default(),
            classifier: &ClassifierConfig::default(),
            moves: &MoveConfig::default(),
            min_orders: 10,
            calendar: &calendar,
        };
        let detected = detect(&scenario.log, &params)?;
        let report = evaluate(&detected.to_detection(), &scenario.truth, &EvalConfig::default())?;
        let show = |m: dinehub::synthcity::Metric| m.value().map_or("n/a".to_string(), |v| format!("{v:.3}"));
        println!(
            "{noise:>5.1} {:>9} {:>9} {:>9} {:>9} {:>9}",
            show(report.precision(MoveKind::Housing)),
            show(report.recall(MoveKind::Housing)),
            show(report.precision(MoveKind::Job)),
            show(report.recall(MoveKind::Job)),
            show(report.label_accuracy)
        );
    }
    Ok(())
}

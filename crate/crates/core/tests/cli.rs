use std::path::Path;
use std::process::{Command, Output};

use dinehub::synthcity::ScenarioConfig;

fn dinehub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dinehub")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, n_users: usize) -> String {
    let scenario = ScenarioConfig { n_users, displacement_km: [8.0, 25.0], ..ScenarioConfig::baseline(5) };
    let cfg = serde_json::json!({ "scenario": scenario, "out_dir": "run" });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn recall(eval: &serde_json::Value, kind: &str) -> f64 {
    eval["moves"][kind]["recall"].as_f64().expect("numeric recall")
}

#[test]
fn help_lists_subcommands_and_global_flags() {
    let o = dinehub(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for word in ["synth", "detect", "analyze", "evaluate", "run-all", "--config", "--workers", "--seed", "--out-dir"] {
        assert!(text.contains(word), "help lacks {word}:\n{text}");
    }
}

#[test]
fn unknown_config_field_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"kernel": {"sigma": 4.4}}"#).unwrap();
    let o = dinehub(&["--config", path.to_str().unwrap(), "detect"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
}

#[test]
fn synth_without_scenario_names_the_missing_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = dinehub(&["--out-dir", dir.path().to_str().unwrap(), "synth"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing field `scenario`"), "{}", stderr(&o));
}

#[test]
fn missing_configured_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"analytics": {"transactions": "nowhere.csv"}}"#).unwrap();
    let o = dinehub(&["--config", path.to_str().unwrap(), "analyze"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("transactions"), "{}", stderr(&o));
}

#[test]
fn zero_workers_is_a_config_error() {
    let o = dinehub(&["--workers", "0", "detect"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_order_log_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("orders.csv"), "this,is,not\nan,order,log\n").unwrap();
    let o = dinehub(&["--out-dir", dir.path().to_str().unwrap(), "detect"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn evaluate_before_detect_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = dinehub(&["--out-dir", dir.path().to_str().unwrap(), "evaluate"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn stages_run_separately_and_report_skipped_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 150);
    let run = dir.path().join("run");

    let o = dinehub(&["--config", &config, "--workers", "2", "--seed", "9", "synth"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("synth: 150 users"), "{}", stdout(&o));

    let o = dinehub(&["--config", &config, "detect"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = dinehub(&["--config", &config, "analyze"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("notice: no transactions file"), "{text}");
    assert!(text.contains("notice: no subdistricts file"), "{text}");
    assert!(!run.join("region_transitions.csv").exists());

    let o = dinehub(&["--config", &config, "evaluate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let wide: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("eval_report.json")).unwrap()).unwrap();

    let o = dinehub(&["--config", &config, "evaluate", "--match-radius-km", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("radius 0.1 km"), "{}", stdout(&o));
    let narrow: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("eval_report.json")).unwrap()).unwrap();
    for kind in ["housing", "job"] {
        assert!(recall(&narrow, kind) <= recall(&wide, kind), "{kind}: {} > {}", recall(&narrow, kind), recall(&wide, kind));
    }
}

#[test]
fn run_all_with_overrides_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 120);
    let out = dir.path().join("elsewhere");
    let o = dinehub(&["--config", &config, "--out-dir", out.to_str().unwrap(), "--workers", "3", "run-all"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().filter(|l| !l.starts_with("notice")).map(str::to_owned).collect();
    assert_eq!(lines.len(), 4, "{lines:?}");
    for (line, stage) in lines.iter().zip(["synth", "detect", "analyze", "evaluate"]) {
        assert!(line.starts_with(stage), "{line}");
    }
    for f in ["orders.csv", "truth.json", "hubs.csv", "labeled_hubs.csv", "moves.csv", "users.csv", "analysis_summary.json", "eval_report.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert!(!dir.path().join("run").exists());
}

//! File-based stages: `synth`, `detect`, `analyze`, `evaluate` and `run-all`.
//!
//! Every stage reads and writes plain files under `out_dir` and runs inside
//! its own rayon pool sized by `workers`. Outputs never depend on the pool
//! size.

pub mod analyze;
pub mod detect;
pub mod records;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calendar::HolidayCalendar;
use crate::error::{Error, Result};
use crate::hubprofile::ClassifierConfig;
use crate::moves::{MoveConfig, MoveKind};
use crate::orders::{load_orders, write_orders};
use crate::synthcity::city::{CENSUS_FILE, RINGS_FILE, SUBDISTRICTS_FILE, TRANSACTIONS_FILE};
use crate::synthcity::{evaluate, generate, DetectedHub, DetectedMove, Detection, EvalConfig, EvalReport, GroundTruth, Metric, ScenarioConfig};
use crate::wkms::KernelConfig;

pub use analyze::{analyze, AnalysisInputs, AnalysisSummary, AnalyticsConfig};
pub use detect::{detect, DetectParams, DetectReport, Detected};
use records::*;

pub const ORDERS_FILE: &str = "orders.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const HOLIDAYS_FILE: &str = "holidays.json";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";

/// Everything a pipeline run needs. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Required by `synth` and `run-all`.
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub moves: MoveConfig,
    #[serde(default)]
    pub evaluation: EvalConfig,
    #[serde(default)]
    pub analytics: AnalyticsConfig,
    /// Holiday calendar JSON. Defaults to `out_dir/holidays.json` when that
    /// file exists, else the scenario's calendar, else weekends only.
    #[serde(default)]
    pub holidays: Option<PathBuf>,
    /// Order CSV for `detect`. Defaults to `out_dir/orders.csv`.
    #[serde(default)]
    pub orders: Option<PathBuf>,
    /// Ground truth for `evaluate`. Defaults to `out_dir/truth.json`.
    #[serde(default)]
    pub truth: Option<PathBuf>,
    #[serde(default = "default_min_orders")]
    pub min_orders: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Defaults to the number of available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Overrides `scenario.seed` and `classifier.seed` when set.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_min_orders() -> usize {
    10
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scenario: None,
            kernel: KernelConfig::default(),
            classifier: ClassifierConfig::default(),
            moves: MoveConfig::default(),
            evaluation: EvalConfig::default(),
            analytics: AnalyticsConfig::default(),
            holidays: None,
            orders: None,
            truth: None,
            min_orders: default_min_orders(),
            out_dir: default_out_dir(),
            workers: None,
            seed: None,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("pipeline config: {e}")))
    }

    /// Reads a config file and resolves its relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        for p in [&mut self.holidays, &mut self.orders, &mut self.truth].into_iter().flatten() {
            fix(p);
        }
        for p in self.analytics.paths_mut().into_iter().flatten() {
            fix(p);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if let Some(dir) = &o.out_dir {
            self.out_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            self.classifier.seed = seed;
            if let Some(s) = &mut self.scenario {
                s.seed = seed;
            }
        }
    }

    /// Checks parameters and that every explicitly configured input file exists.
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.classifier.validate()?;
        self.moves.validate()?;
        self.analytics.validate()?;
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.min_orders == 0 {
            return Err(Error::Config("min_orders must be >= 1".into()));
        }
        if !(self.evaluation.match_radius_km.is_finite() && self.evaluation.match_radius_km > 0.0) {
            return Err(Error::Config(format!("evaluation.match_radius_km must be > 0, got {}", self.evaluation.match_radius_km)));
        }
        let named = [("holidays", &self.holidays), ("orders", &self.orders), ("truth", &self.truth)];
        for (name, path) in named.into_iter().chain(self.analytics.named_paths()) {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(Error::Config(format!("{name}: file not found: {}", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }

    fn scenario(&self) -> Result<&ScenarioConfig> {
        self.scenario.as_ref().ok_or_else(|| Error::Config("missing field `scenario`".into()))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn configured_or_default(&self, configured: &Option<PathBuf>, default_name: &str) -> PathBuf {
        configured.clone().unwrap_or_else(|| self.out(default_name))
    }

    /// An explicitly configured path, else the default file in `out_dir` if present.
    fn optional_input(&self, configured: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
        configured.clone().or_else(|| Some(self.out(default_name)).filter(|p| p.is_file()))
    }

    pub fn calendar(&self) -> Result<HolidayCalendar> {
        if let Some(p) = self.optional_input(&self.holidays, HOLIDAYS_FILE) {
            return HolidayCalendar::load(&p);
        }
        Ok(self.scenario.as_ref().map(ScenarioConfig::calendar).unwrap_or_default())
    }

    fn ensure_out_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new().num_threads(self.workers()).build().map_err(|e| Error::Internal(format!("worker pool: {e}")))
    }
}

/// Runs `f` as stage `name` inside the configured worker pool.
fn stage<T: Send>(cfg: &PipelineConfig, name: &'static str, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = cfg.pool()?;
    pool.install(f).map_err(|e| Error::in_stage(name, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// One line per finished stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary(pub String);

impl std::fmt::Display for StageSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Generates a scenario and writes orders, truth, holidays and city context files.
pub fn run_synth(cfg: &PipelineConfig) -> Result<StageSummary> {
    let scenario_cfg = cfg.scenario()?.clone();
    cfg.ensure_out_dir()?;
    stage(cfg, "synth", || {
        let s = generate(&scenario_cfg)?;
        write_orders(&cfg.out(ORDERS_FILE), &s.log)?;
        s.truth.save(&cfg.out(TRUTH_FILE))?;
        write_json(&cfg.out(HOLIDAYS_FILE), &scenario_cfg.calendar())?;
        if let Some(city) = &s.city {
            city.save(&cfg.out_dir)?;
        }
        let moves = s.truth.moves().count();
        Ok(StageSummary(format!(
            "synth: {} users, {} orders, {} restaurants, {} true moves -> {}",
            s.truth.users.len(),
            s.log.len(),
            s.truth.restaurants.len(),
            moves,
            cfg.out_dir.display()
        )))
    })
}

/// Detects hubs, labels, moves and user groups from the order log.
pub fn run_detect(cfg: &PipelineConfig) -> Result<StageSummary> {
    let orders_path = cfg.configured_or_default(&cfg.orders, ORDERS_FILE);
    cfg.ensure_out_dir()?;
    stage(cfg, "detect", || {
        let calendar = cfg.calendar()?;
        let (log, load) = load_orders(&orders_path)?;
        let params = DetectParams {
            kernel: &cfg.kernel,
            classifier: &cfg.classifier,
            moves: &cfg.moves,
            min_orders: cfg.min_orders,
            calendar: &calendar,
        };
        let d = detect(&log, &params)?;
        d.write(&cfg.out_dir)?;
        let r = &d.report;
        let mut line = format!(
            "detect: {} users in ({} rows rejected, {} duplicates), {} ad-hoc, {} unclusterable, {} hubs (H {} / W {} / O {}), {} housing + {} job moves",
            r.users_in,
            load.rejected.len(),
            load.duplicates,
            r.adhoc_users,
            r.users_unclusterable,
            r.hubs,
            r.home_hubs,
            r.work_hubs,
            r.other_hubs,
            r.housing_moves,
            r.job_moves
        );
        if let Some(n) = &r.clustering.notice {
            line.push_str(&format!("\nnotice: {n}"));
        }
        Ok(StageSummary(line))
    })
}

/// Computes the mobility reports from the detection outputs.
pub fn run_analyze(cfg: &PipelineConfig) -> Result<StageSummary> {
    let a = &cfg.analytics;
    let inputs = AnalysisInputs {
        dir: cfg.out_dir.clone(),
        subdistricts: cfg.optional_input(&a.subdistricts, SUBDISTRICTS_FILE),
        rings: cfg.optional_input(&a.rings, RINGS_FILE),
        census: cfg.optional_input(&a.census, CENSUS_FILE),
        transactions: cfg.optional_input(&a.transactions, TRANSACTIONS_FILE),
    };
    stage(cfg, "analyze", || {
        let summary = analyze(&inputs, a)?;
        let mut line = format!(
            "analyze: {} housing + {} job moves, {} reports written",
            summary.moves.get(&MoveKind::Housing).copied().unwrap_or(0),
            summary.moves.get(&MoveKind::Job).copied().unwrap_or(0),
            summary.reports.len()
        );
        for n in &summary.notices {
            line.push_str(&format!("\nnotice: {n}"));
        }
        Ok(StageSummary(line))
    })
}

/// Reads the detection outputs back as an evaluation input.
pub fn load_detection(dir: &Path) -> Result<Detection> {
    let users: Vec<UserRecord> = read_csv(&dir.join(USERS_FILE))?;
    let hubs: Vec<LabeledHubRecord> = read_csv(&dir.join(LABELED_HUBS_FILE))?;
    let moves: Vec<MoveRecord> = read_csv(&dir.join(MOVES_FILE))?;
    let mut det = Detection { users: users.into_iter().map(|u| u.user_id).collect(), ..Default::default() };
    for h in hubs {
        det.hubs.push(DetectedHub { center: h.center()?, user_id: h.user_id, hub_id: h.hub_id, label: h.label });
    }
    for m in moves {
        det.moves.push(DetectedMove { from: m.from()?, to: m.to()?, user_id: m.user_id, kind: m.kind, month: m.move_month });
    }
    Ok(det)
}

/// Scores the detection outputs against the ground truth.
pub fn run_evaluate(cfg: &PipelineConfig) -> Result<(StageSummary, EvalReport)> {
    let truth_path = cfg.configured_or_default(&cfg.truth, TRUTH_FILE);
    stage(cfg, "evaluate", || {
        let truth = GroundTruth::load(&truth_path)?;
        let det = load_detection(&cfg.out_dir)?;
        let report = evaluate(&det, &truth, &cfg.evaluation)?;
        write_json(&cfg.out(EVAL_REPORT_FILE), &report)?;
        let fmt = |m: Metric| match m {
            Metric::Value(v) => format!("{v:.3}"),
            Metric::Undefined(u) => format!("{u:?}"),
        };
        let mut line = format!("evaluate (radius {} km, slack {} month):", report.match_radius_km, report.month_slack);
        for kind in MoveKind::ALL {
            line.push_str(&format!(" {kind} precision {} recall {};", fmt(report.precision(kind)), fmt(report.recall(kind))));
        }
        line.push_str(&format!(" label accuracy {}", fmt(report.label_accuracy)));
        if let Some(s) = &report.hub_center_error_km {
            line.push_str(&format!("; median hub center error {:.3} km", s.median));
        }
        Ok((StageSummary(line), report))
    })
}

/// synth, detect, analyze and evaluate in sequence.
pub fn run_all(cfg: &PipelineConfig) -> Result<Vec<StageSummary>> {
    Ok(vec![run_synth(cfg)?, run_detect(cfg)?, run_analyze(cfg)?, run_evaluate(cfg)?.0])
}

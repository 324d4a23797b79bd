//! The analysis stage: monthly move series, subdistrict flows, work/home
//! ratios, group comparisons of commute, overtime and housing price,
//! post-pre bins, ring-region transitions and hotspot grids.
//!
//! Each report whose optional input is missing is skipped with a notice.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::analytics::flows::{by_calendar_month, flow_graph, monthly_move_counts, ratio_correlation, work_home_ratios, RatioCorrelation};
use crate::analytics::housing::{binned_post_pre_diff, load_transactions, region_transitions, PricedHousingMove, TransactionIndex};
use crate::analytics::kde::kde_hotspot_grid;
use crate::analytics::regions::{load_census, Region, RingModel, SubdistrictSet};
use crate::analytics::stats::{mean, median, welch_t, WelchTest};
use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::hubprofile::HubLabel;
use crate::moves::{commuting_distance, hub_in_effect, LabeledHub, Move, MoveKind};
use crate::orders::UserId;

use super::records::*;

pub const SUMMARY_FILE: &str = "analysis_summary.json";
pub const MONTHLY_FILE: &str = "monthly_moves.csv";
pub const CALENDAR_MONTH_FILE: &str = "calendar_month_moves.csv";
pub const FLOW_EDGES_FILE: &str = "flow_edges.csv";
pub const FLOW_NODES_FILE: &str = "flow_nodes.csv";
pub const RATIOS_FILE: &str = "work_home_ratios.csv";
pub const GROUPS_FILE: &str = "group_comparisons.csv";
pub const TESTS_FILE: &str = "welch_tests.csv";
pub const BINS_FILE: &str = "binned_diffs.csv";
pub const REGIONS_FILE: &str = "region_transitions.csv";
pub const KDE_HOME_FILE: &str = "kde_home.csv";
pub const KDE_WORK_FILE: &str = "kde_work.csv";

/// Optional context files and report parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsConfig {
    pub subdistricts: Option<PathBuf>,
    pub rings: Option<PathBuf>,
    pub transactions: Option<PathBuf>,
    pub census: Option<PathBuf>,
    pub price_radius_km: f64,
    pub kde_cell_km: f64,
    pub kde_bandwidth_km: f64,
    pub commute_bin_km: f64,
    pub overtime_bin: f64,
    pub price_bin: f64,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig {
            subdistricts: None,
            rings: None,
            transactions: None,
            census: None,
            price_radius_km: 3.0,
            kde_cell_km: 0.5,
            kde_bandwidth_km: 2.0,
            commute_bin_km: 5.0,
            overtime_bin: 0.1,
            price_bin: 20_000.0,
        }
    }
}

impl AnalyticsConfig {
    pub fn validate(&self) -> Result<()> {
        let params = [
            ("price_radius_km", self.price_radius_km),
            ("kde_cell_km", self.kde_cell_km),
            ("kde_bandwidth_km", self.kde_bandwidth_km),
            ("commute_bin_km", self.commute_bin_km),
            ("overtime_bin", self.overtime_bin),
            ("price_bin", self.price_bin),
        ];
        for (name, v) in params {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("analytics.{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub(crate) fn named_paths(&self) -> [(&'static str, &Option<PathBuf>); 4] {
        [
            ("analytics.subdistricts", &self.subdistricts),
            ("analytics.rings", &self.rings),
            ("analytics.transactions", &self.transactions),
            ("analytics.census", &self.census),
        ]
    }

    pub(crate) fn paths_mut(&mut self) -> [&mut Option<PathBuf>; 4] {
        [&mut self.subdistricts, &mut self.rings, &mut self.transactions, &mut self.census]
    }
}

/// Where the detection outputs live and which context files are available.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisInputs {
    pub dir: PathBuf,
    pub subdistricts: Option<PathBuf>,
    pub rings: Option<PathBuf>,
    pub census: Option<PathBuf>,
    pub transactions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleStats {
    pub group: String,
    pub phase: String,
    /// Values requested, including those without a commute, profile or price.
    pub attempted: usize,
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub matched_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub test: Option<WelchTest>,
    /// Why the test could not be computed.
    pub notice: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricComparison {
    pub samples: Vec<SampleStats>,
    pub tests: Vec<Comparison>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlowSummary {
    pub nodes: usize,
    pub edges: usize,
    pub spilled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSummary {
    pub subdistricts: usize,
    pub zero_home: usize,
    pub hubs_outside: usize,
    pub correlation: Option<RatioCorrelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRow {
    pub from_region: Region,
    pub to_region: Region,
    pub count: usize,
    pub mean_delta_price: f64,
    pub mean_delta_commute_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionSummary {
    pub priced_moves: usize,
    /// Housing moves lacking a price or commute at either end.
    pub unusable_moves: usize,
    pub spilled: usize,
    pub cells: Vec<TransitionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeSummary {
    pub points: usize,
    pub rows: usize,
    pub cols: usize,
    pub peak: Option<GeoPoint>,
    pub local_maxima: usize,
}

/// Every statistic the analysis produced, written as `analysis_summary.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub notices: Vec<String>,
    /// Report files written, in order.
    pub reports: Vec<String>,
    pub moves: BTreeMap<MoveKind, usize>,
    /// Calendar months (1-12) with the most moves, busiest first.
    pub top_calendar_months: BTreeMap<MoveKind, Vec<u32>>,
    pub flows: Option<BTreeMap<MoveKind, FlowSummary>>,
    pub work_home_ratios: Option<RatioSummary>,
    pub commute_km: MetricComparison,
    pub overtime_ratio: MetricComparison,
    pub housing_price: Option<MetricComparison>,
    pub region_transitions: Option<TransitionSummary>,
    pub kde: BTreeMap<HubLabel, KdeSummary>,
}

/// Detection outputs re-read from disk.
struct Loaded {
    hubs: BTreeMap<UserId, Vec<LabeledHub>>,
    hub_orders: BTreeMap<(UserId, u32), usize>,
    overtime: BTreeMap<(UserId, u32), f64>,
    moves: Vec<Move>,
    groups: BTreeMap<UserId, String>,
}

fn load(dir: &Path) -> Result<Loaded> {
    let mut hubs: BTreeMap<UserId, Vec<LabeledHub>> = BTreeMap::new();
    let mut hub_orders = BTreeMap::new();
    for r in read_csv::<LabeledHubRecord>(&dir.join(LABELED_HUBS_FILE))? {
        hub_orders.insert((r.user_id.clone(), r.hub_id), r.n_orders);
        hubs.entry(r.user_id.clone()).or_default().push(r.to_labeled_hub()?);
    }
    let overtime =
        read_profiles(&dir.join(HUB_PROFILES_FILE))?.into_iter().map(|p| ((p.user_id, p.hub_id), p.overtime_ratio)).collect();
    let groups = read_csv::<UserRecord>(&dir.join(USERS_FILE))?.into_iter().map(|u| (u.user_id, u.group)).collect();
    let mut moves = Vec::new();
    for r in read_csv::<MoveRecord>(&dir.join(MOVES_FILE))? {
        let (from, to) = (r.from()?, r.to()?);
        let user_hubs = hubs.get(&r.user_id).map(Vec::as_slice).unwrap_or_default();
        // moves.csv carries centers only; the hub is the same-label hub with that exact center
        let find = |p: GeoPoint| user_hubs.iter().find(|h| h.label == r.kind.label() && h.hub.center == p);
        let (Some(fh), Some(th)) = (find(from), find(to)) else {
            return Err(Error::Data(format!("{}: move of user {} does not match its labeled hubs", MOVES_FILE, r.user_id.0)));
        };
        moves.push(Move {
            user_id: r.user_id.clone(),
            kind: r.kind,
            from_hub: fh.hub.hub_id,
            to_hub: th.hub.hub_id,
            from_center: from,
            to_center: to,
            move_month: r.move_month,
            move_date: th.hub.first_order.date(),
            displacement_km: r.displacement_km,
            pre_commute_km: r.pre_commute_km,
            post_commute_km: r.post_commute_km,
        });
    }
    Ok(Loaded { hubs, hub_orders, overtime, moves, groups })
}

struct Report<'a> {
    dir: &'a Path,
    summary: AnalysisSummary,
}

impl Report<'_> {
    fn write(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(header).map_err(|e| Error::csv(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.summary.reports.push(name.to_string());
        Ok(())
    }

    /// Records a notice and removes a stale copy of the skipped report.
    fn skip(&mut self, names: &[&str], notice: String) -> Result<()> {
        for name in names {
            let path = self.dir.join(name);
            if path.exists() {
                std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
        }
        self.summary.notices.push(notice);
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// The hub of `label` with the most orders, lowest id first on ties.
fn main_hub<'a>(d: &'a Loaded, user: &UserId, label: HubLabel) -> Option<&'a LabeledHub> {
    let hubs = d.hubs.get(user)?;
    hubs.iter()
        .filter(|h| h.label == label)
        .max_by(|a, b| {
            let n = |h: &LabeledHub| d.hub_orders.get(&(user.clone(), h.hub.hub_id)).copied().unwrap_or(0);
            n(a).cmp(&n(b)).then(b.hub.hub_id.cmp(&a.hub.hub_id))
        })
}

fn midpoint(h: &LabeledHub) -> NaiveDate {
    let (a, b) = (h.hub.first_order.date(), h.hub.last_order.date());
    a + Duration::days((b - a).num_days() / 2)
}

fn pre_date(m: &Move) -> NaiveDate {
    m.move_date - Duration::days(1)
}

/// Pre- and post-move values of one metric; `None` where it is unavailable.
type PrePost = (Option<f64>, Option<f64>);

/// A value per stayer and a pre/post pair per move, for one metric.
struct Collected {
    stayer: Vec<Option<f64>>,
    pairs: BTreeMap<MoveKind, Vec<PrePost>>,
}

impl Collected {
    fn gather(d: &Loaded, stayer: impl Fn(&UserId) -> Option<f64>, mover: impl Fn(&Move) -> PrePost) -> Self {
        let stayer = d.groups.iter().filter(|(_, g)| g.as_str() == "stayer").map(|(u, _)| stayer(u)).collect();
        let mut pairs: BTreeMap<MoveKind, Vec<_>> = MoveKind::ALL.iter().map(|&k| (k, Vec::new())).collect();
        for m in &d.moves {
            pairs.entry(m.kind).or_default().push(mover(m));
        }
        Collected { stayer, pairs }
    }

    fn complete_pairs(&self, kind: MoveKind) -> Vec<(f64, f64)> {
        self.pairs[&kind].iter().filter_map(|&(a, b)| Some((a?, b?))).collect()
    }

    fn compare(&self) -> MetricComparison {
        let stats = |group: &str, phase: &str, vals: &[Option<f64>]| {
            let xs: Vec<f64> = vals.iter().flatten().copied().collect();
            let s = SampleStats {
                group: group.into(),
                phase: phase.into(),
                attempted: vals.len(),
                count: xs.len(),
                mean: mean(&xs),
                median: median(&xs),
                matched_rate: (!vals.is_empty()).then(|| xs.len() as f64 / vals.len() as f64),
            };
            (s, xs)
        };
        let mut out = MetricComparison::default();
        let (s, stayer) = stats("stayer", "all", &self.stayer);
        out.samples.push(s);
        for kind in MoveKind::ALL {
            let group = match kind {
                MoveKind::Job => "job_hopper",
                MoveKind::Housing => "home_mover",
            };
            let pre: Vec<Option<f64>> = self.pairs[&kind].iter().map(|p| p.0).collect();
            let post: Vec<Option<f64>> = self.pairs[&kind].iter().map(|p| p.1).collect();
            let (s, pre) = stats(group, "pre", &pre);
            out.samples.push(s);
            let (s, post) = stats(group, "post", &post);
            out.samples.push(s);
            for (a, xa, b, xb) in [("pre", &pre, "stayer", &stayer), ("post", &post, "stayer", &stayer), ("post", &post, "pre", &pre)] {
                let name = |phase: &str| if phase == "stayer" { "stayer".to_string() } else { format!("{group}_{phase}") };
                let (test, notice) = match welch_t(xa, xb) {
                    Ok(t) => (Some(t), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                out.tests.push(Comparison { a: name(a), b: name(b), test, notice });
            }
        }
        out
    }
}

fn comparison_rows(metric: &str, c: &MetricComparison) -> Vec<Vec<String>> {
    c.samples
        .iter()
        .map(|s| {
            vec![
                metric.into(),
                s.group.clone(),
                s.phase.clone(),
                s.attempted.to_string(),
                s.count.to_string(),
                opt(s.mean),
                opt(s.median),
                opt(s.matched_rate),
            ]
        })
        .collect()
}

fn test_rows(metric: &str, c: &MetricComparison) -> Vec<Vec<String>> {
    c.tests
        .iter()
        .filter_map(|t| {
            let w = t.test?;
            Some(vec![metric.into(), t.a.clone(), t.b.clone(), w.t.to_string(), w.dof.to_string(), w.p_two_sided.to_string()])
        })
        .collect()
}

fn bin_rows(metric: &str, c: &Collected, width: f64) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for kind in MoveKind::ALL {
        for b in binned_post_pre_diff(&c.complete_pairs(kind), width)?.values() {
            rows.push(vec![
                metric.into(),
                kind.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
                b.count.to_string(),
                b.mean_diff.to_string(),
            ]);
        }
    }
    Ok(rows)
}

/// Busiest calendar months, ties broken by month number.
fn top_months(counts: &[usize; 12], n: usize) -> Vec<u32> {
    let mut idx: Vec<u32> = (1..=12).collect();
    idx.sort_by(|&a, &b| counts[b as usize - 1].cmp(&counts[a as usize - 1]).then(a.cmp(&b)));
    idx.into_iter().filter(|&m| counts[m as usize - 1] > 0).take(n).collect()
}

/// Runs every report whose inputs are available and writes the summary.
pub fn analyze(inputs: &AnalysisInputs, cfg: &AnalyticsConfig) -> Result<AnalysisSummary> {
    cfg.validate()?;
    let d = load(&inputs.dir)?;
    let mut rep = Report { dir: &inputs.dir, summary: AnalysisSummary::default() };

    // monthly series over the span of hub activity
    let all_hubs = || d.hubs.values().flatten();
    let span = all_hubs()
        .map(|h| YearMonth::of(h.hub.first_order.date()))
        .min()
        .zip(all_hubs().map(|h| YearMonth::of(h.hub.last_order.date())).max());
    let series = monthly_move_counts(&d.moves, span);
    let months: Vec<YearMonth> = series.values().flat_map(|s| s.keys().copied()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let count = |k: MoveKind, m: &YearMonth| series.get(&k).and_then(|s| s.get(m)).copied().unwrap_or(0).to_string();
    let rows = months.iter().map(|m| vec![m.to_string(), count(MoveKind::Housing, m), count(MoveKind::Job, m)]).collect();
    rep.write(MONTHLY_FILE, &["month", "housing", "job"], rows)?;
    let by_cal: BTreeMap<MoveKind, [usize; 12]> = series.iter().map(|(k, s)| (*k, by_calendar_month(s))).collect();
    let rows = (0..12).map(|i| vec![(i + 1).to_string(), by_cal[&MoveKind::Housing][i].to_string(), by_cal[&MoveKind::Job][i].to_string()]).collect();
    rep.write(CALENDAR_MONTH_FILE, &["month", "housing", "job"], rows)?;
    for (k, counts) in &by_cal {
        rep.summary.moves.insert(*k, counts.iter().sum());
        rep.summary.top_calendar_months.insert(*k, top_months(counts, 3));
    }

    // subdistrict flows and work/home ratios
    match &inputs.subdistricts {
        Some(path) => {
            let set = SubdistrictSet::load(path)?;
            let mut edges = Vec::new();
            let mut nodes = Vec::new();
            let mut flows = BTreeMap::new();
            for kind in MoveKind::ALL {
                let of_kind: Vec<Move> = d.moves.iter().filter(|m| m.kind == kind).cloned().collect();
                let g = flow_graph(&of_kind, &set);
                for ((from, to), n) in &g.edges {
                    edges.push(vec![kind.to_string(), from.0.clone(), to.0.clone(), n.to_string()]);
                }
                for (id, s) in &g.nodes {
                    nodes.push(vec![kind.to_string(), id.0.clone(), s.moves_in.to_string(), s.moves_out.to_string(), s.in_minus_out().to_string()]);
                }
                flows.insert(kind, FlowSummary { nodes: g.nodes.len(), edges: g.edges.len(), spilled: g.spilled });
            }
            rep.write(FLOW_EDGES_FILE, &["kind", "from_subdistrict", "to_subdistrict", "count"], edges)?;
            rep.write(FLOW_NODES_FILE, &["kind", "subdistrict_id", "moves_in", "moves_out", "in_minus_out"], nodes)?;
            rep.summary.flows = Some(flows);

            let centers: Vec<(GeoPoint, HubLabel)> = all_hubs().map(|h| (h.hub.center, h.label)).collect();
            let ratios = work_home_ratios(&centers, &set);
            let rows = ratios
                .ratios
                .iter()
                .map(|(id, r)| vec![id.0.clone(), r.work_hubs.to_string(), r.home_hubs.to_string(), r.ratio.to_string()])
                .collect();
            rep.write(RATIOS_FILE, &["subdistrict_id", "work_hubs", "home_hubs", "ratio"], rows)?;
            let correlation = match &inputs.census {
                Some(p) => match ratio_correlation(&ratios, &load_census(p)?) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        rep.summary.notices.push(format!("work/home ratio correlation undefined: {e}"));
                        None
                    }
                },
                None => {
                    rep.summary.notices.push("no census file: work/home ratio correlation skipped".into());
                    None
                }
            };
            rep.summary.work_home_ratios = Some(RatioSummary {
                subdistricts: ratios.ratios.len(),
                zero_home: ratios.zero_home.len(),
                hubs_outside: ratios.hubs_outside,
                correlation,
            });
        }
        None => rep.skip(&[FLOW_EDGES_FILE, FLOW_NODES_FILE, RATIOS_FILE], "no subdistricts file: flow graph and work/home ratios skipped".into())?,
    }

    // commuting distance (pre/post values come from the detection stage)
    let commute = Collected::gather(
        &d,
        |u| {
            let h = main_hub(&d, u, HubLabel::Home)?;
            commuting_distance(&d.hubs[u], midpoint(h)).ok()
        },
        |m| (m.pre_commute_km, m.post_commute_km),
    );

    // overtime ratio of the Work hub in effect around each move
    let overtime_of = |u: &UserId, hub: u32| d.overtime.get(&(u.clone(), hub)).copied();
    let overtime = Collected::gather(
        &d,
        |u| main_hub(&d, u, HubLabel::Work).and_then(|h| overtime_of(u, h.hub.hub_id)),
        |m| match m.kind {
            MoveKind::Job => (overtime_of(&m.user_id, m.from_hub), overtime_of(&m.user_id, m.to_hub)),
            MoveKind::Housing => {
                let at = |date| hub_in_effect(&d.hubs[&m.user_id], HubLabel::Work, date).ok().and_then(|h| overtime_of(&m.user_id, h.hub_id));
                (at(pre_date(m)), at(m.move_date))
            }
        },
    );

    let mut groups = comparison_rows("commute_km", &{
        rep.summary.commute_km = commute.compare();
        rep.summary.commute_km.clone()
    });
    rep.summary.overtime_ratio = overtime.compare();
    groups.extend(comparison_rows("overtime_ratio", &rep.summary.overtime_ratio));
    let mut tests = test_rows("commute_km", &rep.summary.commute_km);
    tests.extend(test_rows("overtime_ratio", &rep.summary.overtime_ratio));
    let mut bins = bin_rows("commute_km", &commute, cfg.commute_bin_km)?;
    bins.extend(bin_rows("overtime_ratio", &overtime, cfg.overtime_bin)?);

    // housing price of the Home hub in effect
    let price = match &inputs.transactions {
        Some(path) => {
            let index = TransactionIndex::new(&load_transactions(path)?);
            let at = |p: GeoPoint, date: NaiveDate| index.match_price(p, YearMonth::of(date), cfg.price_radius_km);
            let price = Collected::gather(
                &d,
                |u| main_hub(&d, u, HubLabel::Home).and_then(|h| at(h.hub.center, midpoint(h))),
                |m| match m.kind {
                    MoveKind::Housing => (at(m.from_center, pre_date(m)), at(m.to_center, m.move_date)),
                    MoveKind::Job => {
                        let home = |date| hub_in_effect(&d.hubs[&m.user_id], HubLabel::Home, date).ok().and_then(|h| at(h.center, date));
                        (home(pre_date(m)), home(m.move_date))
                    }
                },
            );
            let c = price.compare();
            groups.extend(comparison_rows("housing_price", &c));
            tests.extend(test_rows("housing_price", &c));
            bins.extend(bin_rows("housing_price", &price, cfg.price_bin)?);
            rep.summary.housing_price = Some(c);
            Some(price)
        }
        None => {
            rep.summary.notices.push("no transactions file: housing price reports skipped".into());
            None
        }
    };
    rep.write(GROUPS_FILE, &["metric", "group", "phase", "attempted", "count", "mean", "median", "matched_rate"], groups)?;
    rep.write(TESTS_FILE, &["metric", "sample_a", "sample_b", "t", "dof", "p_two_sided"], tests)?;
    rep.write(BINS_FILE, &["metric", "kind", "lower", "upper", "count", "mean_diff"], bins)?;

    // ring-region transitions of priced housing moves
    match (&price, &inputs.rings) {
        (Some(price), Some(path)) => {
            let rings = RingModel::load(path)?;
            let housing: Vec<&Move> = d.moves.iter().filter(|m| m.kind == MoveKind::Housing).collect();
            let priced: Vec<PricedHousingMove> = housing
                .iter()
                .zip(&price.pairs[&MoveKind::Housing])
                .filter_map(|(m, &(pre, post))| {
                    Some(PricedHousingMove {
                        from: m.from_center,
                        to: m.to_center,
                        pre_price: pre?,
                        post_price: post?,
                        pre_commute_km: m.pre_commute_km?,
                        post_commute_km: m.post_commute_km?,
                    })
                })
                .collect();
            let t = region_transitions(&priced, &rings);
            let cells: Vec<TransitionRow> = t
                .cells
                .iter()
                .map(|(&(from_region, to_region), c)| TransitionRow {
                    from_region,
                    to_region,
                    count: c.count,
                    mean_delta_price: c.mean_delta_price,
                    mean_delta_commute_km: c.mean_delta_commute_km,
                })
                .collect();
            let rows = cells
                .iter()
                .map(|c| {
                    vec![
                        c.from_region.as_str().into(),
                        c.to_region.as_str().into(),
                        c.count.to_string(),
                        c.mean_delta_price.to_string(),
                        c.mean_delta_commute_km.to_string(),
                    ]
                })
                .collect();
            rep.write(REGIONS_FILE, &["from_region", "to_region", "count", "mean_delta_price", "mean_delta_commute_km"], rows)?;
            rep.summary.region_transitions =
                Some(TransitionSummary { priced_moves: priced.len(), unusable_moves: housing.len() - priced.len(), spilled: t.spilled, cells });
        }
        (None, _) => rep.skip(&[REGIONS_FILE], "no transactions file: region transitions skipped".into())?,
        (_, None) => rep.skip(&[REGIONS_FILE], "no rings file: region transitions skipped".into())?,
    }

    // hotspot grids of Home and Work hub centers
    for (label, name) in [(HubLabel::Home, KDE_HOME_FILE), (HubLabel::Work, KDE_WORK_FILE)] {
        let points: Vec<GeoPoint> = all_hubs().filter(|h| h.label == label).map(|h| h.hub.center).collect();
        if points.is_empty() {
            rep.skip(&[name], format!("no {label} hubs: {name} skipped"))?;
            continue;
        }
        let grid = kde_hotspot_grid(&points, cfg.kde_cell_km, cfg.kde_bandwidth_km)?;
        let rows = grid.cells.iter().map(|c| vec![c.lat.to_string(), c.lon.to_string(), c.density.to_string()]).collect();
        rep.write(name, &["lat", "lon", "density"], rows)?;
        let peak = grid.argmax().map(|c| GeoPoint::new(c.lat, c.lon)).transpose()?;
        rep.summary.kde.insert(
            label,
            KdeSummary { points: points.len(), rows: grid.rows, cols: grid.cols, peak, local_maxima: grid.local_maxima().len() },
        );
    }

    rep.summary.reports.push(SUMMARY_FILE.into());
    let path = inputs.dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&rep.summary).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))?;
    Ok(rep.summary)
}

//! Monthly move series, subdistrict flow graphs and work-home ratios.

use std::collections::BTreeMap;

use serde::Serialize;

use super::regions::{point_to_subdistrict, Placement, Reference, SubdistrictId, SubdistrictSet};
use super::stats::pearson_r;
use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::hubprofile::HubLabel;
use crate::moves::{Move, MoveKind};

pub type MonthlySeries = BTreeMap<YearMonth, usize>;

/// Per-kind move counts by month. Every month in `span` (inclusive) is
/// present, zero-filled; months outside it appear only if they hold moves.
pub fn monthly_move_counts(moves: &[Move], span: Option<(YearMonth, YearMonth)>) -> BTreeMap<MoveKind, MonthlySeries> {
    let mut out: BTreeMap<MoveKind, MonthlySeries> = BTreeMap::new();
    for kind in MoveKind::ALL {
        let series = out.entry(kind).or_default();
        if let Some((from, to)) = span {
            for m in YearMonth::range_inclusive(from, to) {
                series.insert(m, 0);
            }
        }
    }
    for m in moves {
        *out.entry(m.kind).or_default().entry(m.move_month).or_insert(0) += 1;
    }
    out
}

/// Sums a monthly series by calendar month (1..=12).
pub fn by_calendar_month(series: &MonthlySeries) -> [usize; 12] {
    let mut out = [0usize; 12];
    for (m, c) in series {
        out[m.month as usize - 1] += c;
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NodeStats {
    pub moves_in: usize,
    pub moves_out: usize,
}

impl NodeStats {
    pub fn total_moves(&self) -> usize {
        self.moves_in + self.moves_out
    }

    pub fn in_minus_out(&self) -> i64 {
        self.moves_in as i64 - self.moves_out as i64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FlowGraph {
    pub nodes: BTreeMap<SubdistrictId, NodeStats>,
    pub edges: BTreeMap<(SubdistrictId, SubdistrictId), usize>,
    /// Moves with an endpoint outside every subdistrict.
    pub spilled: usize,
}

pub fn flow_graph(moves: &[Move], s: &SubdistrictSet) -> FlowGraph {
    let mut g = FlowGraph::default();
    for m in moves {
        let (Placement::Inside(from), Placement::Inside(to)) = (point_to_subdistrict(m.from_center, s), point_to_subdistrict(m.to_center, s))
        else {
            g.spilled += 1;
            continue;
        };
        g.nodes.entry(from.clone()).or_default().moves_out += 1;
        g.nodes.entry(to.clone()).or_default().moves_in += 1;
        *g.edges.entry((from, to)).or_insert(0) += 1;
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub work_hubs: usize,
    pub home_hubs: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WorkHomeRatios {
    pub ratios: BTreeMap<SubdistrictId, RatioRow>,
    /// Subdistricts with Work hubs but no Home hub.
    pub zero_home: Vec<SubdistrictId>,
    pub hubs_outside: usize,
}

/// W/H hub count ratio per subdistrict.
pub fn work_home_ratios(labeled_centers: &[(GeoPoint, HubLabel)], s: &SubdistrictSet) -> WorkHomeRatios {
    let mut counts: BTreeMap<SubdistrictId, (usize, usize)> = BTreeMap::new();
    let mut outside = 0;
    for &(p, label) in labeled_centers {
        if label == HubLabel::Other {
            continue;
        }
        match point_to_subdistrict(p, s) {
            Placement::Inside(id) => {
                let c = counts.entry(id).or_default();
                if label == HubLabel::Work {
                    c.0 += 1;
                } else {
                    c.1 += 1;
                }
            }
            Placement::Outside => outside += 1,
        }
    }
    let mut out = WorkHomeRatios { hubs_outside: outside, ..Default::default() };
    for (id, (w, h)) in counts {
        if h == 0 {
            out.zero_home.push(id);
        } else {
            out.ratios.insert(id, RatioRow { work_hubs: w, home_hubs: h, ratio: w as f64 / h as f64 });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioCorrelation {
    pub pearson_r: f64,
    pub subdistricts: usize,
}

/// Pearson r between detected ratios and reference employment/population
/// over subdistricts present in both (reference population > 0).
pub fn ratio_correlation(ratios: &WorkHomeRatios, reference: &BTreeMap<SubdistrictId, Reference>) -> Result<RatioCorrelation> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = ratios
        .ratios
        .iter()
        .filter_map(|(id, row)| reference.get(id).filter(|r| r.population > 0.0).map(|r| (row.ratio, r.employment / r.population)))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::Degenerate(format!("only {} subdistricts in common with the reference series", xs.len())));
    }
    Ok(RatioCorrelation { pearson_r: pearson_r(&xs, &ys)?, subdistricts: xs.len() })
}

pub fn work_home_ratio_correlation(labeled_centers: &[(GeoPoint, HubLabel)], s: &SubdistrictSet) -> (WorkHomeRatios, Result<RatioCorrelation>) {
    let ratios = work_home_ratios(labeled_centers, s);
    let corr = match &s.reference_series {
        Some(reference) => ratio_correlation(&ratios, reference),
        None => Err(Error::Config("no reference series".into())),
    };
    (ratios, corr)
}

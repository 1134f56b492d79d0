use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coflow::CoflowId;

/// Deadline slack for float noise when checking deadlines.
const DEADLINE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoflowOutcome {
    pub id: CoflowId,
    pub job: u64,
    pub arrival: f64,
    /// `None` if rejected or never finished.
    pub finish: Option<f64>,
    /// Relative deadline.
    pub deadline: Option<f64>,
    pub rejected: bool,
    pub bytes: u64,
}

impl CoflowOutcome {
    pub fn cct(&self) -> Option<f64> {
        self.finish.map(|f| f - self.arrival)
    }

    pub fn met_deadline(&self) -> Option<bool> {
        let d = self.deadline?;
        Some(match self.cct() {
            Some(c) => c <= d * (1.0 + DEADLINE_TOL) + 1e-9,
            None => false,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub id: u64,
    pub arrival: f64,
    /// Finish of the last non-rejected coflow; `None` if any never finished
    /// or all were rejected.
    pub finish: Option<f64>,
}

/// Raw record of one simulation run, reduced by [`compute_metrics`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub coflows: Vec<CoflowOutcome>,
    pub jobs: Vec<JobOutcome>,
    /// Seconds between the first arrival and the last completion.
    pub span: f64,
    /// Integral over time of (total used rate / total capacity).
    pub util_integral: f64,
    /// Per link, integral over time of used rate / capacity.
    pub link_util_integral: Vec<f64>,
    pub lp_per_round: Vec<u64>,
    pub capacity_violations: usize,
    pub max_overload: f64,
    pub conservation_violations: usize,
    pub max_conservation_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub coflows: usize,
    pub finished: usize,
    pub rejected: usize,
    pub unfinished: usize,
    pub cct: BTreeMap<CoflowId, f64>,
    pub jct: BTreeMap<u64, f64>,
    pub avg_cct: f64,
    pub p95_cct: f64,
    pub avg_jct: f64,
    pub p95_jct: f64,
    /// Time average of used over available WAN capacity.
    pub utilization: f64,
    pub link_utilization: Vec<f64>,
    /// Share of deadline coflows (rejected included) that met their deadline.
    pub deadline_met: Option<f64>,
    /// Share of admitted deadline coflows that met their deadline.
    pub admitted_met: Option<f64>,
    /// Share of deadline coflows that were rejected.
    pub rejected_fraction: Option<f64>,
    pub lp_per_round: Vec<u64>,
    pub capacity_violations: usize,
    pub max_overload: f64,
    pub conservation_violations: usize,
    pub max_conservation_error: f64,
}

impl Metrics {
    pub fn mean_lp_per_round(&self) -> f64 {
        mean(&self.lp_per_round.iter().map(|&x| x as f64).collect::<Vec<_>>())
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Nearest-rank percentile.
fn percentile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

fn fraction(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(log: &RunLog) -> Metrics {
    let cct: BTreeMap<CoflowId, f64> = log.coflows.iter().filter_map(|c| c.cct().map(|x| (c.id, x))).collect();
    let jct: BTreeMap<u64, f64> = log.jobs.iter().filter_map(|j| j.finish.map(|f| (j.id, f - j.arrival))).collect();
    let ccts: Vec<f64> = cct.values().copied().collect();
    let jcts: Vec<f64> = jct.values().copied().collect();
    let rejected = log.coflows.iter().filter(|c| c.rejected).count();
    let with_deadline: Vec<&CoflowOutcome> = log.coflows.iter().filter(|c| c.deadline.is_some()).collect();
    let met = with_deadline.iter().filter(|c| c.met_deadline() == Some(true)).count();
    let admitted: Vec<&&CoflowOutcome> = with_deadline.iter().filter(|c| !c.rejected).collect();
    let admitted_met = admitted.iter().filter(|c| c.met_deadline() == Some(true)).count();
    let span = log.span;
    Metrics {
        coflows: log.coflows.len(),
        finished: ccts.len(),
        rejected,
        unfinished: log.coflows.len() - ccts.len() - rejected,
        avg_cct: mean(&ccts),
        p95_cct: percentile(&ccts, 95.0),
        avg_jct: mean(&jcts),
        p95_jct: percentile(&jcts, 95.0),
        cct,
        jct,
        utilization: if span > 0.0 { log.util_integral / span } else { 0.0 },
        link_utilization: log.link_util_integral.iter().map(|x| if span > 0.0 { x / span } else { 0.0 }).collect(),
        deadline_met: fraction(met, with_deadline.len()),
        admitted_met: fraction(admitted_met, admitted.len()),
        rejected_fraction: fraction(with_deadline.iter().filter(|c| c.rejected).count(), with_deadline.len()),
        lp_per_round: log.lp_per_round.clone(),
        capacity_violations: log.capacity_violations,
        max_overload: log.max_overload,
        conservation_violations: log.conservation_violations,
        max_conservation_error: log.max_conservation_error,
    }
}

/// One CSV row: a (policy, workload, seed) triple and its metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub policy: String,
    pub workload: String,
    pub seed: u64,
    pub coflows: usize,
    pub finished: usize,
    pub rejected: usize,
    pub avg_cct: String,
    pub p95_cct: String,
    pub avg_jct: String,
    pub p95_jct: String,
    pub utilization: String,
    pub deadline_met: String,
    pub admitted_met: String,
    pub lp_per_round: String,
    pub capacity_violations: usize,
    pub conservation_violations: usize,
}

impl MetricsRow {
    pub fn new(policy: &str, workload: &str, seed: u64, m: &Metrics) -> Self {
        let f = |x: f64| format!("{x:.6}");
        let o = |x: Option<f64>| x.map_or_else(String::new, f);
        MetricsRow {
            policy: policy.to_string(),
            workload: workload.to_string(),
            seed,
            coflows: m.coflows,
            finished: m.finished,
            rejected: m.rejected,
            avg_cct: f(m.avg_cct),
            p95_cct: f(m.p95_cct),
            avg_jct: f(m.avg_jct),
            p95_jct: f(m.p95_jct),
            utilization: f(m.utilization),
            deadline_met: o(m.deadline_met),
            admitted_met: o(m.admitted_met),
            lp_per_round: f(m.mean_lp_per_round()),
            capacity_violations: m.capacity_violations,
            conservation_violations: m.conservation_violations,
        }
    }
}

/// Renders rows as CSV with a header; floats use fixed six-decimal format.
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        // Header only.
        w.write_record([
            "policy", "workload", "seed", "coflows", "finished", "rejected", "avg_cct", "p95_cct", "avg_jct",
            "p95_jct", "utilization", "deadline_met", "admitted_met", "lp_per_round", "capacity_violations",
            "conservation_violations",
        ])
        .expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

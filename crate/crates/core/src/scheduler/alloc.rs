use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use log::debug;

use crate::coflow::{Coflow, CoflowId};
use crate::optimizer::{max_min_mcf, min_cct, Allocation, ArcMask, CctResult, Demand, Residual};
use crate::topology::{NodeId, WanGraph, WanPath};

use super::{Schedule, SchedulerConfig, SchedulerError};

/// Groups with less than this many bytes left are treated as done.
pub(crate) const VOLUME_EPS: f64 = 1e-6;

/// One coflow as handed to [`alloc_bandwidth`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoflowPlan {
    pub id: CoflowId,
    pub arrival: f64,
    /// Remaining volume per unfinished FlowGroup.
    pub demands: Vec<Demand>,
    /// Seconds left until the deadline.
    pub deadline: Option<f64>,
    /// Reserved rates used as-is instead of solving.
    pub pinned: Option<Allocation>,
}

impl CoflowPlan {
    /// Plan from a coflow's remaining volumes at time `now`.
    pub fn from_coflow(c: &Coflow, now: f64) -> Self {
        CoflowPlan {
            id: c.id,
            arrival: c.arrival,
            demands: remaining_demands(c),
            deadline: c.deadline.map(|d| c.arrival + d - now),
            pinned: None,
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.demands.iter().map(|d| (d.key.src, d.key.dst))
    }
}

pub(crate) fn remaining_demands(c: &Coflow) -> Vec<Demand> {
    c.groups
        .iter()
        .filter(|g| g.remaining > VOLUME_EPS)
        .map(|g| Demand { key: g.key, volume: g.remaining })
        .collect()
}

/// Memoized k-shortest paths per datacenter pair.
#[derive(Clone, Debug)]
pub struct PathCache {
    k: usize,
    paths: BTreeMap<(NodeId, NodeId), Vec<WanPath>>,
}

impl PathCache {
    pub fn new(k: usize) -> Self {
        PathCache { k, paths: BTreeMap::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn paths(&mut self, g: &WanGraph, src: NodeId, dst: NodeId) -> &[WanPath] {
        let k = self.k;
        self.paths.entry((src, dst)).or_insert_with(|| g.k_shortest_paths(src, dst, k))
    }

    /// Arc mask from the cached paths of each pair.
    pub fn mask(&mut self, g: &WanGraph, pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> ArcMask {
        let mut m = ArcMask::new();
        for (s, d) in pairs {
            if m.contains_pair((s, d)) {
                continue;
            }
            let arcs: BTreeSet<_> = self.paths(g, s, d).iter().flat_map(|p| p.links.iter().copied()).collect();
            m.insert((s, d), arcs);
        }
        m
    }

    /// Drops every cached path; needed after links go down or come back.
    pub fn clear(&mut self) {
        self.paths.clear();
    }
}

/// Completion time of a coflow alone on the (1 - alpha)-scaled empty graph.
pub fn standalone_gamma(
    demands: &[Demand],
    g: &WanGraph,
    cfg: &SchedulerConfig,
    mask: &ArcMask,
) -> Result<Option<f64>, SchedulerError> {
    if demands.is_empty() {
        return Ok(Some(0.0));
    }
    let res = Residual::from_graph(g).scaled(1.0 - cfg.alpha);
    Ok(min_cct(demands, g, &res, mask)?.gamma())
}

/// Allocates bandwidth to `plans` in the given priority order.
///
/// Capacity is scaled by (1 - alpha); each coflow in turn gets its minimum-CCT
/// allocation on what is left, deadline coflows slowed to finish at their
/// deadline. Coflows that cannot be served whole then share the leftover
/// capacity, alpha reserve included, by max-min fair MCF, and finally every
/// coflow's groups share whatever remains.
pub fn alloc_bandwidth(
    plans: &[CoflowPlan],
    g: &WanGraph,
    cfg: &SchedulerConfig,
) -> Result<Schedule, SchedulerError> {
    let mut paths = PathCache::new(cfg.k);
    let mask = paths.mask(g, plans.iter().flat_map(CoflowPlan::pairs));
    allocate(plans, g, cfg, &Residual::from_graph(g), &mask, 0.0)
}

pub(crate) fn allocate(
    plans: &[CoflowPlan],
    g: &WanGraph,
    cfg: &SchedulerConfig,
    base: &Residual,
    mask: &ArcMask,
    time: f64,
) -> Result<Schedule, SchedulerError> {
    let n = g.link_count();
    let caps = base.as_slice().to_vec();
    let mut sched = Schedule::empty(time);
    let mut residual = base.scaled(1.0 - cfg.alpha);
    let mut used = vec![0.0; n];

    for plan in plans {
        if plan.demands.is_empty() {
            continue;
        }
        sched.order.push(plan.id);
        let alloc = match &plan.pinned {
            Some(pin) => pin.clone(),
            None => match min_cct(&plan.demands, g, &residual, mask)? {
                CctResult::Infeasible => {
                    sched.failed.insert(plan.id);
                    continue;
                }
                CctResult::Feasible(mut a) => {
                    if let Some(d) = plan.deadline.filter(|&d| d > 0.0) {
                        // Slow down to finish at the deadline, never speed up.
                        let factor = a.gamma / d;
                        if factor < 1.0 {
                            a.scale(factor);
                        }
                    }
                    a
                }
            },
        };
        let usage = alloc.link_usage(n);
        residual.subtract(&usage, &caps);
        for (u, x) in used.iter_mut().zip(&usage) {
            *u += x;
        }
        sched.allocations.insert(plan.id, alloc);
    }

    let mut leftover = base.clone();
    leftover.subtract(&used, &caps);
    let failed: Vec<Demand> = plans
        .iter()
        .filter(|p| sched.failed.contains(&p.id))
        .flat_map(|p| p.demands.iter().copied())
        .collect();
    if !failed.is_empty() {
        let wc = max_min_mcf(&failed, g, &leftover, mask)?;
        leftover.subtract_groups(&wc, &caps);
        sched.work_conservation.extend(wc.into_iter().filter(|x| x.rate > 0.0));
    }
    let rest: Vec<Demand> = plans
        .iter()
        .filter(|p| !sched.failed.contains(&p.id))
        .flat_map(|p| p.demands.iter().copied())
        .collect();
    if !rest.is_empty() {
        let wc = max_min_mcf(&rest, g, &leftover, mask)?;
        sched.work_conservation.extend(wc.into_iter().filter(|x| x.rate > 0.0));
    }
    debug!(
        "allocated {} coflows at t={time}: {} whole, {} failed",
        sched.order.len(),
        sched.allocations.len(),
        sched.failed.len()
    );
    Ok(sched)
}

/// Orders by increasing standalone gamma; ties by arrival then id.
/// Unschedulable coflows (`None`) go last.
pub(crate) fn by_gamma(a: (Option<f64>, f64, CoflowId), b: (Option<f64>, f64, CoflowId)) -> Ordering {
    let ga = a.0.unwrap_or(f64::INFINITY);
    let gb = b.0.unwrap_or(f64::INFINITY);
    ga.total_cmp(&gb).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2))
}

/// Schedules a set of coflows all present at the same instant: shortest
/// standalone completion time first.
pub fn minimize_cct_offline(
    coflows: &[Coflow],
    g: &WanGraph,
    cfg: &SchedulerConfig,
) -> Result<Schedule, SchedulerError> {
    cfg.validate()?;
    let now = coflows.iter().map(|c| c.arrival).fold(0.0, f64::max);
    let mut paths = PathCache::new(cfg.k);
    let plans: Vec<CoflowPlan> = coflows.iter().map(|c| CoflowPlan::from_coflow(c, now)).collect();
    let mask = paths.mask(g, plans.iter().flat_map(CoflowPlan::pairs));
    let mut keyed = Vec::with_capacity(plans.len());
    for p in plans {
        let gamma = standalone_gamma(&p.demands, g, cfg, &mask)?;
        keyed.push((gamma, p));
    }
    keyed.sort_by(|a, b| by_gamma((a.0, a.1.arrival, a.1.id), (b.0, b.1.arrival, b.1.id)));
    let ordered: Vec<CoflowPlan> = keyed.into_iter().map(|x| x.1).collect();
    allocate(&ordered, g, cfg, &Residual::from_graph(g), &mask, now)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coflow::Flow;
    use crate::topology::{load_topology, BYTES_PER_GBPS};

    const GB: u64 = 1_000_000_000;

    fn mesh() -> WanGraph {
        load_topology(
            r#"{"nodes":["A","B","C"],"links":[
            {"src":"A","dst":"B","gbps":10,"bidirectional":true},
            {"src":"A","dst":"C","gbps":10,"bidirectional":true},
            {"src":"B","dst":"C","gbps":10,"bidirectional":true}]}"#,
        )
        .unwrap()
    }

    fn figure1() -> Vec<Coflow> {
        vec![
            Coflow::new(CoflowId(1), 0.0, None, vec![Flow::new(11, 0, 1, 5 * GB)]).unwrap(),
            Coflow::new(
                CoflowId(2),
                0.0,
                None,
                vec![Flow::new(21, 0, 1, 5 * GB), Flow::new(22, 2, 0, 25 * GB)],
            )
            .unwrap(),
        ]
    }

    fn cfg(alpha: f64, k: usize) -> SchedulerConfig {
        SchedulerConfig { alpha, k, ..Default::default() }
    }

    #[test]
    fn coflow_order_on_direct_paths() {
        let g = mesh();
        let plans: Vec<_> = figure1().iter().map(|c| CoflowPlan::from_coflow(c, 0.0)).collect();
        let s = alloc_bandwidth(&plans, &g, &cfg(0.0, 1)).unwrap();
        assert_eq!(s.order, vec![CoflowId(1), CoflowId(2)]);
        assert!((s.allocations[&CoflowId(1)].gamma - 4.0).abs() < 1e-9);
        assert!(s.failed.contains(&CoflowId(2)));
        // f22 runs alone on C->A at full rate; f21 waits for A->B.
        let f22 = s.group_rate(plans[1].demands[1].key);
        assert!((f22 - 10.0 * BYTES_PER_GBPS).abs() < 1e-3);
        assert!(s.group_rate(plans[1].demands[0].key) < 1e-3);
        assert!(s.max_overload(&g) < 1e-9);
    }

    #[test]
    fn reserve_feeds_preempted_coflow() {
        let g = load_topology(r#"{"nodes":["A","B"],"links":[{"src":"A","dst":"B","gbps":10}]}"#).unwrap();
        let big = Coflow::new(CoflowId(1), 0.0, None, vec![Flow::new(1, 0, 1, 100 * GB)]).unwrap();
        let small = Coflow::new(CoflowId(2), 0.0, None, vec![Flow::new(2, 0, 1, 200 * GB)]).unwrap();
        let plans = [CoflowPlan::from_coflow(&big, 0.0), CoflowPlan::from_coflow(&small, 0.0)];
        let s = alloc_bandwidth(&plans, &g, &cfg(0.1, 15)).unwrap();
        assert!(s.failed.contains(&CoflowId(2)));
        assert!((s.coflow_rate(CoflowId(2)) - 1.0 * BYTES_PER_GBPS).abs() < 1e-3);
        assert!((s.coflow_rate(CoflowId(1)) - 9.0 * BYTES_PER_GBPS).abs() < 1e-3);
    }

    #[test]
    fn offline_orders_by_gamma() {
        let g = mesh();
        let mut cs = figure1();
        cs.reverse();
        let s = minimize_cct_offline(&cs, &g, &cfg(0.0, 15)).unwrap();
        assert_eq!(s.order, vec![CoflowId(1), CoflowId(2)]);
    }

    #[test]
    fn identical_coflows_tie_break_by_id() {
        let g = mesh();
        let cs: Vec<_> = [7u64, 3, 5]
            .iter()
            .map(|&i| Coflow::new(CoflowId(i), 0.0, None, vec![Flow::new(i, 0, 1, GB)]).unwrap())
            .collect();
        let s = minimize_cct_offline(&cs, &g, &cfg(0.1, 15)).unwrap();
        assert_eq!(s.order, vec![CoflowId(3), CoflowId(5), CoflowId(7)]);
    }

    #[test]
    fn single_coflow_schedule_is_its_min_cct() {
        let g = mesh();
        let c = &figure1()[1];
        let c2 = cfg(0.1, 15);
        let s = minimize_cct_offline(std::slice::from_ref(c), &g, &c2).unwrap();
        let demands = remaining_demands(c);
        let mask = PathCache::new(15).mask(&g, demands.iter().map(|d| (d.key.src, d.key.dst)));
        let res = Residual::from_graph(&g).scaled(0.9);
        let direct = min_cct(&demands, &g, &res, &mask).unwrap().allocation().unwrap();
        assert!((s.allocations[&c.id].gamma - direct.gamma).abs() < 1e-9 * direct.gamma);
    }

    #[test]
    fn deadline_slows_allocation() {
        let g = load_topology(r#"{"nodes":["A","B"],"links":[{"src":"A","dst":"B","gbps":10}]}"#).unwrap();
        let c = Coflow::new(CoflowId(1), 0.0, Some(10.0), vec![Flow::new(1, 0, 1, 5 * GB)]).unwrap();
        let plan = CoflowPlan::from_coflow(&c, 0.0);
        let s = alloc_bandwidth(&[plan], &g, &cfg(0.0, 1)).unwrap();
        assert!((s.allocations[&c.id].gamma - 10.0).abs() < 1e-9);
    }

    #[test]
    fn empty_input_empty_schedule() {
        let g = mesh();
        let s = alloc_bandwidth(&[], &g, &cfg(0.1, 15)).unwrap();
        assert_eq!(s, Schedule::empty(0.0));
    }
}

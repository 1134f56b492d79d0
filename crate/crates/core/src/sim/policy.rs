use std::collections::{BTreeMap, BTreeSet};

use crate::coflow::{Coflow, CoflowId, GroupKey};
use crate::lp;
use crate::optimizer::{max_min_mcf, Demand, PathRate, Residual};
use crate::scheduler::{Admission, PathCache, Scheduler};
use crate::topology::{LinkId, NodeId, WanEvent, WanEventKind, WanGraph, CAPACITY_EPS};

use super::fairness::progressive_fill;
use super::{FlowKey, FlowRates, IntraGroupOrder, PathShare, PolicyKind, SimConfig, SimError, View};

/// Rates returned by a policy.
pub(crate) struct Decision {
    pub rates: FlowRates,
    /// False when the rates were computed for an older topology and rely on
    /// the enforcement layer to fit the current one.
    pub fresh: bool,
}

pub(crate) trait Policy {
    /// Returns false if the coflow is rejected.
    fn arrive(&mut self, now: f64, c: &Coflow, view: &View) -> Result<bool, SimError>;
    fn groups_finished(&mut self, now: f64, keys: &[GroupKey], view: &View) -> Result<(), SimError>;
    /// Called after `e` has been applied to the view's graph.
    fn wan(&mut self, now: f64, e: &WanEvent, view: &View) -> Result<(), SimError>;
    fn rates(&mut self, now: f64, view: &View) -> Result<Decision, SimError>;
    fn lp_counts(&self) -> Vec<u64> {
        Vec::new()
    }
    fn schedule_trace(&self) -> Option<String> {
        None
    }
    /// Time at which the policy wants to recompute rates on its own.
    fn next_wakeup(&self) -> Option<f64> {
        None
    }
}

pub(crate) fn make_policy(kind: PolicyKind, g: &WanGraph, cfg: &SimConfig) -> Result<Box<dyn Policy>, SimError> {
    Ok(match kind {
        PolicyKind::Terra => Box::new(Terra::new(g, cfg)?),
        PolicyKind::Perflow => Box::new(Subflows::new(1)),
        PolicyKind::Multipath => Box::new(Subflows::new(cfg.scheduler.k)),
        PolicyKind::Varys => Box::new(Varys::default()),
        PolicyKind::SwanMcf => Box::new(Swan::new(cfg)),
    })
}

/// Splits group path rates among the group's unfinished flows.
pub(crate) fn split_groups(
    groups: &BTreeMap<GroupKey, Vec<PathRate>>,
    view: &View,
    order: IntraGroupOrder,
) -> FlowRates {
    let mut members: BTreeMap<GroupKey, Vec<FlowKey>> = BTreeMap::new();
    for (&k, f) in view.flows {
        if f.remaining > 0.0 {
            members.entry(f.group(k)).or_default().push(k);
        }
    }
    let mut out = FlowRates::new();
    for (key, paths) in groups {
        let Some(flows) = members.get(key) else { continue };
        let (chosen, share) = match order {
            IntraGroupOrder::FairShare => (&flows[..], 1.0 / flows.len() as f64),
            IntraGroupOrder::Fifo => (&flows[..1], 1.0),
        };
        for &fk in chosen {
            out.insert(
                fk,
                paths.iter().map(|p| PathShare { links: p.links.clone(), rate: p.rate * share }).collect(),
            );
        }
    }
    out
}

fn link_usage(rates: &FlowRates, n: usize) -> Vec<f64> {
    let mut u = vec![0.0; n];
    for shares in rates.values() {
        for s in shares {
            for l in &s.links {
                u[l.0] += s.rate;
            }
        }
    }
    u
}

/// Scales each path by the worst overload along it so every link fits.
pub(crate) fn clamp_to_capacity(rates: &mut FlowRates, caps: &[f64]) {
    let usage = link_usage(rates, caps.len());
    let factor: Vec<f64> = caps
        .iter()
        .zip(&usage)
        .map(|(&c, &u)| if u > c { (c.max(0.0) / u).min(1.0) } else { 1.0 })
        .collect();
    for shares in rates.values_mut() {
        for s in shares.iter_mut() {
            let f = s.links.iter().map(|l| factor[l.0]).fold(1.0, f64::min);
            s.rate *= f;
        }
    }
}

fn effective_caps(g: &WanGraph) -> Vec<f64> {
    g.links().iter().map(|l| l.effective_capacity()).collect()
}

fn route_cache_reset(e: &WanEvent) -> bool {
    matches!(e.kind, WanEventKind::LinkFail | WanEventKind::LinkRecover)
}

// ---------------------------------------------------------------------------

/// Max-min rates for `flows` over `caps`, one entity per (flow, path).
fn fill_paths(paths: &mut PathCache, g: &WanGraph, flows: &[(FlowKey, NodeId, NodeId)], caps: &[f64]) -> FlowRates {
    let mut entities: Vec<(FlowKey, Vec<LinkId>)> = Vec::new();
    for &(k, s, d) in flows {
        for p in paths.paths(g, s, d) {
            entities.push((k, p.links.clone()));
        }
    }
    let users: Vec<Vec<usize>> = entities.iter().map(|e| e.1.iter().map(|l| l.0).collect()).collect();
    let r = progressive_fill(caps, &users);
    let mut out = FlowRates::new();
    for ((k, links), rate) in entities.into_iter().zip(r) {
        if rate > 0.0 {
            out.entry(k).or_default().push(PathShare { links, rate });
        }
    }
    out
}

struct Subflow {
    links: Vec<LinkId>,
    remaining: f64,
    tol: f64,
    rate: f64,
}

/// Each flow's volume is split equally over its k shortest paths and every
/// subflow is an independent max-min entity that drains on its own. The
/// policy integrates its own rates to know when a subflow is done. k = 1 is
/// plain per-flow fairness.
pub(crate) struct Subflows {
    paths: PathCache,
    subs: BTreeMap<FlowKey, Vec<Subflow>>,
    last: f64,
}

impl Subflows {
    pub fn new(k: usize) -> Self {
        Subflows { paths: PathCache::new(k), subs: BTreeMap::new(), last: 0.0 }
    }

    fn drain(&mut self, now: f64) {
        let dt = (now - self.last).max(0.0);
        for subs in self.subs.values_mut() {
            for s in subs.iter_mut() {
                s.remaining = (s.remaining - s.rate * dt).max(0.0);
                s.rate = 0.0;
            }
        }
        self.last = now;
    }
}

impl Policy for Subflows {
    fn arrive(&mut self, _: f64, _: &Coflow, _: &View) -> Result<bool, SimError> {
        Ok(true)
    }

    fn groups_finished(&mut self, _: f64, _: &[GroupKey], _: &View) -> Result<(), SimError> {
        Ok(())
    }

    fn wan(&mut self, now: f64, e: &WanEvent, _: &View) -> Result<(), SimError> {
        if route_cache_reset(e) {
            // Routes change: re-split what is left over the new paths.
            self.drain(now);
            self.paths.clear();
            self.subs.clear();
        }
        Ok(())
    }

    fn rates(&mut self, now: f64, view: &View) -> Result<Decision, SimError> {
        self.drain(now);
        self.subs.retain(|k, _| view.flows.contains_key(k));
        let g = view.graph;
        for (&k, f) in view.flows {
            if f.remaining <= 0.0 || self.subs.contains_key(&k) {
                continue;
            }
            let paths = self.paths.paths(g, f.src, f.dst);
            let share = f.remaining / paths.len().max(1) as f64;
            let tol = 1e-9 * f.volume as f64 + 1e-6;
            let subs = paths.iter().map(|p| Subflow { links: p.links.clone(), remaining: share, tol, rate: 0.0 }).collect();
            self.subs.insert(k, subs);
        }
        let mut live: Vec<(FlowKey, usize)> = Vec::new();
        for (&k, subs) in &self.subs {
            let alive: Vec<usize> = (0..subs.len()).filter(|&i| subs[i].remaining > subs[i].tol).collect();
            // The last subflow also carries any drift against the true volume.
            let alive = if alive.is_empty() && view.flows[&k].remaining > 0.0 { vec![0] } else { alive };
            live.extend(alive.into_iter().map(|i| (k, i)));
        }
        let users: Vec<Vec<usize>> =
            live.iter().map(|&(k, i)| self.subs[&k][i].links.iter().map(|l| l.0).collect()).collect();
        let r = progressive_fill(&effective_caps(g), &users);
        let mut out = FlowRates::new();
        for (&(k, i), rate) in live.iter().zip(r) {
            if rate > 0.0 {
                let s = &mut self.subs.get_mut(&k).unwrap()[i];
                s.rate = rate;
                if s.remaining <= s.tol {
                    s.remaining = view.flows[&k].remaining;
                }
                out.entry(k).or_default().push(PathShare { links: s.links.clone(), rate });
            }
        }
        Ok(Decision { rates: out, fresh: true })
    }

    fn next_wakeup(&self) -> Option<f64> {
        self.subs
            .values()
            .flatten()
            .filter(|s| s.rate > 0.0)
            .map(|s| self.last + s.remaining / s.rate)
            .reduce(f64::min)
    }
}

// ---------------------------------------------------------------------------

/// Coflow scheduling on a non-blocking abstraction of the WAN: each
/// datacenter is one egress and one ingress port whose capacity is the sum
/// of its up links in that direction. Coflows are served smallest
/// bottleneck first with rates that finish all their flows together,
/// leftover port capacity is shared max-min, and the result is sent on
/// single shortest paths, clamped to what the physical links carry.
#[derive(Default)]
pub(crate) struct Varys {
    routes: BTreeMap<(NodeId, NodeId), Option<Vec<LinkId>>>,
}

impl Varys {
    fn route(&mut self, g: &WanGraph, s: NodeId, d: NodeId) -> Option<Vec<LinkId>> {
        self.routes
            .entry((s, d))
            .or_insert_with(|| g.k_shortest_paths(s, d, 1).into_iter().next().map(|p| p.links))
            .clone()
    }
}

impl Policy for Varys {
    fn arrive(&mut self, _: f64, _: &Coflow, _: &View) -> Result<bool, SimError> {
        Ok(true)
    }

    fn groups_finished(&mut self, _: f64, _: &[GroupKey], _: &View) -> Result<(), SimError> {
        Ok(())
    }

    fn wan(&mut self, _: f64, e: &WanEvent, _: &View) -> Result<(), SimError> {
        if route_cache_reset(e) {
            self.routes.clear();
        }
        Ok(())
    }

    fn rates(&mut self, _: f64, view: &View) -> Result<Decision, SimError> {
        let g = view.graph;
        let n = g.node_count();
        // Ports 0..n are egress, n..2n ingress.
        let mut port_cap = vec![0.0; 2 * n];
        for l in g.links() {
            port_cap[l.src] += l.effective_capacity();
            port_cap[n + l.dst] += l.effective_capacity();
        }
        let floor = port_cap.iter().copied().fold(0.0, f64::max) * CAPACITY_EPS;
        let flows: Vec<(FlowKey, usize, usize, f64)> = view
            .flows
            .iter()
            .filter(|(_, f)| f.remaining > 0.0)
            .map(|(&k, f)| (k, f.src, n + f.dst, f.remaining))
            .collect();
        let mut by_coflow: BTreeMap<CoflowId, Vec<usize>> = BTreeMap::new();
        for (i, f) in flows.iter().enumerate() {
            by_coflow.entry(f.0 .0).or_default().push(i);
        }
        let bottleneck = |members: &[usize], cap: &[f64]| {
            let mut load = vec![0.0; 2 * n];
            for &i in members {
                load[flows[i].1] += flows[i].3;
                load[flows[i].2] += flows[i].3;
            }
            load.iter()
                .zip(cap)
                .filter(|(l, _)| **l > 0.0)
                .map(|(l, c)| if *c > floor { l / c } else { f64::INFINITY })
                .fold(0.0, f64::max)
        };
        let mut order: Vec<(f64, f64, CoflowId)> = by_coflow
            .iter()
            .map(|(id, m)| (bottleneck(m, &port_cap), view.coflows[id].arrival, *id))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut left = port_cap.clone();
        let mut rate = vec![0.0; flows.len()];
        for (_, _, id) in &order {
            let members = &by_coflow[id];
            let gamma = bottleneck(members, &left);
            if !gamma.is_finite() || gamma <= 0.0 {
                continue;
            }
            for &i in members {
                let r = flows[i].3 / gamma;
                rate[i] = r;
                left[flows[i].1] = (left[flows[i].1] - r).max(0.0);
                left[flows[i].2] = (left[flows[i].2] - r).max(0.0);
            }
        }
        let users: Vec<Vec<usize>> = flows.iter().map(|f| vec![f.1, f.2]).collect();
        let extra = progressive_fill(&left, &users);

        let mut out = FlowRates::new();
        for (i, f) in flows.iter().enumerate() {
            let r = rate[i] + extra[i];
            if r <= 0.0 {
                continue;
            }
            let (s, d) = (f.1, f.2 - n);
            if let Some(links) = self.route(g, s, d) {
                out.insert(f.0, vec![PathShare { links, rate: r }]);
            }
        }
        clamp_to_capacity(&mut out, &effective_caps(g));
        Ok(Decision { rates: out, fresh: true })
    }
}

// ---------------------------------------------------------------------------

/// Max-min fair MCF over every active FlowGroup.
pub(crate) struct Swan {
    paths: PathCache,
    order: IntraGroupOrder,
    groups: Option<BTreeMap<GroupKey, Vec<PathRate>>>,
    lp_counts: Vec<u64>,
}

impl Swan {
    fn new(cfg: &SimConfig) -> Self {
        Swan { paths: PathCache::new(cfg.scheduler.k), order: cfg.intra_group, groups: None, lp_counts: Vec::new() }
    }
}

impl Policy for Swan {
    fn arrive(&mut self, _: f64, _: &Coflow, _: &View) -> Result<bool, SimError> {
        self.groups = None;
        Ok(true)
    }

    fn groups_finished(&mut self, _: f64, _: &[GroupKey], _: &View) -> Result<(), SimError> {
        self.groups = None;
        Ok(())
    }

    fn wan(&mut self, _: f64, e: &WanEvent, _: &View) -> Result<(), SimError> {
        if route_cache_reset(e) {
            self.paths.clear();
        }
        self.groups = None;
        Ok(())
    }

    fn rates(&mut self, _: f64, view: &View) -> Result<Decision, SimError> {
        if self.groups.is_none() {
            let before = lp::solves_on_this_thread();
            let demands: Vec<Demand> = view
                .group_remaining()
                .into_iter()
                .filter(|(_, v)| *v > 0.0)
                .map(|(key, volume)| Demand { key, volume })
                .collect();
            let mask = self.paths.mask(view.graph, demands.iter().map(|d| (d.key.src, d.key.dst)));
            let alloc = max_min_mcf(&demands, view.graph, &Residual::from_graph(view.graph), &mask)?;
            self.groups = Some(alloc.into_iter().filter(|a| a.rate > 0.0).map(|a| (a.key, a.paths)).collect());
            self.lp_counts.push(lp::solves_on_this_thread() - before);
        }
        Ok(Decision { rates: split_groups(self.groups.as_ref().unwrap(), view, self.order), fresh: true })
    }

    fn lp_counts(&self) -> Vec<u64> {
        self.lp_counts.clone()
    }
}

// ---------------------------------------------------------------------------

/// Adapter from the simulator to the online [`Scheduler`].
pub(crate) struct Terra {
    sched: Scheduler,
    order: IntraGroupOrder,
    bypass_bytes: u64,
    bypassed: BTreeSet<CoflowId>,
    small: PathCache,
    stale: bool,
}

impl Terra {
    fn new(g: &WanGraph, cfg: &SimConfig) -> Result<Self, SimError> {
        Ok(Terra {
            sched: Scheduler::new(g.clone(), cfg.scheduler)?,
            order: cfg.intra_group,
            bypass_bytes: cfg.bypass_bytes,
            bypassed: BTreeSet::new(),
            small: PathCache::new(1),
            stale: false,
        })
    }

    fn push_progress(&mut self, view: &View) -> Result<(), SimError> {
        for (key, rem) in view.group_remaining() {
            if self.sched.coflow(key.coflow).is_some() {
                self.sched.record_progress(key, rem)?;
            }
        }
        Ok(())
    }
}

impl Policy for Terra {
    fn arrive(&mut self, now: f64, c: &Coflow, view: &View) -> Result<bool, SimError> {
        if c.total_volume() < self.bypass_bytes {
            self.bypassed.insert(c.id);
            return Ok(true);
        }
        self.push_progress(view)?;
        self.stale = false;
        Ok(self.sched.on_arrival(now, c.clone())? != Admission::Rejected)
    }

    fn groups_finished(&mut self, now: f64, keys: &[GroupKey], view: &View) -> Result<(), SimError> {
        let keys: Vec<GroupKey> = keys.iter().copied().filter(|k| !self.bypassed.contains(&k.coflow)).collect();
        if keys.is_empty() {
            return Ok(());
        }
        self.push_progress(view)?;
        self.stale = false;
        self.sched.on_groups_finished(now, &keys)?;
        Ok(())
    }

    fn wan(&mut self, now: f64, e: &WanEvent, view: &View) -> Result<(), SimError> {
        if route_cache_reset(e) {
            self.small.clear();
        }
        self.push_progress(view)?;
        let out = self.sched.on_event(now, crate::scheduler::SchedulerEvent::Wan(*e))?;
        self.stale = !out.rescheduled;
        Ok(())
    }

    fn rates(&mut self, _: f64, view: &View) -> Result<Decision, SimError> {
        let mut rates = split_groups(&self.sched.schedule().group_paths(), view, self.order);
        if !self.bypassed.is_empty() {
            let caps = effective_caps(view.graph);
            let used = link_usage(&rates, caps.len());
            let left: Vec<f64> = caps.iter().zip(&used).map(|(c, u)| (c - u).max(0.0)).collect();
            let small: Vec<_> = view
                .flows
                .iter()
                .filter(|(k, f)| self.bypassed.contains(&k.0) && f.remaining > 0.0)
                .map(|(&k, f)| (k, f.src, f.dst))
                .collect();
            rates.extend(fill_paths(&mut self.small, view.graph, &small, &left));
        }
        Ok(Decision { rates, fresh: !self.stale })
    }

    fn lp_counts(&self) -> Vec<u64> {
        self.sched.lp_solves_per_round().to_vec()
    }

    fn schedule_trace(&self) -> Option<String> {
        Some(self.sched.trace_json())
    }
}

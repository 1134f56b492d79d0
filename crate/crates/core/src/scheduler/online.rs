use std::collections::{BTreeMap, BTreeSet};

use log::{debug, info};

use crate::coflow::{Coflow, CoflowId, CoflowState, Flow, GroupKey};
use crate::lp;
use crate::optimizer::{min_cct, Allocation, CctResult, Residual};
use crate::topology::{significant_change, LinkId, TopologyError, WanEvent, WanEventKind, WanGraph};

use super::alloc::{allocate, by_gamma, remaining_demands, standalone_gamma, CoflowPlan, PathCache, VOLUME_EPS};
use super::{RoundRecord, Schedule, SchedulerConfig, SchedulerError};

/// Answer to a coflow submission.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Admission {
    /// No deadline; best effort.
    Accepted,
    /// Deadline can be met; `gamma` is the completion time found at admission.
    Admitted { gamma: f64 },
    /// Deadline cannot be met even with the admission slack.
    Rejected,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SchedulerEvent {
    FlowGroupFinished(GroupKey),
    CoflowFinished(CoflowId),
    Wan(WanEvent),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventOutcome {
    /// Whether a new schedule was computed.
    pub rescheduled: bool,
    /// Coflows that completed as a result of the event.
    pub finished: Vec<CoflowId>,
}

/// Reserved rates of an admitted deadline coflow.
#[derive(Clone, Debug)]
struct Pin {
    deadline_at: f64,
    /// Rates as reserved, each group sending remaining / time-to-deadline.
    alloc: Allocation,
}

/// Online scheduler driven by arrivals, completions and WAN events.
#[derive(Debug)]
pub struct Scheduler {
    cfg: SchedulerConfig,
    graph: WanGraph,
    paths: PathCache,
    coflows: BTreeMap<CoflowId, Coflow>,
    seen: BTreeSet<CoflowId>,
    rejected: BTreeSet<CoflowId>,
    pins: BTreeMap<CoflowId, Pin>,
    missed: BTreeSet<CoflowId>,
    schedule: Schedule,
    rounds: Vec<RoundRecord>,
    lp_counts: Vec<u64>,
    now: f64,
}

impl Scheduler {
    pub fn new(graph: WanGraph, cfg: SchedulerConfig) -> Result<Self, SchedulerError> {
        cfg.validate()?;
        Ok(Scheduler {
            cfg,
            paths: PathCache::new(cfg.k),
            graph,
            coflows: BTreeMap::new(),
            seen: BTreeSet::new(),
            rejected: BTreeSet::new(),
            pins: BTreeMap::new(),
            missed: BTreeSet::new(),
            schedule: Schedule::empty(0.0),
            rounds: Vec::new(),
            lp_counts: Vec::new(),
            now: 0.0,
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &WanGraph {
        &self.graph
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    /// LP solves spent in each scheduling round, in round order.
    pub fn lp_solves_per_round(&self) -> &[u64] {
        &self.lp_counts
    }

    pub fn coflow(&self, id: CoflowId) -> Option<&Coflow> {
        self.coflows.get(&id)
    }

    pub fn active(&self) -> impl Iterator<Item = &Coflow> {
        self.coflows.values()
    }

    pub fn rejected(&self) -> &BTreeSet<CoflowId> {
        &self.rejected
    }

    /// Admitted coflows whose deadline can no longer be guaranteed.
    pub fn missed(&self) -> &BTreeSet<CoflowId> {
        &self.missed
    }

    pub fn is_pinned(&self, id: CoflowId) -> bool {
        self.pins.contains_key(&id)
    }

    /// Schedule trace as a JSON array of rounds.
    pub fn trace_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounds).expect("round records serialize")
    }

    /// Reports bytes left in a FlowGroup, as measured by the data plane.
    pub fn record_progress(&mut self, key: GroupKey, remaining: f64) -> Result<(), SchedulerError> {
        let c = self.coflows.get_mut(&key.coflow).ok_or(SchedulerError::UnknownCoflow(key.coflow))?;
        let g = c.group_mut(key.src, key.dst).ok_or(SchedulerError::UnknownGroup(key))?;
        g.remaining = remaining.max(0.0);
        Ok(())
    }

    /// Submits a new coflow, runs admission control for deadlines and reschedules.
    pub fn on_arrival(&mut self, now: f64, mut coflow: Coflow) -> Result<Admission, SchedulerError> {
        self.advance(now);
        if !self.seen.insert(coflow.id) {
            return Err(SchedulerError::DuplicateCoflow(coflow.id));
        }
        let id = coflow.id;
        let decision = match coflow.deadline {
            None => Admission::Accepted,
            Some(d) => {
                let deadline_at = coflow.arrival + d;
                match self.reserve(&coflow, deadline_at)? {
                    Some((gamma, alloc)) => {
                        coflow.admitted = true;
                        self.pins.insert(id, Pin { deadline_at, alloc });
                        Admission::Admitted { gamma }
                    }
                    None => Admission::Rejected,
                }
            }
        };
        if decision == Admission::Rejected {
            info!("rejected {id}: deadline cannot be met");
            self.rejected.insert(id);
            self.schedule.rejected.insert(id);
            self.schedule.time = now;
            self.rounds.push(RoundRecord::from_schedule(&self.schedule, &self.graph, "arrival"));
            self.lp_counts.push(0);
            return Ok(decision);
        }
        coflow.state = CoflowState::Active;
        self.coflows.insert(id, coflow);
        self.full_round("arrival")?;
        Ok(decision)
    }

    /// Adds flows to a live coflow and reschedules. A pinned coflow that grows
    /// is re-admitted against its original deadline.
    pub fn on_update(&mut self, now: f64, id: CoflowId, flows: Vec<Flow>) -> Result<(), SchedulerError> {
        self.advance(now);
        let c = self.coflows.get_mut(&id).ok_or(SchedulerError::UnknownCoflow(id))?;
        c.update(flows)?;
        if let Some(pin) = self.pins.remove(&id) {
            let c = self.coflows[&id].clone();
            match self.reserve(&c, pin.deadline_at)? {
                Some((_, alloc)) => {
                    self.pins.insert(id, Pin { deadline_at: pin.deadline_at, alloc });
                }
                None => {
                    self.missed.insert(id);
                }
            }
        }
        self.full_round("update")
    }

    pub fn on_event(&mut self, now: f64, event: SchedulerEvent) -> Result<EventOutcome, SchedulerError> {
        match event {
            SchedulerEvent::FlowGroupFinished(key) => self.on_groups_finished(now, &[key]),
            SchedulerEvent::CoflowFinished(id) => {
                self.advance(now);
                if !self.coflows.contains_key(&id) {
                    return Err(SchedulerError::UnknownCoflow(id));
                }
                self.finish(id);
                self.full_round("coflow_finished")?;
                Ok(EventOutcome { rescheduled: true, finished: vec![id] })
            }
            SchedulerEvent::Wan(e) => self.on_wan(now, &e),
        }
    }

    /// Marks several FlowGroups finished at the same instant and reschedules once.
    pub fn on_groups_finished(&mut self, now: f64, keys: &[GroupKey]) -> Result<EventOutcome, SchedulerError> {
        self.advance(now);
        for key in keys {
            let c = self.coflows.get(&key.coflow).ok_or(SchedulerError::UnknownCoflow(key.coflow))?;
            c.group(key.src, key.dst).ok_or(SchedulerError::UnknownGroup(*key))?;
        }
        let mut freed: BTreeSet<LinkId> = BTreeSet::new();
        for ga in self.schedule.allocations.values().flat_map(|a| a.groups.iter()).chain(&self.schedule.work_conservation) {
            if keys.contains(&ga.key) {
                freed.extend(ga.arcs.iter().map(|a| a.0));
            }
        }
        for key in keys {
            let c = self.coflows.get_mut(&key.coflow).unwrap();
            let g = c.group_mut(key.src, key.dst).unwrap();
            g.remaining = 0.0;
            for f in c.flows.iter_mut().filter(|f| f.src == key.src && f.dst == key.dst) {
                f.remaining = 0.0;
            }
        }
        let mut finished = Vec::new();
        for key in keys {
            if !finished.contains(&key.coflow) && self.coflows[&key.coflow].is_finished() {
                finished.push(key.coflow);
            }
        }
        for &id in &finished {
            self.finish(id);
        }
        if !finished.is_empty() {
            self.full_round("coflow_finished")?;
        } else {
            let owners: BTreeSet<CoflowId> = keys.iter().map(|k| k.coflow).collect();
            self.partial_round(&owners, &freed)?;
        }
        Ok(EventOutcome { rescheduled: true, finished })
    }

    fn on_wan(&mut self, now: f64, e: &WanEvent) -> Result<EventOutcome, SchedulerError> {
        self.advance(now);
        let old = self
            .graph
            .link(e.link)
            .ok_or(SchedulerError::Topology(TopologyError::UnknownLink(e.link)))?
            .effective_capacity();
        self.graph.apply_event(e)?;
        let new = self.graph.link(e.link).unwrap().effective_capacity();
        let significant = match e.kind {
            WanEventKind::LinkFail | WanEventKind::LinkRecover => {
                self.paths.clear();
                true
            }
            WanEventKind::BandwidthChange { .. } => significant_change(old, new, self.cfg.rho),
        };
        if !significant {
            debug!("bandwidth change on {} below threshold; schedule kept", self.graph.link_name(e.link));
            return Ok(EventOutcome::default());
        }
        self.repair_pins()?;
        self.full_round("wan")?;
        Ok(EventOutcome { rescheduled: true, finished: Vec::new() })
    }

    fn advance(&mut self, now: f64) {
        if now > self.now {
            self.now = now;
        }
    }

    fn finish(&mut self, id: CoflowId) {
        if let Some(mut c) = self.coflows.remove(&id) {
            c.state = CoflowState::Finished;
        }
        self.pins.remove(&id);
        self.missed.remove(&id);
    }

    /// Current reservation of a pinned coflow: each unfinished group sends
    /// remaining / time-to-deadline, never above the rate reserved.
    fn pin_now(&self, id: CoflowId) -> Option<Allocation> {
        let pin = self.pins.get(&id)?;
        let c = self.coflows.get(&id)?;
        let left = pin.deadline_at - self.now;
        let mut a = pin.alloc.clone();
        a.groups.retain_mut(|ga| {
            let rem = c.group(ga.key.src, ga.key.dst).map_or(0.0, |g| g.remaining);
            if rem <= VOLUME_EPS || ga.rate <= 0.0 {
                return false;
            }
            if left > 1e-9 {
                ga.scale((rem / left / ga.rate).min(1.0));
            }
            true
        });
        a.gamma = a
            .groups
            .iter()
            .map(|ga| c.group(ga.key.src, ga.key.dst).map_or(0.0, |g| g.remaining) / ga.rate)
            .fold(0.0, f64::max);
        Some(a)
    }

    /// Admission test against the (1 - alpha)-scaled graph minus existing pins.
    /// Returns the completion time found and the reservation to pin, or `None`
    /// when the deadline is out of reach.
    fn reserve(&mut self, c: &Coflow, deadline_at: f64) -> Result<Option<(f64, Allocation)>, SchedulerError> {
        let left = deadline_at - self.now;
        let demands = remaining_demands(c);
        if left <= 0.0 || demands.is_empty() {
            return Ok(None);
        }
        let full = Residual::from_graph(&self.graph);
        let caps = full.as_slice().to_vec();
        let mut res = full.scaled(1.0 - self.cfg.alpha);
        let mut avail = full;
        let pinned: Vec<CoflowId> = self.pins.keys().copied().filter(|&p| p != c.id).collect();
        for p in pinned {
            if let Some(a) = self.pin_now(p) {
                let u = a.link_usage(caps.len());
                res.subtract(&u, &caps);
                avail.subtract(&u, &caps);
            }
        }
        let mask = self.paths.mask(&self.graph, demands.iter().map(|d| (d.key.src, d.key.dst)));
        let alloc = match min_cct(&demands, &self.graph, &res, &mask)? {
            CctResult::Infeasible => return Ok(None),
            CctResult::Feasible(a) => a,
        };
        if alloc.gamma > self.cfg.eta * left {
            return Ok(None);
        }
        let gamma = alloc.gamma;
        let usage = alloc.link_usage(caps.len());
        let fit = usage
            .iter()
            .zip(avail.as_slice())
            .filter(|(u, _)| **u > 0.0)
            .map(|(u, a)| a / u)
            .fold(f64::INFINITY, f64::min);
        let mut pin = alloc;
        pin.scale((gamma / left).min(fit));
        Ok(Some((gamma, pin)))
    }

    /// Re-solves pins that no longer fit the graph; those that cannot be
    /// re-reserved keep running without a guarantee.
    fn repair_pins(&mut self) -> Result<(), SchedulerError> {
        let caps = self.graph.capacities();
        let mut used = vec![0.0; caps.len()];
        let mut order: Vec<(f64, CoflowId)> = self.pins.iter().map(|(&id, p)| (p.deadline_at, id)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut broken = Vec::new();
        for &(_, id) in &order {
            let Some(a) = self.pin_now(id) else { continue };
            let usage = a.link_usage(caps.len());
            let fits = usage.iter().zip(&used).zip(&caps).all(|((u, x), c)| *u <= 0.0 || u + x <= c * (1.0 + 1e-9));
            if fits {
                for (x, u) in used.iter_mut().zip(&usage) {
                    *x += u;
                }
            } else {
                broken.push(id);
            }
        }
        for &id in &broken {
            self.pins.remove(&id);
        }
        for (deadline_at, id) in order.into_iter().filter(|o| broken.contains(&o.1)) {
            let c = self.coflows[&id].clone();
            match self.reserve(&c, deadline_at)? {
                Some((_, alloc)) => {
                    debug!("re-reserved {id} after topology change");
                    self.pins.insert(id, Pin { deadline_at, alloc });
                }
                None => {
                    info!("{id} can no longer meet its deadline");
                    self.missed.insert(id);
                }
            }
        }
        Ok(())
    }

    /// Plans for `ids` in priority order: pinned coflows by decreasing
    /// deadline, then everything else by increasing remaining standalone gamma.
    fn ordered_plans(&mut self, ids: &[CoflowId]) -> Result<Vec<CoflowPlan>, SchedulerError> {
        let mut pinned = Vec::new();
        let mut others = Vec::new();
        for &id in ids {
            let c = &self.coflows[&id];
            let mut plan = CoflowPlan::from_coflow(c, self.now);
            if plan.demands.is_empty() {
                continue;
            }
            if let Some(a) = self.pin_now(id) {
                let deadline_at = self.pins[&id].deadline_at;
                let gamma = a.gamma;
                plan.pinned = Some(a);
                pinned.push((deadline_at, gamma, plan));
            } else {
                if self.missed.contains(&id) {
                    plan.deadline = None;
                }
                let mask = self.paths.mask(&self.graph, plan.pairs());
                let gamma = standalone_gamma(&plan.demands, &self.graph, &self.cfg, &mask)?;
                others.push((gamma, plan));
            }
        }
        pinned.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.arrival.total_cmp(&b.2.arrival))
                .then(a.2.id.cmp(&b.2.id))
        });
        others.sort_by(|a, b| by_gamma((a.0, a.1.arrival, a.1.id), (b.0, b.1.arrival, b.1.id)));
        Ok(pinned.into_iter().map(|x| x.2).chain(others.into_iter().map(|x| x.1)).collect())
    }

    fn full_round(&mut self, trigger: &str) -> Result<(), SchedulerError> {
        let before = lp::solves_on_this_thread();
        let ids: Vec<CoflowId> = self.coflows.keys().copied().collect();
        let plans = self.ordered_plans(&ids)?;
        let mask = self.paths.mask(&self.graph, plans.iter().flat_map(CoflowPlan::pairs));
        let mut s = allocate(&plans, &self.graph, &self.cfg, &Residual::from_graph(&self.graph), &mask, self.now)?;
        s.rejected = self.rejected.clone();
        self.install(s, trigger, before);
        Ok(())
    }

    /// Re-optimizes only the coflows that could use the freed links; the
    /// others keep their rates.
    fn partial_round(&mut self, owners: &BTreeSet<CoflowId>, freed: &BTreeSet<LinkId>) -> Result<(), SchedulerError> {
        let before = lp::solves_on_this_thread();
        let mut affected: BTreeSet<CoflowId> = owners.clone();
        let ids: Vec<CoflowId> = self.coflows.keys().copied().collect();
        for &id in &ids {
            if affected.contains(&id) {
                continue;
            }
            let uses = !self.schedule.coflow_links(id).is_disjoint(freed);
            let demands = remaining_demands(&self.coflows[&id]);
            let mask = self.paths.mask(&self.graph, demands.iter().map(|d| (d.key.src, d.key.dst)));
            let may_use = mask.pairs().any(|p| mask.get(p).is_some_and(|s| !s.is_disjoint(freed)));
            if uses || may_use {
                affected.insert(id);
            }
        }
        if affected.len() >= ids.len() {
            return self.full_round("flowgroup_finished");
        }
        let mut fixed = Schedule::empty(self.now);
        fixed.order = self.schedule.order.iter().copied().filter(|id| !affected.contains(id) && self.coflows.contains_key(id)).collect();
        fixed.allocations =
            self.schedule.allocations.iter().filter(|(id, _)| fixed.order.contains(id)).map(|(k, v)| (*k, v.clone())).collect();
        fixed.failed = self.schedule.failed.iter().copied().filter(|id| fixed.order.contains(id)).collect();
        fixed.work_conservation =
            self.schedule.work_conservation.iter().filter(|g| fixed.order.contains(&g.key.coflow)).cloned().collect();

        let caps = self.graph.capacities();
        let mut base = Residual::from_graph(&self.graph);
        base.subtract(&fixed.link_usage(caps.len()), &caps);
        let subset: Vec<CoflowId> = affected.iter().copied().filter(|id| self.coflows.contains_key(id)).collect();
        let plans = self.ordered_plans(&subset)?;
        let mask = self.paths.mask(&self.graph, plans.iter().flat_map(CoflowPlan::pairs));
        let sub = allocate(&plans, &self.graph, &self.cfg, &base, &mask, self.now)?;
        if sub.failed.iter().any(|&id| sub.coflow_rate(id) <= 0.0) {
            // Fixed coflows hold the reserve on these links; redo everything.
            return self.full_round("flowgroup_finished");
        }
        let mut s = fixed;
        s.order.extend(sub.order);
        s.allocations.extend(sub.allocations);
        s.failed.extend(sub.failed);
        s.work_conservation.extend(sub.work_conservation);
        s.rejected = self.rejected.clone();
        self.install(s, "flowgroup_finished", before);
        Ok(())
    }

    fn install(&mut self, s: Schedule, trigger: &str, lp_before: u64) {
        for (id, c) in self.coflows.iter_mut() {
            c.state = if s.failed.contains(id) { CoflowState::Preempted } else { CoflowState::Active };
        }
        self.rounds.push(RoundRecord::from_schedule(&s, &self.graph, trigger));
        self.lp_counts.push(lp::solves_on_this_thread() - lp_before);
        self.schedule = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{load_topology, BYTES_PER_GBPS};

    fn line() -> WanGraph {
        load_topology(r#"{"nodes":["A","B"],"links":[{"src":"A","dst":"B","gbps":10}]}"#).unwrap()
    }

    fn coflow(id: u64, bytes: u64, deadline: Option<f64>) -> Coflow {
        Coflow::new(CoflowId(id), 0.0, deadline, vec![Flow::new(id, 0, 1, bytes)]).unwrap()
    }

    /// Bytes that take `secs` on the 10 Gbps link with the default 10% reserve.
    fn bytes_for(secs: f64) -> u64 {
        (secs * 9.0 * BYTES_PER_GBPS) as u64
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = SchedulerConfig::default();
        assert_eq!((c.alpha, c.rho, c.eta, c.k), (0.1, 0.25, 1.1, 15));
        assert!(SchedulerConfig::new(1.0, 0.25, 1.1, 15).is_err());
        assert!(SchedulerConfig::new(0.1, 0.0, 1.1, 15).is_err());
        assert!(SchedulerConfig::new(0.1, 0.25, 1.0, 15).is_err());
        assert!(SchedulerConfig::new(0.1, 0.25, 1.1, 0).is_err());
        assert!(SchedulerConfig::new(0.0, 0.5, 2.0, 1).is_ok());
    }

    #[test]
    fn admits_when_gamma_within_slack() {
        let mut s = Scheduler::new(line(), SchedulerConfig::default()).unwrap();
        let d = s.on_arrival(0.0, coflow(1, bytes_for(5.0), Some(10.0))).unwrap();
        match d {
            Admission::Admitted { gamma } => assert!((gamma - 5.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        // Reserved at half speed so the coflow ends at its deadline.
        let pin = s.schedule().allocations[&CoflowId(1)].clone();
        assert!((pin.gamma - 10.0).abs() < 1e-6);
        assert!((pin.groups[0].rate - 4.5 * BYTES_PER_GBPS).abs() < 1e-3);
    }

    #[test]
    fn rejects_when_gamma_beyond_slack() {
        let mut s = Scheduler::new(line(), SchedulerConfig::default()).unwrap();
        let d = s.on_arrival(0.0, coflow(1, bytes_for(12.0), Some(10.0))).unwrap();
        assert_eq!(d, Admission::Rejected);
        assert!(s.rejected().contains(&CoflowId(1)));
        assert!(s.coflow(CoflowId(1)).is_none());
        assert_eq!(s.rounds().last().unwrap().rejected, vec![1]);
    }

    #[test]
    fn admitted_reservations_are_respected() {
        let mut s = Scheduler::new(line(), SchedulerConfig::default()).unwrap();
        s.on_arrival(0.0, coflow(1, bytes_for(5.0), Some(10.0))).unwrap();
        // 4.5 Gbps left in the scaled graph, so 5 s of full-rate work takes 10 s.
        let d = s.on_arrival(0.0, coflow(2, bytes_for(5.0), Some(8.0))).unwrap();
        assert_eq!(d, Admission::Rejected);
        let d = s.on_arrival(0.0, coflow(3, bytes_for(5.0), Some(10.0))).unwrap();
        assert!(matches!(d, Admission::Admitted { .. }));
        assert!(s.schedule().max_overload(s.graph()) < 1e-9);
        let pin = &s.schedule().allocations[&CoflowId(1)];
        assert!((pin.groups[0].rate - 4.5 * BYTES_PER_GBPS).abs() < 1e-3);
    }

    #[test]
    fn duplicate_and_unknown_ids() {
        let mut s = Scheduler::new(line(), SchedulerConfig::default()).unwrap();
        s.on_arrival(0.0, coflow(1, 1_000, None)).unwrap();
        assert!(matches!(s.on_arrival(0.0, coflow(1, 1_000, None)), Err(SchedulerError::DuplicateCoflow(_))));
        assert!(matches!(
            s.on_event(1.0, SchedulerEvent::CoflowFinished(CoflowId(9))),
            Err(SchedulerError::UnknownCoflow(_))
        ));
        let bad = GroupKey { coflow: CoflowId(1), src: 1, dst: 0 };
        assert!(matches!(s.on_event(1.0, SchedulerEvent::FlowGroupFinished(bad)), Err(SchedulerError::UnknownGroup(_))));
    }

    #[test]
    fn small_bandwidth_change_keeps_schedule() {
        let mut s = Scheduler::new(line(), SchedulerConfig::default()).unwrap();
        s.on_arrival(0.0, coflow(1, 10_000_000_000, None)).unwrap();
        let before = s.schedule().clone();
        let rounds = s.rounds().len();
        let e = WanEvent {
            time: 1.0,
            seq: 0,
            kind: WanEventKind::BandwidthChange { new_capacity: 9.0 * BYTES_PER_GBPS },
            link: LinkId(0),
        };
        let out = s.on_event(1.0, SchedulerEvent::Wan(e)).unwrap();
        assert!(!out.rescheduled);
        assert_eq!(s.schedule(), &before);
        assert_eq!(s.rounds().len(), rounds);
        let e = WanEvent {
            time: 2.0,
            seq: 1,
            kind: WanEventKind::BandwidthChange { new_capacity: 5.0 * BYTES_PER_GBPS },
            link: LinkId(0),
        };
        assert!(s.on_event(2.0, SchedulerEvent::Wan(e)).unwrap().rescheduled);
        assert!(s.schedule().max_overload(s.graph()) < 1e-9);
    }

    #[test]
    fn last_group_fires_coflow_finished_once() {
        let g = load_topology(
            r#"{"nodes":["A","B","C"],"links":[{"src":"A","dst":"B","gbps":10},{"src":"C","dst":"B","gbps":10}]}"#,
        )
        .unwrap();
        let mut s = Scheduler::new(g, SchedulerConfig::default()).unwrap();
        let c = Coflow::new(CoflowId(4), 0.0, None, vec![Flow::new(1, 0, 1, 1_000), Flow::new(2, 2, 1, 2_000)]).unwrap();
        let keys: Vec<GroupKey> = c.groups.iter().map(|g| g.key).collect();
        s.on_arrival(0.0, c).unwrap();
        let o = s.on_event(1.0, SchedulerEvent::FlowGroupFinished(keys[0])).unwrap();
        assert!(o.finished.is_empty());
        let o = s.on_event(2.0, SchedulerEvent::FlowGroupFinished(keys[1])).unwrap();
        assert_eq!(o.finished, vec![CoflowId(4)]);
        assert!(s.on_event(2.0, SchedulerEvent::FlowGroupFinished(keys[1])).is_err());
        assert!(s.on_event(2.0, SchedulerEvent::CoflowFinished(CoflowId(4))).is_err());
    }

    #[test]
    fn smaller_arrival_preempts() {
        let mut s = Scheduler::new(line(), SchedulerConfig::default()).unwrap();
        s.on_arrival(0.0, coflow(1, 100_000_000_000, None)).unwrap();
        assert_eq!(s.schedule().order, vec![CoflowId(1)]);
        s.record_progress(GroupKey { coflow: CoflowId(1), src: 0, dst: 1 }, 90_000_000_000.0).unwrap();
        s.on_arrival(1.0, coflow(2, 1_000_000_000, None)).unwrap();
        assert_eq!(s.schedule().order, vec![CoflowId(2), CoflowId(1)]);
        assert!(s.schedule().failed.contains(&CoflowId(1)));
        // Starvation share keeps the larger coflow moving.
        assert!(s.schedule().coflow_rate(CoflowId(1)) > 0.9 * BYTES_PER_GBPS);
        assert_eq!(s.coflow(CoflowId(1)).unwrap().state, CoflowState::Preempted);
    }

    #[test]
    fn failure_breaking_pin_re_reserves_or_misses() {
        let g = load_topology(
            r#"{"nodes":["A","B","C"],"links":[
            {"src":"A","dst":"B","gbps":10},{"src":"A","dst":"C","gbps":10},{"src":"C","dst":"B","gbps":10}]}"#,
        )
        .unwrap();
        let mut s = Scheduler::new(g, SchedulerConfig::default()).unwrap();
        // Needs both paths to make 5 s.
        let d = s.on_arrival(0.0, coflow(1, bytes_for(10.0), Some(5.0))).unwrap();
        assert!(matches!(d, Admission::Admitted { .. }));
        let e = WanEvent { time: 1.0, seq: 0, kind: WanEventKind::LinkFail, link: LinkId(1) };
        s.on_event(1.0, SchedulerEvent::Wan(e)).unwrap();
        assert!(s.missed().contains(&CoflowId(1)));
        assert!(!s.is_pinned(CoflowId(1)));
        assert!(s.schedule().coflow_rate(CoflowId(1)) > 0.0);
        assert!(s.schedule().max_overload(s.graph()) < 1e-9);
    }

    #[test]
    fn trace_serializes_rounds() {
        let mut s = Scheduler::new(line(), SchedulerConfig::default()).unwrap();
        s.on_arrival(0.0, coflow(1, 1_000_000, None)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.trace_json()).unwrap();
        let r = &v[0];
        assert_eq!(r["trigger"], "arrival");
        assert_eq!(r["coflows"][0]["paths"][0]["hops"], serde_json::json!(["A", "B"]));
        assert!(r["coflows"][0]["gamma"].as_f64().unwrap() > 0.0);
        assert!(s.lp_solves_per_round()[0] > 0);
    }
}

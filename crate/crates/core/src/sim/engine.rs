use std::collections::{BTreeMap, BTreeSet};

use log::{debug, warn};

use crate::coflow::{CoflowId, GroupKey};
use crate::topology::{WanEvent, WanEventKind, WanGraph};
use crate::workload::Workload;

use super::metrics::{compute_metrics, CoflowOutcome, JobOutcome, Metrics, RunLog};
use super::policy::{clamp_to_capacity, make_policy, Policy};
use super::trace::{rates_digest, TraceRecord};
use super::{ActiveCoflow, ActiveFlow, FlowKey, FlowRates, PolicyKind, SimConfig, SimError, View};

/// Relative overload tolerated before a decision counts as a violation.
const OVERLOAD_TOL: f64 = 1e-6;
/// Relative delivered-bytes error tolerated at coflow completion.
const CONSERVATION_TOL: f64 = 1e-6;
/// Events closer than this are processed in the same instant.
const TIME_EPS: f64 = 1e-12;

fn done_tolerance(volume: u64) -> f64 {
    1e-9 * volume as f64 + 1e-6
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub policy: PolicyKind,
    pub seed: u64,
    pub metrics: Metrics,
    pub log: RunLog,
    pub trace: Vec<TraceRecord>,
    /// Per-round schedule dump, for policies that keep one.
    pub schedule_trace: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq)]
enum Stage {
    Waiting,
    Submitted,
    Done,
}

struct Release {
    time: f64,
    job: usize,
    coflow: usize,
}

struct State<'w> {
    workload: &'w Workload,
    graph: WanGraph,
    flows: BTreeMap<FlowKey, ActiveFlow>,
    coflows: BTreeMap<CoflowId, ActiveCoflow>,
    group_members: BTreeMap<GroupKey, usize>,
    /// (job, index) per coflow id.
    index: BTreeMap<CoflowId, (usize, usize)>,
    stage: BTreeMap<CoflowId, Stage>,
    deps_left: BTreeMap<CoflowId, usize>,
    releases: Vec<Release>,
    outcomes: BTreeMap<CoflowId, CoflowOutcome>,
    trace: Vec<TraceRecord>,
    pending_trace: usize,
}

impl<'w> State<'w> {
    fn new(workload: &'w Workload, g: &WanGraph) -> Self {
        let mut s = State {
            workload,
            graph: g.clone(),
            flows: BTreeMap::new(),
            coflows: BTreeMap::new(),
            group_members: BTreeMap::new(),
            index: BTreeMap::new(),
            stage: BTreeMap::new(),
            deps_left: BTreeMap::new(),
            releases: Vec::new(),
            outcomes: BTreeMap::new(),
            trace: Vec::new(),
            pending_trace: 0,
        };
        for (j, job) in workload.jobs.iter().enumerate() {
            for (i, c) in job.coflows.iter().enumerate() {
                s.index.insert(c.id, (j, i));
                s.stage.insert(c.id, Stage::Waiting);
                s.deps_left.insert(c.id, c.deps.len());
                if c.deps.is_empty() {
                    s.releases.push(Release { time: job.arrival, job: j, coflow: i });
                }
            }
        }
        s
    }

    fn view(&self) -> View<'_> {
        View { graph: &self.graph, flows: &self.flows, coflows: &self.coflows }
    }

    fn note(&mut self, t: f64, kind: &str, coflow: Option<CoflowId>, link: Option<String>) {
        self.trace.push(TraceRecord {
            t,
            kind: kind.to_string(),
            coflow: coflow.map(|c| c.0),
            link,
            rates_snapshot_digest: String::new(),
        });
        self.pending_trace += 1;
    }

    /// Marks `id` done and schedules dependents whose deps are all done.
    fn close(&mut self, t: f64, id: CoflowId) {
        self.stage.insert(id, Stage::Done);
        let (j, _) = self.index[&id];
        let job = &self.workload.jobs[j];
        for (i, other) in job.coflows.iter().enumerate() {
            if other.deps.contains(&id) {
                let left = self.deps_left.get_mut(&other.id).unwrap();
                *left -= 1;
                if *left == 0 {
                    self.releases.push(Release { time: t + job.compute_delay, job: j, coflow: i });
                }
            }
        }
    }

    /// Removes finished flows; returns finished groups and coflows.
    fn reap(&mut self, t: f64) -> (Vec<GroupKey>, Vec<CoflowId>) {
        let done: Vec<FlowKey> =
            self.flows.iter().filter(|(_, f)| f.remaining <= done_tolerance(f.volume)).map(|(&k, _)| k).collect();
        let mut groups = Vec::new();
        let mut touched = BTreeSet::new();
        for k in done {
            let f = self.flows.remove(&k).unwrap();
            let g = f.group(k);
            self.note(t, "flow_finished", Some(k.0), None);
            let n = self.group_members.get_mut(&g).unwrap();
            *n -= 1;
            if *n == 0 {
                self.group_members.remove(&g);
                groups.push(g);
                self.note(t, "group_finished", Some(k.0), None);
            }
            touched.insert(k.0);
        }
        let mut coflows = Vec::new();
        for c in touched {
            if !self.flows.range((c, 0)..=(c, u64::MAX)).any(|_| true) {
                coflows.push(c);
            }
        }
        (groups, coflows)
    }
}

/// Runs `workload` on `g` under `kind`.
///
/// `seed` only labels the output; the run itself is deterministic.
pub fn run(workload: &Workload, g: &WanGraph, kind: PolicyKind, cfg: &SimConfig, seed: u64) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let mut policy = make_policy(kind, g, cfg)?;
    let mut st = State::new(workload, g);
    let mut wan: Vec<WanEvent> = workload.wan_events.clone();
    wan.sort_by(|a, b| a.order(b));
    let mut next_wan = 0;
    let mut log = RunLog { link_util_integral: vec![0.0; g.link_count()], ..Default::default() };
    // Decisions not yet in force, ordered by effective time.
    let mut queued: Vec<(f64, FlowRates)> = Vec::new();
    let mut in_force = FlowRates::new();
    let mut delivered: BTreeMap<CoflowId, f64> = BTreeMap::new();

    let first = st
        .releases
        .iter()
        .map(|r| r.time)
        .chain(wan.first().map(|e| e.time))
        .fold(f64::INFINITY, f64::min);
    if !first.is_finite() {
        return Ok(finish(kind, seed, st, log, policy.as_ref()));
    }
    let mut t = first;
    let mut start: Option<f64> = None;
    let mut last_completion = t;
    let mut events = 0usize;
    let mut wake: Option<f64> = None;

    loop {
        events += 1;
        if events > cfg.max_events {
            return Err(SimError::EventLimit(cfg.max_events));
        }
        let mut changed = wake.is_some_and(|w| w <= t + TIME_EPS);

        // Completions.
        let (groups, done) = st.reap(t);
        if !groups.is_empty() || !done.is_empty() || st.pending_trace > 0 {
            changed = true;
        }
        for c in done {
            let active = st.coflows.remove(&c).unwrap();
            let sent = delivered.remove(&c).unwrap_or(0.0);
            let err = (sent - active.bytes as f64).abs() / (active.bytes as f64).max(1.0);
            if err > CONSERVATION_TOL {
                log.conservation_violations += 1;
            }
            log.max_conservation_error = log.max_conservation_error.max(err);
            st.outcomes.get_mut(&c).unwrap().finish = Some(t);
            last_completion = t;
            st.note(t, "coflow_finished", Some(c), None);
            st.close(t, c);
        }
        if !groups.is_empty() {
            policy.groups_finished(t, &groups, &st.view())?;
        }

        // Submissions; releases at this instant may cascade through rejects.
        loop {
            let mut ready: Vec<Release> = Vec::new();
            let mut i = 0;
            while i < st.releases.len() {
                if st.releases[i].time <= t + TIME_EPS {
                    ready.push(st.releases.swap_remove(i));
                } else {
                    i += 1;
                }
            }
            if ready.is_empty() {
                break;
            }
            ready.sort_by(|a, b| {
                a.time.total_cmp(&b.time).then(
                    workload.jobs[a.job].coflows[a.coflow].id.cmp(&workload.jobs[b.job].coflows[b.coflow].id),
                )
            });
            for r in ready {
                changed = true;
                let job = &workload.jobs[r.job];
                let jc = &job.coflows[r.coflow];
                let coflow = jc.to_coflow(r.time)?;
                start.get_or_insert(r.time);
                st.stage.insert(jc.id, Stage::Submitted);
                st.outcomes.insert(
                    jc.id,
                    CoflowOutcome {
                        id: jc.id,
                        job: job.id,
                        arrival: r.time,
                        finish: None,
                        deadline: jc.deadline,
                        rejected: false,
                        bytes: jc.bytes(),
                    },
                );
                for f in &coflow.flows {
                    let af = ActiveFlow { src: f.src, dst: f.dst, volume: f.volume, remaining: f.volume as f64, delivered: 0.0 };
                    *st.group_members.entry(af.group((jc.id, f.id))).or_default() += 1;
                    st.flows.insert((jc.id, f.id), af);
                }
                st.coflows.insert(
                    jc.id,
                    ActiveCoflow { job: job.id, arrival: r.time, deadline: jc.deadline, bytes: jc.bytes() },
                );
                st.note(t, "arrival", Some(jc.id), None);
                if !policy.arrive(t, &coflow, &st.view())? {
                    debug!("t={t:.6} {} rejected", jc.id);
                    let keys: Vec<FlowKey> = st.flows.range((jc.id, 0)..=(jc.id, u64::MAX)).map(|(&k, _)| k).collect();
                    for k in keys {
                        let f = st.flows.remove(&k).unwrap();
                        st.group_members.remove(&f.group(k));
                    }
                    st.coflows.remove(&jc.id);
                    st.outcomes.get_mut(&jc.id).unwrap().rejected = true;
                    st.note(t, "rejected", Some(jc.id), None);
                    st.close(t, jc.id);
                }
            }
        }

        // WAN events.
        while next_wan < wan.len() && wan[next_wan].time <= t + TIME_EPS {
            let e = wan[next_wan];
            next_wan += 1;
            st.graph.apply_event(&e)?;
            let kind = match e.kind {
                WanEventKind::LinkFail => "link_fail",
                WanEventKind::LinkRecover => "link_recover",
                WanEventKind::BandwidthChange { .. } => "bandwidth_change",
            };
            let name = st.graph.link_name(e.link);
            st.note(t, kind, None, Some(name));
            policy.wan(t, &e, &st.view())?;
            changed = true;
        }

        // Decision.
        if changed {
            let d = policy.rates(t, &st.view())?;
            if d.fresh {
                let caps: Vec<f64> = st.graph.links().iter().map(|l| l.effective_capacity()).collect();
                let over = max_overload(&d.rates, &caps);
                if over > OVERLOAD_TOL {
                    warn!("t={t:.6} {kind} overloads a link by {over:.3e}");
                    log.capacity_violations += 1;
                }
                log.max_overload = log.max_overload.max(over);
            }
            queued.push((t + cfg.decision_delay, d.rates));
        }
        let mut applied = false;
        while let Some(pos) = queued.iter().position(|(at, _)| *at <= t + TIME_EPS) {
            in_force = queued.remove(pos).1;
            applied = true;
        }
        // Rates in force, restricted to live flows and fitted to the graph.
        let mut eff: FlowRates =
            in_force.iter().filter(|(k, _)| st.flows.contains_key(k)).map(|(k, v)| (*k, v.clone())).collect();
        let caps: Vec<f64> = st.graph.links().iter().map(|l| l.effective_capacity()).collect();
        clamp_to_capacity(&mut eff, &caps);
        if changed || applied {
            let digest = rates_digest(&eff);
            if st.pending_trace == 0 {
                st.note(t, "rates_applied", None, None);
            }
            let n = st.trace.len();
            for r in &mut st.trace[n - st.pending_trace..] {
                r.rates_snapshot_digest = digest.clone();
            }
            st.pending_trace = 0;
        }

        // Next instant.
        let mut next = f64::INFINITY;
        let mut flow_rate: BTreeMap<FlowKey, f64> = BTreeMap::new();
        for (k, shares) in &eff {
            let r: f64 = shares.iter().map(|s| s.rate).sum();
            if r > 0.0 {
                flow_rate.insert(*k, r);
                next = next.min(t + st.flows[k].remaining / r);
            }
        }
        for r in &st.releases {
            next = next.min(r.time);
        }
        if let Some(e) = wan.get(next_wan) {
            next = next.min(e.time);
        }
        for (at, _) in &queued {
            next = next.min(*at);
        }
        wake = policy.next_wakeup().filter(|&w| w > t + TIME_EPS);
        if let Some(w) = wake {
            next = next.min(w);
        }
        if !next.is_finite() {
            if !st.flows.is_empty() {
                warn!("{kind}: {} flows stalled at t={t:.6}", st.flows.len());
            }
            break;
        }
        let dt = (next - t).max(0.0);

        // Advance.
        let total_cap: f64 = caps.iter().sum();
        let mut usage = vec![0.0; caps.len()];
        for shares in eff.values() {
            for s in shares {
                for l in &s.links {
                    usage[l.0] += s.rate;
                }
            }
        }
        if start.is_some() {
            if total_cap > 0.0 {
                let used: f64 = usage.iter().sum();
                log.util_integral += used / total_cap * dt;
            }
            for (i, (&u, &c)) in usage.iter().zip(&caps).enumerate() {
                if c > 0.0 {
                    log.link_util_integral[i] += u / c * dt;
                }
            }
        }
        for (k, r) in flow_rate {
            let f = st.flows.get_mut(&k).unwrap();
            let sent = (r * dt).min(f.remaining);
            f.remaining -= sent;
            f.delivered += sent;
            *delivered.entry(k.0).or_default() += sent;
        }
        t = next;
    }

    log.span = start.map_or(0.0, |s| (last_completion - s).max(0.0));
    Ok(finish(kind, seed, st, log, policy.as_ref()))
}

fn max_overload(rates: &FlowRates, caps: &[f64]) -> f64 {
    let mut usage = vec![0.0; caps.len()];
    for shares in rates.values() {
        for s in shares {
            for l in &s.links {
                usage[l.0] += s.rate;
            }
        }
    }
    usage
        .iter()
        .zip(caps)
        .map(|(&u, &c)| {
            if u <= 0.0 {
                0.0
            } else if c <= 0.0 {
                f64::INFINITY
            } else {
                (u / c - 1.0).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn finish(kind: PolicyKind, seed: u64, st: State, mut log: RunLog, policy: &dyn Policy) -> SimOutput {
    let mut coflows: Vec<CoflowOutcome> = st.outcomes.into_values().collect();
    // Coflows never submitted (a dependency stalled) count as unfinished.
    for job in &st.workload.jobs {
        for c in &job.coflows {
            if st.stage[&c.id] == Stage::Waiting {
                coflows.push(CoflowOutcome {
                    id: c.id,
                    job: job.id,
                    arrival: f64::NAN,
                    finish: None,
                    deadline: c.deadline,
                    rejected: false,
                    bytes: c.bytes(),
                });
            }
        }
    }
    coflows.sort_by_key(|c| c.id);
    log.jobs = st
        .workload
        .jobs
        .iter()
        .map(|j| {
            let mine: Vec<&CoflowOutcome> = coflows.iter().filter(|c| c.job == j.id && !c.rejected).collect();
            let finish = if mine.is_empty() || mine.iter().any(|c| c.finish.is_none()) {
                None
            } else {
                mine.iter().filter_map(|c| c.finish).reduce(f64::max)
            };
            JobOutcome { id: j.id, arrival: j.arrival, finish }
        })
        .collect();
    log.coflows = coflows;
    log.lp_per_round = policy.lp_counts();
    let metrics = compute_metrics(&log);
    SimOutput { policy: kind, seed, metrics, log, trace: st.trace, schedule_trace: policy.schedule_trace() }
}

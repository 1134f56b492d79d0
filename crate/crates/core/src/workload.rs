//! Workload documents: jobs made of dependent coflows, plus scheduled WAN
//! events. Includes a seeded synthetic generator.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, LogNormal, Pareto};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coflow::{group_flows, Coflow, CoflowError, CoflowId, Flow, FlowDoc};
use crate::optimizer::{min_cct, Demand, OptimizerError, Residual};
use crate::scheduler::PathCache;
use crate::topology::{TopologyError, WanEvent, WanEventKind, WanGraph, BYTES_PER_GBPS};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("cannot parse workload: {0}")]
    Parse(String),
    #[error("invalid workload: {0}")]
    Invalid(String),
    #[error("duplicate job id {0}")]
    DuplicateJob(u64),
    #[error("duplicate coflow id {0}")]
    DuplicateCoflow(u64),
    #[error("coflow {coflow} depends on unknown coflow {dep}")]
    UnknownDependency { coflow: u64, dep: u64 },
    #[error("dependencies of job {0} contain a cycle")]
    Cycle(u64),
    #[error("spread {spread} exceeds the {nodes} datacenters")]
    Spread { spread: usize, nodes: usize },
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Coflow(#[from] CoflowError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

// ---------------------------------------------------------------------------
// Documents

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadDoc {
    pub jobs: Vec<JobDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wan_events: Vec<WanEventDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobDoc {
    pub id: u64,
    pub arrival_s: f64,
    /// Delay between a stage finishing and its dependents being submitted.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub compute_delay_s: f64,
    pub coflows: Vec<JobCoflowDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobCoflowDoc {
    pub id: u64,
    #[serde(default)]
    pub deps: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_s: Option<f64>,
    pub flows: Vec<FlowDoc>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WanEventKindDoc {
    LinkFail,
    LinkRecover,
    BandwidthChange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WanEventDoc {
    pub time_s: f64,
    pub kind: WanEventKindDoc,
    pub src: String,
    pub dst: String,
    /// New capacity for bandwidth changes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gbps: Option<f64>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

// ---------------------------------------------------------------------------
// Loaded form

#[derive(Clone, Debug, PartialEq)]
pub struct JobCoflow {
    pub id: CoflowId,
    pub deps: Vec<CoflowId>,
    /// Relative to the coflow's submission.
    pub deadline: Option<f64>,
    pub flows: Vec<Flow>,
}

impl JobCoflow {
    pub fn to_coflow(&self, arrival: f64) -> Result<Coflow, CoflowError> {
        Coflow::new(self.id, arrival, self.deadline, self.flows.clone())
    }

    pub fn bytes(&self) -> u64 {
        self.flows.iter().map(|f| f.volume).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub id: u64,
    pub arrival: f64,
    pub compute_delay: f64,
    pub coflows: Vec<JobCoflow>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Workload {
    pub jobs: Vec<Job>,
    pub wan_events: Vec<WanEvent>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Workload {
    pub fn coflow_count(&self) -> usize {
        self.jobs.iter().map(|j| j.coflows.len()).sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.jobs.iter().flat_map(|j| &j.coflows).map(JobCoflow::bytes).sum()
    }

    /// Wraps independent coflows as single-coflow jobs, job id = coflow id.
    pub fn from_coflows(coflows: &[Coflow], wan_events: Vec<WanEvent>) -> Self {
        let jobs = coflows
            .iter()
            .map(|c| Job {
                id: c.id.0,
                arrival: c.arrival,
                compute_delay: 0.0,
                coflows: vec![JobCoflow { id: c.id, deps: Vec::new(), deadline: c.deadline, flows: c.flows.clone() }],
            })
            .collect();
        Workload { jobs, wan_events, metadata: BTreeMap::new() }
    }

    pub fn to_document(&self, g: &WanGraph) -> WorkloadDoc {
        let jobs = self
            .jobs
            .iter()
            .map(|j| JobDoc {
                id: j.id,
                arrival_s: j.arrival,
                compute_delay_s: j.compute_delay,
                coflows: j
                    .coflows
                    .iter()
                    .map(|c| JobCoflowDoc {
                        id: c.id.0,
                        deps: c.deps.iter().map(|d| d.0).collect(),
                        deadline_s: c.deadline,
                        flows: c
                            .flows
                            .iter()
                            .map(|f| FlowDoc {
                                id: f.id,
                                src: g.node_name(f.src).to_string(),
                                dst: g.node_name(f.dst).to_string(),
                                bytes: f.volume,
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        let wan_events = self
            .wan_events
            .iter()
            .map(|e| {
                let l = g.link(e.link).expect("event link exists");
                let (kind, gbps) = match e.kind {
                    WanEventKind::LinkFail => (WanEventKindDoc::LinkFail, None),
                    WanEventKind::LinkRecover => (WanEventKindDoc::LinkRecover, None),
                    WanEventKind::BandwidthChange { new_capacity } => {
                        (WanEventKindDoc::BandwidthChange, Some(new_capacity / BYTES_PER_GBPS))
                    }
                };
                WanEventDoc {
                    time_s: e.time,
                    kind,
                    src: g.node_name(l.src).to_string(),
                    dst: g.node_name(l.dst).to_string(),
                    gbps,
                }
            })
            .collect();
        WorkloadDoc { jobs, wan_events, metadata: self.metadata.clone() }
    }
}

pub fn parse_workload(json: &str) -> Result<WorkloadDoc, WorkloadError> {
    serde_json::from_str(json).map_err(|e| WorkloadError::Parse(e.to_string()))
}

/// Parses and validates a workload document against a topology.
pub fn load_workload(json: &str, g: &WanGraph) -> Result<Workload, WorkloadError> {
    load(&parse_workload(json)?, g)
}

/// Validates a workload document: unique ids, known datacenters, positive
/// volumes, acyclic dependencies within each job.
pub fn load(doc: &WorkloadDoc, g: &WanGraph) -> Result<Workload, WorkloadError> {
    let mut job_ids = BTreeSet::new();
    let mut coflow_ids = BTreeSet::new();
    let mut jobs = Vec::with_capacity(doc.jobs.len());
    for jd in &doc.jobs {
        if !job_ids.insert(jd.id) {
            return Err(WorkloadError::DuplicateJob(jd.id));
        }
        if !(jd.arrival_s.is_finite() && jd.arrival_s >= 0.0) {
            return Err(WorkloadError::Invalid(format!("job {} arrival {}", jd.id, jd.arrival_s)));
        }
        if !(jd.compute_delay_s.is_finite() && jd.compute_delay_s >= 0.0) {
            return Err(WorkloadError::Invalid(format!("job {} compute delay {}", jd.id, jd.compute_delay_s)));
        }
        if jd.coflows.is_empty() {
            return Err(WorkloadError::Invalid(format!("job {} has no coflows", jd.id)));
        }
        let local: BTreeSet<u64> = jd.coflows.iter().map(|c| c.id).collect();
        let mut coflows = Vec::with_capacity(jd.coflows.len());
        for cd in &jd.coflows {
            if !coflow_ids.insert(cd.id) {
                return Err(WorkloadError::DuplicateCoflow(cd.id));
            }
            for &d in &cd.deps {
                if !local.contains(&d) || d == cd.id {
                    return Err(WorkloadError::UnknownDependency { coflow: cd.id, dep: d });
                }
            }
            if let Some(d) = cd.deadline_s {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(WorkloadError::Invalid(format!("coflow {} deadline {d}", cd.id)));
                }
            }
            let flows = cd.flows.iter().map(|f| f.to_flow(g)).collect::<Result<Vec<_>, _>>()?;
            group_flows(CoflowId(cd.id), &flows)?;
            coflows.push(JobCoflow {
                id: CoflowId(cd.id),
                deps: cd.deps.iter().map(|&d| CoflowId(d)).collect(),
                deadline: cd.deadline_s,
                flows,
            });
        }
        check_acyclic(jd.id, &coflows)?;
        jobs.push(Job { id: jd.id, arrival: jd.arrival_s, compute_delay: jd.compute_delay_s, coflows });
    }

    let mut wan_events = Vec::with_capacity(doc.wan_events.len());
    for (seq, ed) in doc.wan_events.iter().enumerate() {
        if !(ed.time_s.is_finite() && ed.time_s >= 0.0) {
            return Err(WorkloadError::Invalid(format!("WAN event time {}", ed.time_s)));
        }
        let link = g.link_by_names(&ed.src, &ed.dst)?;
        let kind = match ed.kind {
            WanEventKindDoc::LinkFail => WanEventKind::LinkFail,
            WanEventKindDoc::LinkRecover => WanEventKind::LinkRecover,
            WanEventKindDoc::BandwidthChange => {
                let gbps = ed
                    .gbps
                    .filter(|x| x.is_finite() && *x >= 0.0)
                    .ok_or_else(|| WorkloadError::Invalid(format!("bandwidth change on {}->{}", ed.src, ed.dst)))?;
                WanEventKind::BandwidthChange { new_capacity: gbps * BYTES_PER_GBPS }
            }
        };
        wan_events.push(WanEvent { time: ed.time_s, seq: seq as u64, kind, link });
    }
    Ok(Workload { jobs, wan_events, metadata: doc.metadata.clone() })
}

fn check_acyclic(job: u64, coflows: &[JobCoflow]) -> Result<(), WorkloadError> {
    let mut indeg: BTreeMap<CoflowId, usize> = coflows.iter().map(|c| (c.id, c.deps.len())).collect();
    let mut ready: Vec<CoflowId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&c, _)| c).collect();
    let mut done = 0;
    while let Some(c) = ready.pop() {
        done += 1;
        for other in coflows.iter().filter(|o| o.deps.contains(&c)) {
            let d = indeg.get_mut(&other.id).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(other.id);
            }
        }
    }
    if done == coflows.len() {
        Ok(())
    } else {
        Err(WorkloadError::Cycle(job))
    }
}

// ---------------------------------------------------------------------------
// Generator

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalProcess {
    Poisson { rate_per_s: f64 },
    Explicit { times_s: Vec<f64> },
}

/// Distribution of a coflow's total bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolumeDist {
    Uniform {
        min_bytes: f64,
        max_bytes: f64,
    },
    Lognormal {
        median_bytes: f64,
        sigma: f64,
    },
    Pareto {
        scale_bytes: f64,
        shape: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap_bytes: Option<f64>,
    },
}

/// Pareto shape for the heavy-tailed preset. Shapes near 1 put most of the
/// mass in the top decile only asymptotically; with 500 samples a shape of 0.6
/// capped at 1e4 x scale keeps the top decile at 80% or more of the bytes.
pub const HEAVY_TAIL_SHAPE: f64 = 0.6;
pub const HEAVY_TAIL_CAP: f64 = 1e4;

impl VolumeDist {
    /// Heavy-tailed preset where a small share of coflows carries most bytes.
    pub fn heavy_tailed(scale_bytes: f64) -> Self {
        VolumeDist::Pareto { scale_bytes, shape: HEAVY_TAIL_SHAPE, cap_bytes: Some(scale_bytes * HEAVY_TAIL_CAP) }
    }

    fn validate(&self) -> Result<(), WorkloadError> {
        let ok = match *self {
            VolumeDist::Uniform { min_bytes, max_bytes } => min_bytes >= 1.0 && max_bytes >= min_bytes,
            VolumeDist::Lognormal { median_bytes, sigma } => median_bytes >= 1.0 && sigma >= 0.0,
            VolumeDist::Pareto { scale_bytes, shape, cap_bytes } => {
                scale_bytes >= 1.0 && shape > 0.0 && cap_bytes.is_none_or(|c| c >= scale_bytes)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(WorkloadError::Spec(format!("bad volume distribution {self:?}")))
        }
    }

    fn sample(&self, rng: &mut StdRng) -> f64 {
        let v = match *self {
            VolumeDist::Uniform { min_bytes, max_bytes } => {
                if max_bytes > min_bytes {
                    rng.gen_range(min_bytes..=max_bytes)
                } else {
                    min_bytes
                }
            }
            VolumeDist::Lognormal { median_bytes, sigma } => {
                LogNormal::new(median_bytes.ln(), sigma).expect("validated").sample(rng)
            }
            VolumeDist::Pareto { scale_bytes, shape, cap_bytes } => {
                let x = Pareto::new(scale_bytes, shape).expect("validated").sample(rng);
                cap_bytes.map_or(x, |c| x.min(c))
            }
        };
        v.max(1.0)
    }
}

/// Parameters of the synthetic workload generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub jobs: usize,
    pub arrival: ArrivalProcess,
    pub volume: VolumeDist,
    /// Inclusive range of mapper tasks per stage.
    #[serde(default = "one_one")]
    pub mappers: [usize; 2],
    /// Inclusive range of reducer tasks per stage.
    #[serde(default = "one_one")]
    pub reducers: [usize; 2],
    /// Inclusive range of chain length (coflows per job).
    #[serde(default = "one_one")]
    pub stages: [usize; 2],
    /// Most datacenters a job may span; defaults to ceil(N/2) + 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<usize>,
    /// Deadline as a multiple of the empty-network completion time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub compute_delay_s: f64,
    /// Paths per pair used when computing deadlines.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one_one() -> [usize; 2] {
    [1, 1]
}

fn default_k() -> usize {
    15
}

impl WorkloadSpec {
    /// A spec with Poisson arrivals and single-stage, single-task jobs.
    pub fn poisson(jobs: usize, rate_per_s: f64, volume: VolumeDist, seed: u64) -> Self {
        WorkloadSpec {
            jobs,
            arrival: ArrivalProcess::Poisson { rate_per_s },
            volume,
            mappers: one_one(),
            reducers: one_one(),
            stages: one_one(),
            spread: None,
            deadline_factor: None,
            compute_delay_s: 0.0,
            k: default_k(),
            seed,
        }
    }

    /// Same spec with arrivals `m` times as frequent.
    pub fn with_arrival_multiplier(&self, m: f64) -> Self {
        let mut s = self.clone();
        s.arrival = match &self.arrival {
            ArrivalProcess::Poisson { rate_per_s } => ArrivalProcess::Poisson { rate_per_s: rate_per_s * m },
            ArrivalProcess::Explicit { times_s } => {
                ArrivalProcess::Explicit { times_s: times_s.iter().map(|t| t / m).collect() }
            }
        };
        s
    }

    pub fn effective_spread(&self, nodes: usize) -> usize {
        self.spread.unwrap_or(nodes.div_ceil(2) + 1).min(nodes)
    }

    fn validate(&self, nodes: usize) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::Spec(m));
        if let Some(s) = self.spread {
            if s > nodes {
                return Err(WorkloadError::Spread { spread: s, nodes });
            }
            if s < 2 {
                return bad(format!("spread {s} leaves no inter-datacenter pairs"));
            }
        }
        if nodes < 2 {
            return bad("topology needs at least two datacenters".into());
        }
        for (name, r, max) in [("mappers", self.mappers, usize::MAX), ("reducers", self.reducers, usize::MAX), ("stages", self.stages, 6)] {
            if r[0] == 0 || r[1] < r[0] || r[1] > max {
                return bad(format!("{name} range {r:?}"));
            }
        }
        match &self.arrival {
            ArrivalProcess::Poisson { rate_per_s } if !(*rate_per_s > 0.0 && rate_per_s.is_finite()) => {
                return bad(format!("arrival rate {rate_per_s}"));
            }
            ArrivalProcess::Explicit { times_s } if times_s.len() != self.jobs => {
                return bad(format!("{} explicit arrival times for {} jobs", times_s.len(), self.jobs));
            }
            ArrivalProcess::Explicit { times_s } if times_s.iter().any(|t| !(t.is_finite() && *t >= 0.0)) => {
                return bad("negative or non-finite arrival time".into());
            }
            _ => {}
        }
        if let Some(d) = self.deadline_factor {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("deadline factor {d}"));
            }
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        self.volume.validate()
    }
}

/// Generates a workload document; a pure function of `spec` and `g`.
pub fn generate(spec: &WorkloadSpec, g: &WanGraph) -> Result<WorkloadDoc, WorkloadError> {
    let n = g.node_count();
    spec.validate(n)?;
    let spread = spec.effective_spread(n);
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let mut paths = PathCache::new(spec.k);
    let free = Residual::from_graph(g);

    let mut t = 0.0;
    let mut next_coflow = 1u64;
    let mut jobs = Vec::with_capacity(spec.jobs);
    for j in 0..spec.jobs {
        let arrival = match &spec.arrival {
            ArrivalProcess::Poisson { rate_per_s } => {
                t += Exp::new(*rate_per_s).expect("validated").sample(&mut rng);
                t
            }
            ArrivalProcess::Explicit { times_s } => times_s[j],
        };
        // Datacenters this job may touch.
        let mut dcs: Vec<usize> = (0..n).collect();
        for i in 0..spread {
            let k = rng.gen_range(i..n);
            dcs.swap(i, k);
        }
        let width = rng.gen_range(2..=spread);
        let dcs = &dcs[..width];

        let stages = rng.gen_range(spec.stages[0]..=spec.stages[1]);
        let mut coflows = Vec::with_capacity(stages);
        for s in 0..stages {
            let id = next_coflow;
            next_coflow += 1;
            let flows = place_flows(spec, dcs, g, &mut rng);
            let deadline_s = match spec.deadline_factor {
                None => None,
                Some(d) => {
                    let demands = flow_demands(id, &flows, g);
                    let mask = paths.mask(g, demands.iter().map(|x| (x.key.src, x.key.dst)));
                    min_cct(&demands, g, &free, &mask)?.gamma().map(|gamma| d * gamma)
                }
            };
            coflows.push(JobCoflowDoc {
                id,
                deps: if s == 0 { Vec::new() } else { vec![id - 1] },
                deadline_s,
                flows,
            });
        }
        jobs.push(JobDoc { id: j as u64 + 1, arrival_s: arrival, compute_delay_s: spec.compute_delay_s, coflows });
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("generator".to_string(), serde_json::to_value(spec).expect("spec serializes"));
    Ok(WorkloadDoc { jobs, wan_events: Vec::new(), metadata })
}

fn place_flows(spec: &WorkloadSpec, dcs: &[usize], g: &WanGraph, rng: &mut StdRng) -> Vec<FlowDoc> {
    let total = spec.volume.sample(rng);
    let m = rng.gen_range(spec.mappers[0]..=spec.mappers[1]);
    let r = rng.gen_range(spec.reducers[0]..=spec.reducers[1]);
    let maps: Vec<usize> = (0..m).map(|_| dcs[rng.gen_range(0..dcs.len())]).collect();
    let mut reds: Vec<usize> = (0..r).map(|_| dcs[rng.gen_range(0..dcs.len())]).collect();
    if maps.iter().all(|a| reds.iter().all(|b| a == b)) {
        // Everything landed in one datacenter; move the first reducer.
        let other = dcs.iter().copied().find(|&d| d != maps[0]).expect("spread >= 2");
        reds[0] = other;
    }
    let pairs: Vec<(usize, usize)> =
        maps.iter().flat_map(|&a| reds.iter().map(move |&b| (a, b))).filter(|(a, b)| a != b).collect();
    let weights: Vec<f64> = pairs.iter().map(|_| rng.gen_range(0.5..1.5)).collect();
    let wsum: f64 = weights.iter().sum();
    pairs
        .iter()
        .zip(&weights)
        .enumerate()
        .map(|(i, (&(a, b), w))| FlowDoc {
            id: i as u64 + 1,
            src: g.node_name(a).to_string(),
            dst: g.node_name(b).to_string(),
            bytes: ((total * w / wsum).round() as u64).max(1),
        })
        .collect()
}

fn flow_demands(id: u64, flows: &[FlowDoc], g: &WanGraph) -> Vec<Demand> {
    let mut by_pair: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for f in flows {
        let s = g.node_id(&f.src).expect("generated from graph");
        let d = g.node_id(&f.dst).expect("generated from graph");
        *by_pair.entry((s, d)).or_default() += f.bytes as f64;
    }
    by_pair
        .into_iter()
        .map(|((src, dst), volume)| Demand { key: crate::coflow::GroupKey { coflow: CoflowId(id), src, dst }, volume })
        .collect()
}

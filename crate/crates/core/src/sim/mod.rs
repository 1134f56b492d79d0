//! Deterministic flow-level simulator.
//!
//! Rates stay constant between events and remaining volumes drain linearly.
//! Events are coflow submissions (released as job dependencies finish), WAN
//! events, flow completions and, with a nonzero decision delay, delayed rate
//! updates. Each policy maps the active flows to per-path rates.

mod engine;
mod fairness;
mod metrics;
mod policy;
mod trace;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coflow::{CoflowError, CoflowId, FlowId, GroupKey};
use crate::optimizer::OptimizerError;
use crate::scheduler::{SchedulerConfig, SchedulerError};
use crate::topology::{LinkId, NodeId, TopologyError, WanGraph};
use crate::workload::WorkloadError;

pub use engine::{run, SimOutput};
pub use fairness::progressive_fill;
pub use metrics::{compute_metrics, metrics_csv, CoflowOutcome, JobOutcome, Metrics, MetricsRow, RunLog};
pub use trace::{trace_jsonl, TraceRecord};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Coflow(#[from] CoflowError),
    #[error("invalid simulator config: {0}")]
    Config(String),
    #[error("simulation exceeded {0} events")]
    EventLimit(usize),
}

/// Rate allocation policy under test.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Joint coflow scheduling and multipath routing.
    Terra,
    /// Per-flow max-min fairness on one fixed shortest path.
    Perflow,
    /// Every flow split into subflows over k paths, max-min fair per subflow.
    Multipath,
    /// Coflow-aware ordering and rates computed on aggregate datacenter
    /// ports, then sent on fixed shortest paths.
    Varys,
    /// Max-min fair multi-commodity flow over all FlowGroups.
    SwanMcf,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::Terra, PolicyKind::Perflow, PolicyKind::Multipath, PolicyKind::Varys, PolicyKind::SwanMcf];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Terra => "terra",
            PolicyKind::Perflow => "perflow",
            PolicyKind::Multipath => "multipath",
            PolicyKind::Varys => "varys",
            PolicyKind::SwanMcf => "swan_mcf",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

/// How a FlowGroup's rate is divided among its member flows.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraGroupOrder {
    /// Equal share to every unfinished flow.
    #[default]
    FairShare,
    /// Everything to the unfinished flow with the lowest id.
    Fifo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheduler: SchedulerConfig,
    pub intra_group: IntraGroupOrder,
    /// Seconds between a decision and its rates taking effect.
    pub decision_delay: f64,
    /// Coflows smaller than this bypass the scheduler and share leftover
    /// capacity per flow.
    pub bypass_bytes: u64,
    pub max_events: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scheduler: SchedulerConfig::default(),
            intra_group: IntraGroupOrder::FairShare,
            decision_delay: 0.0,
            bypass_bytes: 0,
            max_events: 5_000_000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.scheduler.validate()?;
        if !(self.decision_delay >= 0.0 && self.decision_delay.is_finite()) {
            return Err(SimError::Config(format!("decision delay {}", self.decision_delay)));
        }
        if self.max_events == 0 {
            return Err(SimError::Config("max_events must be positive".into()));
        }
        Ok(())
    }
}

pub type FlowKey = (CoflowId, FlowId);

/// Rate along one path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathShare {
    pub links: Vec<LinkId>,
    pub rate: f64,
}

/// Per-flow path rates.
pub type FlowRates = BTreeMap<FlowKey, Vec<PathShare>>;

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveFlow {
    pub src: NodeId,
    pub dst: NodeId,
    pub volume: u64,
    pub remaining: f64,
    pub delivered: f64,
}

impl ActiveFlow {
    pub fn group(&self, key: FlowKey) -> GroupKey {
        GroupKey { coflow: key.0, src: self.src, dst: self.dst }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveCoflow {
    pub job: u64,
    pub arrival: f64,
    pub deadline: Option<f64>,
    pub bytes: u64,
}

/// What a policy may observe.
pub struct View<'a> {
    pub graph: &'a WanGraph,
    pub flows: &'a BTreeMap<FlowKey, ActiveFlow>,
    pub coflows: &'a BTreeMap<CoflowId, ActiveCoflow>,
}

impl View<'_> {
    /// Remaining bytes per unfinished FlowGroup.
    pub fn group_remaining(&self) -> BTreeMap<GroupKey, f64> {
        let mut out: BTreeMap<GroupKey, f64> = BTreeMap::new();
        for (&k, f) in self.flows {
            *out.entry(f.group(k)).or_default() += f.remaining;
        }
        out
    }
}

//! Priority scheduling of coflows over the WAN.
//!
//! [`alloc_bandwidth`] and [`minimize_cct_offline`] are pure functions over a
//! fixed set of coflows. [`Scheduler`] is the online state machine that keeps
//! admitted deadline reservations, reacts to arrivals, completions and WAN
//! events, and records one [`RoundRecord`] per scheduling round.

mod alloc;
mod online;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coflow::{CoflowError, CoflowId, GroupKey};
use crate::optimizer::{Allocation, GroupAllocation, OptimizerError, PathRate};
use crate::topology::{LinkId, TopologyError, WanGraph};

pub use alloc::{alloc_bandwidth, minimize_cct_offline, standalone_gamma, CoflowPlan, PathCache};
pub use online::{Admission, EventOutcome, Scheduler, SchedulerEvent};
pub use trace::{CoflowRecord, PathRecord, RoundRecord};

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("invalid scheduler config: {0}")]
    InvalidConfig(String),
    #[error("{0} was already submitted")]
    DuplicateCoflow(CoflowId),
    #[error("unknown {0}")]
    UnknownCoflow(CoflowId),
    #[error("unknown flow group {0:?}")]
    UnknownGroup(GroupKey),
    #[error(transparent)]
    Coflow(#[from] CoflowError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Tunables of the scheduler.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// Share of every link kept back for coflows that could not be scheduled whole.
    pub alpha: f64,
    /// Relative bandwidth change that triggers re-optimization.
    pub rho: f64,
    /// Admission slack on deadlines, > 1.
    pub eta: f64,
    /// Paths per datacenter pair.
    pub k: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig { alpha: 0.1, rho: 0.25, eta: 1.1, k: 15 }
    }
}

impl SchedulerConfig {
    pub fn new(alpha: f64, rho: f64, eta: f64, k: usize) -> Result<Self, SchedulerError> {
        let c = SchedulerConfig { alpha, rho, eta, k };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SchedulerError> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(SchedulerError::InvalidConfig(format!("alpha {} not in [0, 1)", self.alpha)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(SchedulerError::InvalidConfig(format!("rho {} not in (0, 1)", self.rho)));
        }
        if !(self.eta > 1.0) || !self.eta.is_finite() {
            return Err(SchedulerError::InvalidConfig(format!("eta {} must exceed 1", self.eta)));
        }
        if self.k == 0 {
            return Err(SchedulerError::InvalidConfig("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rates decided by one scheduling round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schedule {
    pub time: f64,
    /// Coflows in the priority order used for this round.
    pub order: Vec<CoflowId>,
    /// Whole-coflow allocations, including pinned deadline reservations.
    pub allocations: BTreeMap<CoflowId, Allocation>,
    /// Coflows that could not be scheduled in entirety.
    pub failed: BTreeSet<CoflowId>,
    /// Extra group rates from the max-min fair pass over leftover capacity.
    pub work_conservation: Vec<GroupAllocation>,
    pub rejected: BTreeSet<CoflowId>,
}

impl Schedule {
    pub fn empty(time: f64) -> Self {
        Schedule { time, ..Default::default() }
    }

    fn group_parts(&self) -> impl Iterator<Item = &GroupAllocation> {
        self.allocations.values().flat_map(|a| a.groups.iter()).chain(self.work_conservation.iter())
    }

    /// Total rate of a FlowGroup across the priority and leftover passes.
    pub fn group_rate(&self, key: GroupKey) -> f64 {
        self.group_parts().filter(|g| g.key == key).map(|g| g.rate).sum()
    }

    /// Paths of every FlowGroup with positive rate, identical paths merged.
    pub fn group_paths(&self) -> BTreeMap<GroupKey, Vec<PathRate>> {
        let mut out: BTreeMap<GroupKey, Vec<PathRate>> = BTreeMap::new();
        for ga in self.group_parts() {
            let entry = out.entry(ga.key).or_default();
            for p in &ga.paths {
                if p.rate <= 0.0 {
                    continue;
                }
                match entry.iter_mut().find(|q| q.links == p.links) {
                    Some(q) => q.rate += p.rate,
                    None => entry.push(p.clone()),
                }
            }
        }
        out.retain(|_, v| !v.is_empty());
        out
    }

    pub fn coflow_rate(&self, id: CoflowId) -> f64 {
        self.group_parts().filter(|g| g.key.coflow == id).map(|g| g.rate).sum()
    }

    pub fn link_usage(&self, n_links: usize) -> Vec<f64> {
        let mut usage = vec![0.0; n_links];
        for ga in self.group_parts() {
            ga.add_usage(&mut usage);
        }
        usage
    }

    /// Links carrying any rate of `id`.
    pub fn coflow_links(&self, id: CoflowId) -> BTreeSet<LinkId> {
        self.group_parts()
            .filter(|g| g.key.coflow == id)
            .flat_map(|g| g.arcs.iter().filter(|a| a.1 > 0.0).map(|a| a.0))
            .collect()
    }

    /// Largest overload relative to link capacity; zero or less when safe.
    pub fn max_overload(&self, g: &WanGraph) -> f64 {
        let usage = self.link_usage(g.link_count());
        g.link_ids()
            .map(|l| {
                let cap = g.link(l).unwrap().effective_capacity();
                (usage[l.0] - cap) / cap.max(1.0)
            })
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }
}

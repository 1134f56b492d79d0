//! Rate and route optimization over FlowGroups.
//!
//! * [`min_cct`] finds the smallest completion time of one coflow on a residual
//!   graph with every FlowGroup making equal progress, routing each group over
//!   any mix of permitted arcs.
//! * [`decompose_paths`] turns a per-group arc-rate matrix into end-to-end paths.
//! * [`max_min_mcf`] is the max-min fair multi-commodity flow used for work
//!   conservation and as the application-agnostic baseline.

mod decompose;
mod mcf;
mod min_cct;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::coflow::{CoflowId, GroupKey};
use crate::lp::LpError;
use crate::topology::{LinkId, NodeId, WanGraph, CAPACITY_EPS};

pub use decompose::{decompose_paths, Decomposition};
pub use mcf::max_min_mcf;
pub use min_cct::{min_cct, CctResult};

/// Tolerance on rate identities, relative to the rates involved.
pub const RATE_TOL: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("malformed arc mask: {0}")]
    MalformedMask(String),
    #[error("demand of {0:?} must be positive")]
    InvalidDemand(GroupKey),
    #[error("flow conservation violated by {violation:e} at node {node}")]
    ConservationViolated { node: NodeId, violation: f64 },
    #[error("circulating rate {0:e} exceeds tolerance")]
    CycleTooLarge(f64),
}

/// Remaining volume of one FlowGroup handed to the optimizer.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Demand {
    pub key: GroupKey,
    /// Bytes.
    pub volume: f64,
}

/// Per-link capacity left for allocation, bytes/s, indexed by [`LinkId`].
#[derive(Clone, Debug, PartialEq)]
pub struct Residual(Vec<f64>);

impl Residual {
    pub fn from_graph(g: &WanGraph) -> Self {
        Residual(g.capacities())
    }

    pub fn from_vec(v: Vec<f64>) -> Self {
        Residual(v)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Residual(self.0.iter().map(|c| c * factor).collect())
    }

    pub fn get(&self, l: LinkId) -> f64 {
        self.0[l.0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Subtracts per-link usage. Values within the capacity tolerance of zero
    /// are clamped; returns the largest relative overdraft seen.
    pub fn subtract(&mut self, usage: &[f64], reference: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, (c, u)) in self.0.iter_mut().zip(usage).enumerate() {
            *c -= u;
            if *c < 0.0 {
                let scale = reference.get(i).copied().unwrap_or(1.0).max(1.0);
                worst = worst.max(-*c / scale);
                *c = 0.0;
            }
        }
        worst
    }

    pub fn subtract_allocation(&mut self, alloc: &Allocation, reference: &[f64]) -> f64 {
        let usage = alloc.link_usage(self.0.len());
        self.subtract(&usage, reference)
    }

    pub fn subtract_groups(&mut self, groups: &[GroupAllocation], reference: &[f64]) -> f64 {
        let mut usage = vec![0.0; self.0.len()];
        for g in groups {
            g.add_usage(&mut usage);
        }
        self.subtract(&usage, reference)
    }
}

/// An end-to-end path carrying a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRate {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    /// Bytes/s.
    pub rate: f64,
}

/// Rates of one FlowGroup: per-arc and decomposed into paths.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAllocation {
    pub key: GroupKey,
    /// Total sending rate, bytes/s.
    pub rate: f64,
    /// Positive arc rates sorted by link id.
    pub arcs: Vec<(LinkId, f64)>,
    pub paths: Vec<PathRate>,
}

impl GroupAllocation {
    pub fn add_usage(&self, usage: &mut [f64]) {
        for &(l, r) in &self.arcs {
            usage[l.0] += r;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.rate *= factor;
        for a in &mut self.arcs {
            a.1 *= factor;
        }
        for p in &mut self.paths {
            p.rate *= factor;
        }
    }

    /// Builds a group allocation from paths, recomputing arcs and total rate.
    pub fn from_paths(key: GroupKey, paths: Vec<PathRate>) -> Self {
        let mut arcs: BTreeMap<LinkId, f64> = BTreeMap::new();
        for p in &paths {
            for &l in &p.links {
                *arcs.entry(l).or_default() += p.rate;
            }
        }
        let rate = paths.iter().map(|p| p.rate).sum();
        GroupAllocation { key, rate, arcs: arcs.into_iter().collect(), paths }
    }
}

/// Result of scheduling one coflow: its completion-time bound and group rates.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    pub coflow: CoflowId,
    /// Seconds until every FlowGroup finishes at these rates.
    pub gamma: f64,
    pub groups: Vec<GroupAllocation>,
}

impl Allocation {
    pub fn link_usage(&self, n_links: usize) -> Vec<f64> {
        let mut usage = vec![0.0; n_links];
        for g in &self.groups {
            g.add_usage(&mut usage);
        }
        usage
    }

    /// Multiplies every rate by `factor`; the completion time stretches accordingly.
    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.groups {
            g.scale(factor);
        }
        self.gamma /= factor;
    }

    pub fn links(&self) -> BTreeSet<LinkId> {
        self.groups.iter().flat_map(|g| g.arcs.iter().map(|a| a.0)).collect()
    }

    /// Checks demand, conservation, capacity and path-sum identities.
    pub fn check(
        &self,
        g: &WanGraph,
        demands: &[Demand],
        residual: &Residual,
    ) -> Result<(), String> {
        let mut usage = vec![0.0; g.link_count()];
        for d in demands {
            let ga = self
                .groups
                .iter()
                .find(|x| x.key == d.key)
                .ok_or_else(|| format!("missing group {:?}", d.key))?;
            let want = d.volume / self.gamma;
            let tol = RATE_TOL * want.max(1.0);
            let mut net = vec![0.0; g.node_count()];
            for &(l, r) in &ga.arcs {
                if r < 0.0 {
                    return Err(format!("negative rate on {}", g.link_name(l)));
                }
                let link = g.link(l).unwrap();
                net[link.src] += r;
                net[link.dst] -= r;
                usage[l.0] += r;
            }
            let out_src: f64 = g.out_links(d.key.src).iter().map(|&l| arc(ga, l)).sum();
            let in_dst: f64 = g.in_links(d.key.dst).iter().map(|&l| arc(ga, l)).sum();
            if (out_src - want).abs() > tol || (in_dst - want).abs() > tol {
                return Err(format!("group {:?}: out {out_src} in {in_dst} want {want}", d.key));
            }
            for (v, &x) in net.iter().enumerate() {
                if v != d.key.src && v != d.key.dst && x.abs() > tol {
                    return Err(format!("conservation at {}: {x}", g.node_name(v)));
                }
            }
            let path_sum: f64 = ga.paths.iter().map(|p| p.rate).sum();
            if (path_sum - out_src).abs() > tol || ga.paths.iter().any(|p| p.rate <= 0.0) {
                return Err(format!("paths of {:?} sum to {path_sum}, outflow {out_src}", d.key));
            }
        }
        for l in g.link_ids() {
            let cap = residual.get(l);
            if usage[l.0] > cap + RATE_TOL * cap.max(1.0) {
                return Err(format!("{} over capacity: {} > {cap}", g.link_name(l), usage[l.0]));
            }
        }
        Ok(())
    }
}

fn arc(ga: &GroupAllocation, l: LinkId) -> f64 {
    ga.arcs.iter().find(|a| a.0 == l).map_or(0.0, |a| a.1)
}

/// Permitted arcs per (src, dst) endpoint pair; arcs outside the mask carry no
/// rate for groups of that pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ArcMask {
    arcs: BTreeMap<(NodeId, NodeId), BTreeSet<LinkId>>,
}

impl ArcMask {
    pub fn new() -> Self {
        Self::default()
    }

    /// Union of the arcs on the `k` shortest paths of each pair.
    pub fn from_k_paths(g: &WanGraph, pairs: impl IntoIterator<Item = (NodeId, NodeId)>, k: usize) -> Self {
        let mut m = ArcMask::new();
        for (s, d) in pairs {
            let set: BTreeSet<LinkId> =
                g.k_shortest_paths(s, d, k).into_iter().flat_map(|p| p.links).collect();
            m.arcs.insert((s, d), set);
        }
        m
    }

    /// Every up link is permitted for each pair.
    pub fn unrestricted(g: &WanGraph, pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let all: BTreeSet<LinkId> = g.link_ids().filter(|&l| g.link(l).unwrap().up).collect();
        let mut m = ArcMask::new();
        for p in pairs {
            m.arcs.insert(p, all.clone());
        }
        m
    }

    pub fn insert(&mut self, pair: (NodeId, NodeId), arcs: impl IntoIterator<Item = LinkId>) {
        self.arcs.insert(pair, arcs.into_iter().collect());
    }

    pub fn get(&self, pair: (NodeId, NodeId)) -> Option<&BTreeSet<LinkId>> {
        self.arcs.get(&pair)
    }

    pub fn contains_pair(&self, pair: (NodeId, NodeId)) -> bool {
        self.arcs.contains_key(&pair)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.arcs.keys().copied()
    }

    pub fn validate(&self, g: &WanGraph) -> Result<(), OptimizerError> {
        for (&(s, d), set) in &self.arcs {
            if s >= g.node_count() || d >= g.node_count() {
                return Err(OptimizerError::MalformedMask(format!("pair ({s}, {d}) out of range")));
            }
            for &l in set {
                match g.link(l) {
                    None => return Err(OptimizerError::MalformedMask(format!("{l} does not exist"))),
                    Some(link) if !link.up => {
                        return Err(OptimizerError::MalformedMask(format!(
                            "{} is down",
                            g.link_name(l)
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Arcs usable by a group: permitted, with positive residual, not entering
    /// the source and not leaving the destination.
    pub(crate) fn usable_arcs(
        &self,
        g: &WanGraph,
        residual: &Residual,
        src: NodeId,
        dst: NodeId,
        floor: f64,
    ) -> Vec<LinkId> {
        let Some(set) = self.arcs.get(&(src, dst)) else {
            return Vec::new();
        };
        let cand: Vec<LinkId> = set
            .iter()
            .copied()
            .filter(|&l| {
                let link = g.link(l).unwrap();
                link.dst != src && link.src != dst && residual.get(l) > floor
            })
            .collect();
        prune_to_st_arcs(g, &cand, src, dst)
    }
}

/// Keeps only arcs that lie on some src->dst walk within `arcs`.
fn prune_to_st_arcs(g: &WanGraph, arcs: &[LinkId], src: NodeId, dst: NodeId) -> Vec<LinkId> {
    let n = g.node_count();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let start = if forward { src } else { dst };
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            for &l in arcs {
                let link = g.link(l).unwrap();
                let (a, b) = if forward { (link.src, link.dst) } else { (link.dst, link.src) };
                if a == u && !seen[b] {
                    seen[b] = true;
                    q.push_back(b);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    if !fwd[dst] {
        return Vec::new();
    }
    let bwd = reach(false);
    arcs.iter()
        .copied()
        .filter(|&l| {
            let link = g.link(l).unwrap();
            fwd[link.src] && bwd[link.dst]
        })
        .collect()
}

/// Capacity floor below which an arc counts as saturated.
pub(crate) fn capacity_floor(residual: &Residual) -> f64 {
    let max = residual.as_slice().iter().copied().fold(0.0, f64::max);
    max * CAPACITY_EPS * 10.0
}

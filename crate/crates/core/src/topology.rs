//! Inter-datacenter WAN graph, WAN events and candidate path enumeration.
//!
//! Every ordered pair of datacenters carries at most one logical link; parallel
//! physical links are merged by summing their capacities when the topology is
//! loaded. Capacities are stored in bytes per second.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bytes per second carried by a 1 Gbps link.
pub const BYTES_PER_GBPS: f64 = 1.25e8;

/// Relative tolerance used for capacity comparisons.
pub const CAPACITY_EPS: f64 = 1e-9;

const DEFAULT_LATENCY_MS: f64 = 1.0;

pub type NodeId = usize;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub usize);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "link#{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("malformed topology document: {0}")]
    Malformed(String),
    #[error("negative capacity on link {src}->{dst}")]
    NegativeCapacity { src: String, dst: String },
    #[error("invalid latency on link {src}->{dst}")]
    InvalidLatency { src: String, dst: String },
    #[error("link references unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown {0}")]
    UnknownLink(LinkId),
    #[error("no link {0}->{1}")]
    NoSuchLink(String, String),
    #[error("bandwidth change to negative capacity on {0}")]
    NegativeBandwidthChange(LinkId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    /// Current capacity in bytes/s, ignoring the `up` flag.
    pub capacity: f64,
    /// Propagation latency in seconds; only used to rank paths.
    pub latency: f64,
    pub up: bool,
}

impl Link {
    /// Capacity usable right now: zero while the link is down.
    pub fn effective_capacity(&self) -> f64 {
        if self.up {
            self.capacity
        } else {
            0.0
        }
    }
}

/// Directed graph of datacenters joined by logical links.
#[derive(Clone, Debug, Default)]
pub struct WanGraph {
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    links: Vec<Link>,
    by_pair: BTreeMap<(NodeId, NodeId), LinkId>,
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
}

impl WanGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str) -> Result<NodeId, TopologyError> {
        if self.index.contains_key(name) {
            return Err(TopologyError::DuplicateNode(name.to_string()));
        }
        let id = self.nodes.len();
        self.nodes.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.out_links.push(Vec::new());
        self.in_links.push(Vec::new());
        Ok(id)
    }

    /// Adds a directed link, merging it into an existing logical link between the
    /// same ordered pair by summing capacities. The merged latency is the smaller one.
    pub fn add_link(
        &mut self,
        src: NodeId,
        dst: NodeId,
        capacity: f64,
        latency: f64,
    ) -> Result<LinkId, TopologyError> {
        let (sname, dname) = (self.node_name(src).to_string(), self.node_name(dst).to_string());
        if src == dst {
            return Err(TopologyError::SelfLoop(sname));
        }
        if !(capacity >= 0.0) || !capacity.is_finite() {
            return Err(TopologyError::NegativeCapacity { src: sname, dst: dname });
        }
        if !(latency >= 0.0) || !latency.is_finite() {
            return Err(TopologyError::InvalidLatency { src: sname, dst: dname });
        }
        if let Some(&id) = self.by_pair.get(&(src, dst)) {
            let link = &mut self.links[id.0];
            link.capacity += capacity;
            link.latency = link.latency.min(latency);
            return Ok(id);
        }
        let id = LinkId(self.links.len());
        self.links.push(Link { src, dst, capacity, latency, up: true });
        self.by_pair.insert((src, dst), id);
        self.out_links[src].push(id);
        self.in_links[dst].push(id);
        Ok(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id]
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> Option<&Link> {
        self.links.get(id.0)
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> {
        (0..self.links.len()).map(LinkId)
    }

    pub fn link_between(&self, src: NodeId, dst: NodeId) -> Option<LinkId> {
        self.by_pair.get(&(src, dst)).copied()
    }

    /// Looks a link up by endpoint names.
    pub fn link_by_names(&self, src: &str, dst: &str) -> Result<LinkId, TopologyError> {
        let s = self.node_id(src).ok_or_else(|| TopologyError::UnknownNode(src.into()))?;
        let d = self.node_id(dst).ok_or_else(|| TopologyError::UnknownNode(dst.into()))?;
        self.link_between(s, d)
            .ok_or_else(|| TopologyError::NoSuchLink(src.into(), dst.into()))
    }

    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node]
    }

    pub fn in_links(&self, node: NodeId) -> &[LinkId] {
        &self.in_links[node]
    }

    pub fn link_name(&self, id: LinkId) -> String {
        let l = &self.links[id.0];
        format!("{}->{}", self.nodes[l.src], self.nodes[l.dst])
    }

    /// Effective capacities (zero for failed links), indexed by link id.
    pub fn capacities(&self) -> Vec<f64> {
        self.links.iter().map(Link::effective_capacity).collect()
    }

    pub fn max_capacity(&self) -> f64 {
        self.links.iter().map(Link::effective_capacity).fold(0.0, f64::max)
    }

    pub fn total_capacity(&self) -> f64 {
        self.links.iter().map(Link::effective_capacity).sum()
    }

    /// Returns a copy whose link capacities are multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> WanGraph {
        let mut g = self.clone();
        for l in &mut g.links {
            l.capacity *= factor;
        }
        g
    }

    /// Sum of link latencies along a node sequence, or `None` if a hop is missing.
    pub fn path_distance(&self, nodes: &[NodeId]) -> Option<f64> {
        let mut d = 0.0;
        for w in nodes.windows(2) {
            d += self.links[self.link_between(w[0], w[1])?.0].latency;
        }
        Some(d)
    }

    /// Applies a WAN event in place. `LinkRecover` restores the last configured
    /// capacity, which is kept in `capacity` while the link is down.
    pub fn apply_event(&mut self, event: &WanEvent) -> Result<(), TopologyError> {
        let link = self
            .links
            .get_mut(event.link.0)
            .ok_or(TopologyError::UnknownLink(event.link))?;
        match event.kind {
            WanEventKind::LinkFail => link.up = false,
            WanEventKind::LinkRecover => link.up = true,
            WanEventKind::BandwidthChange { new_capacity } => {
                if !(new_capacity >= 0.0) {
                    return Err(TopologyError::NegativeBandwidthChange(event.link));
                }
                link.capacity = new_capacity;
            }
        }
        Ok(())
    }

    /// Up to `k` loop-free paths from `src` to `dst` over up links, ordered by
    /// (latency sum, hop count, node-name sequence). Yen's algorithm over a
    /// label-setting search that uses the same total order.
    pub fn k_shortest_paths(&self, src: NodeId, dst: NodeId, k: usize) -> Vec<WanPath> {
        if src == dst || k == 0 || src >= self.node_count() || dst >= self.node_count() {
            return Vec::new();
        }
        let no_nodes = vec![false; self.node_count()];
        let Some(first) = self.best_path(src, dst, &no_nodes, &BTreeSet::new()) else {
            return Vec::new();
        };
        let mut accepted = vec![first];
        let mut candidates: Vec<WanPath> = Vec::new();
        while accepted.len() < k {
            let prev = accepted.last().unwrap().clone();
            for spur_idx in 0..prev.nodes.len() - 1 {
                let spur = prev.nodes[spur_idx];
                let root = &prev.nodes[..=spur_idx];
                let mut banned_links = BTreeSet::new();
                for p in &accepted {
                    if p.nodes.len() > spur_idx + 1 && &p.nodes[..=spur_idx] == root {
                        banned_links.insert(p.links[spur_idx]);
                    }
                }
                let mut banned_nodes = vec![false; self.node_count()];
                for &n in &root[..spur_idx] {
                    banned_nodes[n] = true;
                }
                if let Some(spur_path) = self.best_path(spur, dst, &banned_nodes, &banned_links)
                {
                    let mut nodes = root[..spur_idx].to_vec();
                    nodes.extend_from_slice(&spur_path.nodes);
                    let path = self.make_path(nodes);
                    if !accepted.iter().any(|p| p.nodes == path.nodes)
                        && !candidates.iter().any(|p| p.nodes == path.nodes)
                    {
                        candidates.push(path);
                    }
                }
            }
            if candidates.is_empty() {
                break;
            }
            let best = (0..candidates.len())
                .min_by(|&a, &b| self.compare_paths(&candidates[a], &candidates[b]))
                .unwrap();
            accepted.push(candidates.swap_remove(best));
        }
        accepted
    }

    fn make_path(&self, nodes: Vec<NodeId>) -> WanPath {
        let links: Vec<LinkId> = nodes
            .windows(2)
            .map(|w| self.link_between(w[0], w[1]).expect("path hop without link"))
            .collect();
        let distance = links.iter().map(|l| self.links[l.0].latency).sum();
        WanPath { nodes, links, distance }
    }

    fn compare_paths(&self, a: &WanPath, b: &WanPath) -> Ordering {
        a.distance
            .total_cmp(&b.distance)
            .then(a.links.len().cmp(&b.links.len()))
            .then_with(|| self.compare_node_seq(&a.nodes, &b.nodes))
    }

    fn compare_node_seq(&self, a: &[NodeId], b: &[NodeId]) -> Ordering {
        a.iter().map(|&n| &self.nodes[n]).cmp(b.iter().map(|&n| &self.nodes[n]))
    }

    /// Label-setting search for the single best path under the path order.
    fn best_path(
        &self,
        src: NodeId,
        dst: NodeId,
        banned_nodes: &[bool],
        banned_links: &BTreeSet<LinkId>,
    ) -> Option<WanPath> {
        if banned_nodes[src] {
            return None;
        }
        let n = self.node_count();
        let mut label: Vec<Option<(f64, Vec<NodeId>)>> = vec![None; n];
        let mut settled = vec![false; n];
        label[src] = Some((0.0, vec![src]));
        loop {
            let mut pick: Option<NodeId> = None;
            for v in 0..n {
                if settled[v] || label[v].is_none() {
                    continue;
                }
                pick = match pick {
                    None => Some(v),
                    Some(u) => {
                        if self.compare_labels(label[v].as_ref().unwrap(), label[u].as_ref().unwrap())
                            == Ordering::Less
                        {
                            Some(v)
                        } else {
                            Some(u)
                        }
                    }
                };
            }
            let u = pick?;
            settled[u] = true;
            if u == dst {
                let (_, nodes) = label[u].take().unwrap();
                return Some(self.make_path(nodes));
            }
            let (dist_u, nodes_u) = label[u].clone().unwrap();
            for &lid in &self.out_links[u] {
                let link = &self.links[lid.0];
                if !link.up || banned_links.contains(&lid) || banned_nodes[link.dst] || settled[link.dst]
                {
                    continue;
                }
                let mut nodes = nodes_u.clone();
                nodes.push(link.dst);
                let cand = (dist_u + link.latency, nodes);
                let better = match &label[link.dst] {
                    None => true,
                    Some(cur) => self.compare_labels(&cand, cur) == Ordering::Less,
                };
                if better {
                    label[link.dst] = Some(cand);
                }
            }
        }
    }

    fn compare_labels(&self, a: &(f64, Vec<NodeId>), b: &(f64, Vec<NodeId>)) -> Ordering {
        a.0.total_cmp(&b.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then_with(|| self.compare_node_seq(&a.1, &b.1))
    }

    /// Parses and validates a topology document.
    pub fn from_document(doc: &TopologyDoc) -> Result<WanGraph, TopologyError> {
        let mut g = WanGraph::new();
        for n in &doc.nodes {
            g.add_node(n)?;
        }
        for l in &doc.links {
            let s = g.node_id(&l.src).ok_or_else(|| TopologyError::UnknownNode(l.src.clone()))?;
            let d = g.node_id(&l.dst).ok_or_else(|| TopologyError::UnknownNode(l.dst.clone()))?;
            if !(l.gbps >= 0.0) {
                return Err(TopologyError::NegativeCapacity { src: l.src.clone(), dst: l.dst.clone() });
            }
            let cap = l.gbps * BYTES_PER_GBPS;
            let lat = l.latency_ms.unwrap_or(DEFAULT_LATENCY_MS) / 1e3;
            g.add_link(s, d, cap, lat)?;
            if l.bidirectional {
                g.add_link(d, s, cap, lat)?;
            }
        }
        Ok(g)
    }

    pub fn to_document(&self) -> TopologyDoc {
        TopologyDoc {
            nodes: self.nodes.clone(),
            links: self
                .links
                .iter()
                .map(|l| LinkDoc {
                    src: self.nodes[l.src].clone(),
                    dst: self.nodes[l.dst].clone(),
                    gbps: l.capacity / BYTES_PER_GBPS,
                    latency_ms: Some(l.latency * 1e3),
                    bidirectional: false,
                })
                .collect(),
        }
    }
}

/// Parses a JSON topology document.
pub fn load_topology(json: &str) -> Result<WanGraph, TopologyError> {
    let doc: TopologyDoc =
        serde_json::from_str(json).map_err(|e| TopologyError::Malformed(e.to_string()))?;
    WanGraph::from_document(&doc)
}

/// A loop-free path through the WAN.
#[derive(Clone, Debug, PartialEq)]
pub struct WanPath {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    pub distance: f64,
}

impl WanPath {
    pub fn hops(&self) -> usize {
        self.links.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WanEventKind {
    LinkFail,
    LinkRecover,
    BandwidthChange { new_capacity: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WanEvent {
    pub time: f64,
    pub seq: u64,
    pub kind: WanEventKind,
    pub link: LinkId,
}

impl WanEvent {
    pub fn order(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

/// Whether a capacity change is large enough to trigger rescheduling.
/// Failures (new capacity zero) always are.
pub fn significant_change(old_cap: f64, new_cap: f64, rho: f64) -> bool {
    if new_cap <= 0.0 || old_cap <= 0.0 {
        return true;
    }
    // Tiny slack so that e.g. 10 -> 7.5 Gbps counts as exactly 25%.
    (new_cap - old_cap).abs() / old_cap >= rho * (1.0 - 1e-12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyDoc {
    pub nodes: Vec<String>,
    pub links: Vec<LinkDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkDoc {
    pub src: String,
    pub dst: String,
    pub gbps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
    #[serde(default)]
    pub bidirectional: bool,
}

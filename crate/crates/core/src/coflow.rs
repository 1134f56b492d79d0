//! Coflows, their flows, and the coalescing of flows into FlowGroups.
//!
//! A FlowGroup holds every flow of one coflow that shares a
//! (source datacenter, destination datacenter) pair. Any work-conserving split
//! of the group's rate among its member flows finishes the group at the same
//! time, so the optimizer only ever sees FlowGroups.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{NodeId, WanGraph};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoflowId(pub u64);

impl fmt::Display for CoflowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "coflow-{}", self.0)
    }
}

pub type FlowId = u64;

#[derive(Debug, Error, PartialEq)]
pub enum CoflowError {
    #[error("flow {0} has identical source and destination")]
    IntraDatacenter(FlowId),
    #[error("flow {0} has zero volume")]
    EmptyFlow(FlowId),
    #[error("duplicate flow id {0}")]
    DuplicateFlow(FlowId),
    #[error("coflow has no flows")]
    NoFlows,
    #[error("{0} is finished or rejected and cannot be updated")]
    Closed(CoflowId),
    #[error("unknown {0}")]
    UnknownCoflow(CoflowId),
    #[error("unknown datacenter `{0}`")]
    UnknownNode(String),
    #[error("invalid {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flow {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Bytes.
    pub volume: u64,
    /// Bytes still to send.
    pub remaining: f64,
}

impl Flow {
    pub fn new(id: FlowId, src: NodeId, dst: NodeId, volume: u64) -> Self {
        Flow { id, src, dst, volume, remaining: volume as f64 }
    }
}

/// Identifies a FlowGroup: one per (coflow, src, dst).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    pub coflow: CoflowId,
    pub src: NodeId,
    pub dst: NodeId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowGroup {
    pub key: GroupKey,
    pub volume: u64,
    pub remaining: f64,
    /// Member flow ids in ascending order.
    pub flows: Vec<FlowId>,
}

impl FlowGroup {
    pub fn is_finished(&self) -> bool {
        self.remaining <= 0.0
    }
}

/// Coalesces flows into FlowGroups keyed by (src, dst), sorted by key.
pub fn group_flows(coflow: CoflowId, flows: &[Flow]) -> Result<Vec<FlowGroup>, CoflowError> {
    if flows.is_empty() {
        return Err(CoflowError::NoFlows);
    }
    let mut seen = BTreeSet::new();
    let mut groups: BTreeMap<(NodeId, NodeId), FlowGroup> = BTreeMap::new();
    for f in flows {
        validate_flow(f)?;
        if !seen.insert(f.id) {
            return Err(CoflowError::DuplicateFlow(f.id));
        }
        let g = groups.entry((f.src, f.dst)).or_insert_with(|| FlowGroup {
            key: GroupKey { coflow, src: f.src, dst: f.dst },
            volume: 0,
            remaining: 0.0,
            flows: Vec::new(),
        });
        g.volume += f.volume;
        g.remaining += f.remaining;
        g.flows.push(f.id);
    }
    Ok(groups
        .into_values()
        .map(|mut g| {
            g.flows.sort_unstable();
            g
        })
        .collect())
}

fn validate_flow(f: &Flow) -> Result<(), CoflowError> {
    if f.src == f.dst {
        return Err(CoflowError::IntraDatacenter(f.id));
    }
    if f.volume == 0 {
        return Err(CoflowError::EmptyFlow(f.id));
    }
    if !(f.remaining >= 0.0 && f.remaining <= f.volume as f64) {
        return Err(CoflowError::Invalid(format!("remaining bytes of flow {}", f.id)));
    }
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoflowState {
    Pending,
    Active,
    Preempted,
    Finished,
    Rejected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coflow {
    pub id: CoflowId,
    /// Submission time, seconds.
    pub arrival: f64,
    pub flows: Vec<Flow>,
    pub groups: Vec<FlowGroup>,
    /// Relative deadline in seconds; `None` for best-effort coflows.
    pub deadline: Option<f64>,
    pub admitted: bool,
    pub state: CoflowState,
}

impl Coflow {
    pub fn new(
        id: CoflowId,
        arrival: f64,
        deadline: Option<f64>,
        flows: Vec<Flow>,
    ) -> Result<Self, CoflowError> {
        if let Some(d) = deadline {
            if !(d > 0.0) {
                return Err(CoflowError::Invalid(format!("deadline {d} of {id}")));
            }
        }
        let groups = group_flows(id, &flows)?;
        Ok(Coflow {
            id,
            arrival,
            flows,
            groups,
            deadline,
            admitted: false,
            state: CoflowState::Pending,
        })
    }

    pub fn total_volume(&self) -> u64 {
        self.groups.iter().map(|g| g.volume).sum()
    }

    pub fn remaining(&self) -> f64 {
        self.groups.iter().map(|g| g.remaining).sum()
    }

    pub fn group(&self, src: NodeId, dst: NodeId) -> Option<&FlowGroup> {
        self.groups.iter().find(|g| g.key.src == src && g.key.dst == dst)
    }

    pub fn group_mut(&mut self, src: NodeId, dst: NodeId) -> Option<&mut FlowGroup> {
        self.groups.iter_mut().find(|g| g.key.src == src && g.key.dst == dst)
    }

    pub fn is_finished(&self) -> bool {
        self.groups.iter().all(FlowGroup::is_finished)
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.state, CoflowState::Finished | CoflowState::Rejected)
    }

    /// Adds flows to a live coflow, growing existing FlowGroups or creating new ones.
    pub fn update(&mut self, new_flows: Vec<Flow>) -> Result<(), CoflowError> {
        if self.is_closed() {
            return Err(CoflowError::Closed(self.id));
        }
        let mut ids: BTreeSet<FlowId> = self.flows.iter().map(|f| f.id).collect();
        for f in &new_flows {
            validate_flow(f)?;
            if !ids.insert(f.id) {
                return Err(CoflowError::DuplicateFlow(f.id));
            }
        }
        for f in new_flows {
            match self.group_mut(f.src, f.dst) {
                Some(g) => {
                    g.volume += f.volume;
                    g.remaining += f.remaining;
                    let pos = g.flows.partition_point(|&x| x < f.id);
                    g.flows.insert(pos, f.id);
                }
                None => {
                    let key = GroupKey { coflow: self.id, src: f.src, dst: f.dst };
                    let g = FlowGroup {
                        key,
                        volume: f.volume,
                        remaining: f.remaining,
                        flows: vec![f.id],
                    };
                    let pos = self.groups.partition_point(|x| (x.key.src, x.key.dst) < (f.src, f.dst));
                    self.groups.insert(pos, g);
                }
            }
            self.flows.push(f);
        }
        Ok(())
    }
}

/// Free-function form of [`Coflow::update`] over a coflow table.
pub fn update_coflow(
    table: &mut BTreeMap<CoflowId, Coflow>,
    id: CoflowId,
    new_flows: Vec<Flow>,
) -> Result<(), CoflowError> {
    table.get_mut(&id).ok_or(CoflowError::UnknownCoflow(id))?.update(new_flows)
}

/// Coflow submission document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoflowDoc {
    pub id: u64,
    #[serde(default)]
    pub arrival_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_s: Option<f64>,
    pub flows: Vec<FlowDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDoc {
    pub id: u64,
    pub src: String,
    pub dst: String,
    pub bytes: u64,
}

impl FlowDoc {
    pub fn to_flow(&self, g: &WanGraph) -> Result<Flow, CoflowError> {
        let s = g.node_id(&self.src).ok_or_else(|| CoflowError::UnknownNode(self.src.clone()))?;
        let d = g.node_id(&self.dst).ok_or_else(|| CoflowError::UnknownNode(self.dst.clone()))?;
        Ok(Flow::new(self.id, s, d, self.bytes))
    }
}

impl CoflowDoc {
    pub fn to_coflow(&self, g: &WanGraph) -> Result<Coflow, CoflowError> {
        let flows = self.flows.iter().map(|f| f.to_flow(g)).collect::<Result<Vec<_>, _>>()?;
        Coflow::new(CoflowId(self.id), self.arrival_s, self.deadline_s, flows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GB: u64 = 1_000_000_000;
    const A: NodeId = 0;
    const B: NodeId = 1;
    const C: NodeId = 2;

    #[test]
    fn sixteen_flows_two_groups() {
        let mut flows = Vec::new();
        for i in 0..10 {
            flows.push(Flow::new(i, B, A, GB));
        }
        for i in 10..16 {
            flows.push(Flow::new(i, C, A, GB));
        }
        let gs = group_flows(CoflowId(1), &flows).unwrap();
        assert_eq!(gs.len(), 2);
        assert_eq!((gs[0].key.src, gs[0].key.dst, gs[0].volume), (B, A, 10 * GB));
        assert_eq!((gs[1].key.src, gs[1].key.dst, gs[1].volume), (C, A, 6 * GB));
    }

    #[test]
    fn singleton() {
        let gs = group_flows(CoflowId(1), &[Flow::new(0, A, B, 5 * GB)]).unwrap();
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].volume, 5 * GB);
    }

    #[test]
    fn rejects_intra_datacenter() {
        assert_eq!(
            group_flows(CoflowId(1), &[Flow::new(3, A, A, 1)]),
            Err(CoflowError::IntraDatacenter(3))
        );
        assert_eq!(group_flows(CoflowId(1), &[]), Err(CoflowError::NoFlows));
    }

    #[test]
    fn update_merges_into_existing_group() {
        let mut c = Coflow::new(CoflowId(7), 0.0, None, vec![Flow::new(0, A, B, 5 * GB)]).unwrap();
        c.groups[0].remaining = GB as f64;
        c.update(vec![Flow::new(1, A, B, 2 * GB)]).unwrap();
        assert_eq!(c.groups.len(), 1);
        assert_eq!(c.groups[0].volume, 7 * GB);
        assert_eq!(c.groups[0].remaining, 3.0 * GB as f64);
    }

    #[test]
    fn update_creates_new_group() {
        let mut c = Coflow::new(CoflowId(7), 0.0, None, vec![Flow::new(0, A, B, 5 * GB)]).unwrap();
        c.update(vec![Flow::new(1, C, B, GB)]).unwrap();
        assert_eq!(c.groups.len(), 2);
        assert!(c.group(C, B).is_some());
    }

    #[test]
    fn update_guards() {
        let mut c = Coflow::new(CoflowId(7), 0.0, None, vec![Flow::new(0, A, B, 5)]).unwrap();
        assert_eq!(c.update(vec![Flow::new(0, A, B, 1)]), Err(CoflowError::DuplicateFlow(0)));
        c.state = CoflowState::Finished;
        assert_eq!(c.update(vec![Flow::new(1, A, B, 1)]), Err(CoflowError::Closed(CoflowId(7))));
        let mut table = BTreeMap::new();
        assert_eq!(
            update_coflow(&mut table, CoflowId(9), vec![]),
            Err(CoflowError::UnknownCoflow(CoflowId(9)))
        );
    }

    proptest! {
        #[test]
        fn grouping_preserves_volume_and_ignores_order(
            sizes in proptest::collection::vec((0usize..3, 0usize..3, 1u64..1_000_000_000u64), 1..100),
            rot in 0usize..100,
        ) {
            let flows: Vec<Flow> = sizes.iter().enumerate()
                .filter(|(_, (s, d, _))| s != d)
                .map(|(i, &(s, d, v))| Flow::new(i as u64, s, d, v))
                .collect();
            prop_assume!(!flows.is_empty());
            let gs = group_flows(CoflowId(0), &flows).unwrap();
            let pairs: BTreeSet<_> = flows.iter().map(|f| (f.src, f.dst)).collect();
            prop_assert_eq!(gs.len(), pairs.len());
            for g in &gs {
                let sum: u64 = flows.iter().filter(|f| f.src == g.key.src && f.dst == g.key.dst)
                    .map(|f| f.volume).sum();
                prop_assert_eq!(g.volume, sum);
            }
            let mut rotated = flows.clone();
            let r = rot % rotated.len();
            rotated.rotate_left(r);
            prop_assert_eq!(&group_flows(CoflowId(0), &rotated).unwrap(), &gs);
        }
    }

    #[test]
    fn hundred_flows_one_group_exact_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let flows: Vec<Flow> =
            (0..100).map(|i| Flow::new(i, A, B, rng.gen_range(1..10 * GB))).collect();
        let mut expected: u64 = 0;
        for f in &flows {
            expected += f.volume;
        }
        let gs = group_flows(CoflowId(0), &flows).unwrap();
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].volume, expected);
    }
}

use serde::{Deserialize, Serialize};

use crate::topology::WanGraph;

use super::Schedule;

/// One path of a coflow's schedule, as sent to the sending agents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub hops: Vec<String>,
    pub bytes_per_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoflowRecord {
    pub id: u64,
    /// Completion-time bound of the whole-coflow allocation; absent for
    /// coflows served only from leftover capacity.
    pub gamma: Option<f64>,
    pub paths: Vec<PathRecord>,
}

/// Decisions of one scheduling round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub time: f64,
    pub trigger: String,
    pub coflows: Vec<CoflowRecord>,
    pub rejected: Vec<u64>,
}

impl RoundRecord {
    pub fn from_schedule(s: &Schedule, g: &WanGraph, trigger: &str) -> Self {
        let paths = s.group_paths();
        let coflows = s
            .order
            .iter()
            .map(|&id| {
                let mut recs: Vec<PathRecord> = Vec::new();
                for p in paths.iter().filter(|(k, _)| k.coflow == id).flat_map(|(_, v)| v) {
                    let hops: Vec<String> = p.nodes.iter().map(|&n| g.node_name(n).to_string()).collect();
                    match recs.iter_mut().find(|r| r.hops == hops) {
                        Some(r) => r.bytes_per_s += p.rate,
                        None => recs.push(PathRecord { hops, bytes_per_s: p.rate }),
                    }
                }
                CoflowRecord { id: id.0, gamma: s.allocations.get(&id).map(|a| a.gamma), paths: recs }
            })
            .collect();
        RoundRecord {
            time: s.time,
            trigger: trigger.to_string(),
            coflows,
            rejected: s.rejected.iter().map(|c| c.0).collect(),
        }
    }
}

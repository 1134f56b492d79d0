//! Builtin regression scenarios and the SWAN-like topology.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scheduler::SchedulerConfig;
use crate::topology::{load_topology, WanGraph};
use crate::workload::{load_workload, Workload};

pub const SWAN_TOPOLOGY_JSON: &str = include_str!("../data/swan.json");

/// Five datacenters joined by seven bidirectional links.
pub fn swan_topology() -> WanGraph {
    load_topology(SWAN_TOPOLOGY_JSON).expect("builtin topology is valid")
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Figure1,
    Figure2,
    Flowgroup,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Figure1, ScenarioKind::Figure2, ScenarioKind::Flowgroup];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Figure1 => "figure1",
            ScenarioKind::Figure2 => "figure2",
            ScenarioKind::Flowgroup => "flowgroup",
        }
    }

    pub fn build(&self) -> Scenario {
        match self {
            ScenarioKind::Figure1 => figure1(),
            ScenarioKind::Figure2 => figure2(true),
            ScenarioKind::Flowgroup => flowgroup(1),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub graph: WanGraph,
    pub workload: Workload,
    /// Scheduler settings the scenario is meant to run with.
    pub scheduler: SchedulerConfig,
}

fn no_reserve() -> SchedulerConfig {
    SchedulerConfig { alpha: 0.0, ..SchedulerConfig::default() }
}

fn build(name: &str, topo: &str, work: &str, scheduler: SchedulerConfig) -> Scenario {
    let graph = load_topology(topo).expect("builtin topology is valid");
    let workload = load_workload(work, &graph).expect("builtin workload is valid");
    Scenario { name: name.to_string(), graph, workload, scheduler }
}

/// Three datacenters, 10 Gbps each way. Coflow 1 sends 5 GB A->B; coflow 2
/// sends 5 GB A->B and 25 GB C->A.
pub fn figure1() -> Scenario {
    build(
        "figure1",
        r#"{"nodes":["A","B","C"],"links":[
            {"src":"A","dst":"B","gbps":10,"bidirectional":true},
            {"src":"B","dst":"C","gbps":10,"bidirectional":true},
            {"src":"A","dst":"C","gbps":10,"bidirectional":true}]}"#,
        r#"{"jobs":[
            {"id":1,"arrival_s":0,"coflows":[{"id":1,"flows":[
                {"id":11,"src":"A","dst":"B","bytes":5000000000}]}]},
            {"id":2,"arrival_s":0,"coflows":[{"id":2,"flows":[
                {"id":21,"src":"A","dst":"B","bytes":5000000000},
                {"id":22,"src":"C","dst":"A","bytes":25000000000}]}]}]}"#,
        no_reserve(),
    )
}

/// Triangle with a 15 Gbps A-C link that fails at t = 0 when `fail` is set.
/// Coflow 3 sends 10 GB A->B; coflow 4 sends 5 GB C->B and 15 GB A->C.
pub fn figure2(fail: bool) -> Scenario {
    let events = if fail {
        r#","wan_events":[
            {"time_s":0,"kind":"link_fail","src":"A","dst":"C"},
            {"time_s":0,"kind":"link_fail","src":"C","dst":"A"}]"#
    } else {
        ""
    };
    let work = format!(
        r#"{{"jobs":[
            {{"id":3,"arrival_s":0,"coflows":[{{"id":3,"flows":[
                {{"id":1,"src":"A","dst":"B","bytes":10000000000}}]}}]}},
            {{"id":4,"arrival_s":0,"coflows":[{{"id":4,"flows":[
                {{"id":1,"src":"C","dst":"B","bytes":5000000000}},
                {{"id":2,"src":"A","dst":"C","bytes":15000000000}}]}}]}}]{events}}}"#
    );
    build(
        if fail { "figure2" } else { "figure2_no_failure" },
        r#"{"nodes":["A","B","C"],"links":[
            {"src":"A","dst":"B","gbps":10,"bidirectional":true},
            {"src":"B","dst":"C","gbps":10,"bidirectional":true},
            {"src":"A","dst":"C","gbps":15,"bidirectional":true}]}"#,
        &work,
        no_reserve(),
    )
}

/// One coflow: 5n mappers in B and 3n in C each send 1 GB to both of two
/// reducers in A, over links B->A (10 Gbps) and C->A (6 Gbps).
pub fn flowgroup(n: u64) -> Scenario {
    let mut flows = Vec::new();
    let mut id = 0;
    for (src, mappers) in [("B", 5 * n), ("C", 3 * n)] {
        for _ in 0..mappers * 2 {
            flows.push(format!(r#"{{"id":{id},"src":"{src}","dst":"A","bytes":1000000000}}"#));
            id += 1;
        }
    }
    let work =
        format!(r#"{{"jobs":[{{"id":1,"arrival_s":0,"coflows":[{{"id":1,"flows":[{}]}}]}}]}}"#, flows.join(","));
    build(
        "flowgroup",
        r#"{"nodes":["A","B","C"],"links":[
            {"src":"B","dst":"A","gbps":10},
            {"src":"C","dst":"A","gbps":6}]}"#,
        &work,
        no_reserve(),
    )
}

//! Joint coflow scheduling and multipath routing over an inter-datacenter
//! WAN, plus a flow-level simulator for comparing rate allocation policies.

pub mod coflow;
pub mod lp;
pub mod optimizer;
pub mod scenarios;
pub mod scheduler;
pub mod sim;
pub mod topology;
pub mod workload;

pub use coflow::{Coflow, CoflowError, CoflowId, Flow, FlowGroup, FlowId, GroupKey};
pub use optimizer::{max_min_mcf, min_cct, Allocation, ArcMask, OptimizerError};
pub use scenarios::{Scenario, ScenarioKind};
pub use scheduler::{Schedule, Scheduler, SchedulerConfig, SchedulerError};
pub use sim::{run, Metrics, MetricsRow, PolicyKind, SimConfig, SimError, SimOutput};
pub use topology::{load_topology, TopologyError, WanEvent, WanGraph, BYTES_PER_GBPS};
pub use workload::{generate, load_workload, Workload, WorkloadError, WorkloadSpec};

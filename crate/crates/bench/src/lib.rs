//! Shared fixtures for the benchmarks.

use geoflow_core::coflow::CoflowId;
use geoflow_core::lp::{Comparator, LinearProgram};
use geoflow_core::optimizer::Demand;
use geoflow_core::scenarios::swan_topology;
use geoflow_core::workload::{load, VolumeDist};
use geoflow_core::{generate, GroupKey, WanGraph, Workload, WorkloadSpec};

/// One demand per ordered datacenter pair of the SWAN-like topology,
/// 1 GB times a small pair-dependent factor.
pub fn swan_all_pairs() -> (WanGraph, Vec<Demand>) {
    let g = swan_topology();
    let n = g.node_count();
    let mut demands = Vec::new();
    for src in 0..n {
        for dst in 0..n {
            if src != dst {
                let key = GroupKey { coflow: CoflowId(1), src, dst };
                demands.push(Demand { key, volume: 1e9 * (1 + (src * n + dst) % 4) as f64 });
            }
        }
    }
    (g, demands)
}

/// A bounded transportation problem with `m` sources and `n` sinks.
pub fn transport_lp(m: usize, n: usize) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let vars: Vec<Vec<usize>> =
        (0..m).map(|i| (0..n).map(|j| lp.add_var(format!("x_{i}_{j}"), None)).collect()).collect();
    for (i, row) in vars.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            lp.set_objective(v, ((i * 7 + j * 3) % 11) as f64 + 1.0);
        }
        lp.add_constraint(row.iter().map(|&v| (v, 1.0)).collect(), Comparator::Le, 10.0 + i as f64);
    }
    for j in 0..n {
        lp.add_constraint(vars.iter().map(|row| (row[j], 1.0)).collect(), Comparator::Le, 8.0 + j as f64);
    }
    lp
}

/// A 20-job workload on the SWAN-like topology.
pub fn swan_workload(seed: u64) -> (WanGraph, Workload) {
    let g = swan_topology();
    let mut spec = WorkloadSpec::poisson(20, 0.5, VolumeDist::Lognormal { median_bytes: 5e9, sigma: 1.0 }, seed);
    spec.mappers = [1, 3];
    spec.reducers = [1, 3];
    let doc = generate(&spec, &g).expect("valid spec");
    let w = load(&doc, &g).expect("generated workload loads");
    (g, w)
}

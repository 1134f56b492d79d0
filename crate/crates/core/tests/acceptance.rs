//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, VecDeque};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use geoflow_core::coflow::{Coflow, CoflowId, Flow, GroupKey};
use geoflow_core::optimizer::{decompose_paths, min_cct, ArcMask, Demand, GroupAllocation, Residual};
use geoflow_core::scenarios::{figure1, figure2, flowgroup, swan_topology, Scenario};
use geoflow_core::scheduler::SchedulerConfig;
use geoflow_core::sim::{metrics_csv, run, trace_jsonl, IntraGroupOrder, MetricsRow, PolicyKind, SimConfig, SimOutput};
use geoflow_core::topology::{LinkId, NodeId, WanGraph, BYTES_PER_GBPS};
use geoflow_core::workload::{generate, load, VolumeDist, Workload, WorkloadSpec};

// Tolerances and thresholds, as specified.
const FIG1_TOL: f64 = 0.01;
const FIG1_RUNTIME: Duration = Duration::from_secs(1);
const FIG1_ASSUMED_MULTIPATH: f64 = 10.6;
const FIG1_ASSUMED_TERRA: f64 = 7.15;
const FIG1_ASSUMPTION_TOL: f64 = 0.02;
const FLOWGROUP_TOL: f64 = 1e-6;
const FIG2_TOL: f64 = 0.02;
const ORACLE_INSTANCES: u64 = 100;
const ORACLE_SLACK: f64 = 1.05;
const ORACLE_RUNTIME: Duration = Duration::from_secs(60);
const SWAN_INSTANCES: u64 = 200;
const SWAN_COFLOWS: usize = 20;
const FOI_PERFLOW_MIN: f64 = 1.3;
const FOI_MULTIPATH_MIN: f64 = 1.0;
const DEADLINE_FACTORS: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];
const DEADLINE_SEEDS: u64 = 10;
const MAXFLOW_GRAPHS: u64 = 50;
const MAXFLOW_TOL: f64 = 1e-6;
const DECOMPOSE_TOL: f64 = 1e-7;
const SCALING_TOL: f64 = 1e-6;

const GB: u64 = 1_000_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, name: &str, o: &Outcome) {
    println!("{} criterion {n} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

fn sim(s: &Scenario, p: PolicyKind, cfg: &SimConfig) -> SimOutput {
    run(&s.workload, &s.graph, p, cfg, 0).expect("simulation runs")
}

fn scenario_cfg(s: &Scenario) -> SimConfig {
    SimConfig { scheduler: s.scheduler, ..SimConfig::default() }
}

fn clean(o: &SimOutput) -> bool {
    o.metrics.capacity_violations == 0 && o.metrics.conservation_violations == 0 && o.metrics.unfinished == 0
}

// ---------------------------------------------------------------------------

fn criterion1() -> Outcome {
    let t0 = Instant::now();
    let s = figure1();
    let cfg = scenario_cfg(&s);
    let perflow = sim(&s, PolicyKind::Perflow, &cfg);
    let varys = sim(&s, PolicyKind::Varys, &cfg);
    let multipath = sim(&s, PolicyKind::Multipath, &cfg);
    let terra = sim(&s, PolicyKind::Terra, &cfg);
    let elapsed = t0.elapsed();
    let (p, v, m, t) =
        (perflow.metrics.avg_cct, varys.metrics.avg_cct, multipath.metrics.avg_cct, terra.metrics.avg_cct);
    let exact = rel_close(p, 14.0, FIG1_TOL) && rel_close(v, 12.0, FIG1_TOL);
    let assumption =
        rel_close(m, FIG1_ASSUMED_MULTIPATH, FIG1_ASSUMPTION_TOL) && rel_close(t, FIG1_ASSUMED_TERRA, FIG1_ASSUMPTION_TOL);
    // The fallback chain applies when the assumed topology does not reproduce
    // the multipath and co-optimized numbers.
    let chain = t <= m + 1e-9 && t <= 12.0 + 1e-9;
    let safe = [&perflow, &varys, &multipath, &terra].iter().all(|o| clean(o));
    Outcome {
        pass: exact && (assumption || chain) && safe && elapsed < FIG1_RUNTIME,
        detail: format!(
            "perflow {p:.4} (want 14), varys {v:.4} (want 12), multipath {m:.4}, terra {t:.4}; \
             assumption 10.6/7.15 {}, fallback terra<=multipath && terra<=12 {}; runtime {:.3}s",
            if assumption { "reproduced" } else { "not reproduced" },
            if chain { "holds" } else { "violated" },
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion2() -> Outcome {
    let s = flowgroup(1);
    let c = &s.workload.jobs[0].coflows[0];
    let mut volumes: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    for f in &c.flows {
        *volumes.entry((f.src, f.dst)).or_default() += f.volume as f64;
    }
    let demands: Vec<Demand> = volumes
        .iter()
        .map(|(&(src, dst), &volume)| Demand { key: GroupKey { coflow: c.id, src, dst }, volume })
        .collect();
    let mask = ArcMask::unrestricted(&s.graph, volumes.keys().copied());
    let gamma = min_cct(&demands, &s.graph, &Residual::from_graph(&s.graph), &mask)
        .expect("LP solves")
        .gamma()
        .unwrap_or(f64::INFINITY);

    let mut cfg = scenario_cfg(&s);
    let fair = sim(&s, PolicyKind::Terra, &cfg);
    cfg.intra_group = IntraGroupOrder::Fifo;
    let fifo = sim(&s, PolicyKind::Terra, &cfg);
    let ba = s.graph.link_by_names("B", "A").unwrap();
    let ca = s.graph.link_by_names("C", "A").unwrap();
    let util = |o: &SimOutput, l: LinkId| o.metrics.link_utilization[l.0];
    let (u_ba, u_ca) = (util(&fair, ba), util(&fair, ca));
    let (cf, cq) = (fair.metrics.avg_cct, fifo.metrics.avg_cct);
    let pass = (gamma - 8.0).abs() <= FLOWGROUP_TOL
        && (u_ba - 1.0).abs() <= FLOWGROUP_TOL
        && (u_ca - 1.0).abs() <= FLOWGROUP_TOL
        && (cf - cq).abs() <= FLOWGROUP_TOL * cf
        && clean(&fair)
        && clean(&fifo);
    Outcome {
        pass,
        detail: format!(
            "gamma {gamma:.9} (want 8), utilization B->A {u_ba:.9} C->A {u_ca:.9}; CCT fair-share {cf:.9} vs FIFO {cq:.9}"
        ),
    }
}

fn criterion3() -> Outcome {
    let s = figure2(true);
    let cfg = scenario_cfg(&s);
    let terra = sim(&s, PolicyKind::Terra, &cfg);
    let naive = sim(&s, PolicyKind::Perflow, &cfg);
    let before = sim(&figure2(false), PolicyKind::Perflow, &cfg);
    let (t, n, b) = (terra.metrics.avg_cct, naive.metrics.avg_cct, before.metrics.avg_cct);
    Outcome {
        pass: rel_close(t, 14.0, FIG2_TOL) && t < n && clean(&terra) && clean(&naive),
        detail: format!("terra {t:.4} (want 14), naive reroute {n:.4} (want 18), no-failure WAN-agnostic {b:.4} (want 8)"),
    }
}

// --- criterion 4: order-enumeration oracle ---------------------------------

struct Instance {
    graph: WanGraph,
    coflows: Vec<Coflow>,
}

fn random_instance(rng: &mut StdRng) -> Instance {
    loop {
        let n = rng.gen_range(3..=4);
        let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
        let mut g = WanGraph::new();
        for name in &names {
            g.add_node(name).unwrap();
        }
        for s in 0..n {
            for d in 0..n {
                if s != d && rng.gen_bool(0.6) {
                    let gbps = rng.gen_range(1..=10) as f64;
                    g.add_link(s, d, gbps * BYTES_PER_GBPS, rng.gen_range(1..=5) as f64 / 1e3).unwrap();
                }
            }
        }
        let mut coflows = Vec::new();
        let mut ok = true;
        for c in 0..rng.gen_range(1..=2u64) {
            let mut flows = Vec::new();
            let mut pairs = Vec::new();
            for f in 0..rng.gen_range(1..=2u64) {
                let s = rng.gen_range(0..n);
                let mut d = rng.gen_range(0..n - 1);
                if d >= s {
                    d += 1;
                }
                if pairs.contains(&(s, d)) {
                    continue;
                }
                pairs.push((s, d));
                if g.k_shortest_paths(s, d, 1).is_empty() {
                    ok = false;
                }
                flows.push(Flow::new(f, s, d, rng.gen_range(1..=20) * GB));
            }
            coflows.push(Coflow::new(CoflowId(c + 1), 0.0, None, flows).unwrap());
        }
        if ok {
            return Instance { graph: g, coflows };
        }
    }
}

fn demands_of(c: &Coflow, fraction_left: f64) -> Vec<Demand> {
    c.groups.iter().map(|g| Demand { key: g.key, volume: g.volume as f64 * fraction_left }).collect()
}

fn gamma_on(c: &Coflow, left: f64, g: &WanGraph, residual: &Residual) -> Option<(f64, Vec<GroupAllocation>)> {
    let d = demands_of(c, left);
    let mask = ArcMask::unrestricted(g, d.iter().map(|x| (x.key.src, x.key.dst)));
    min_cct(&d, g, residual, &mask).expect("LP solves").allocation().map(|a| (a.gamma, a.groups))
}

/// Best average CCT over all priority orders. In an order, each coflow runs
/// its min-CCT rates on what the earlier ones leave; when a coflow finishes
/// the later ones re-solve on the freed network.
fn oracle(inst: &Instance) -> f64 {
    let g = &inst.graph;
    let n = inst.coflows.len();
    let orders: Vec<Vec<usize>> = if n == 1 { vec![vec![0]] } else { vec![vec![0, 1], vec![1, 0]] };
    let full = Residual::from_graph(g);
    let mut best = f64::INFINITY;
    for order in orders {
        let first = &inst.coflows[order[0]];
        let (g1, alloc) = gamma_on(first, 1.0, g, &full).expect("reachable");
        let mut total = g1;
        if let Some(&j) = order.get(1) {
            let second = &inst.coflows[j];
            let mut usage = vec![0.0; g.link_count()];
            for a in &alloc {
                a.add_usage(&mut usage);
            }
            let left: Vec<f64> = full.as_slice().iter().zip(&usage).map(|(c, u)| (c - u).max(0.0)).collect();
            let cct2 = match gamma_on(second, 1.0, g, &Residual::from_vec(left)) {
                Some((g2, _)) if g2 <= g1 => g2,
                Some((g2, _)) => g1 + gamma_on(second, 1.0 - g1 / g2, g, &full).expect("reachable").0,
                None => g1 + gamma_on(second, 1.0, g, &full).expect("reachable").0,
            };
            total += cct2;
        }
        best = best.min(total / n as f64);
    }
    best
}

fn criterion4() -> Outcome {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(4);
    let cfg = SimConfig { scheduler: SchedulerConfig { alpha: 0.0, ..SchedulerConfig::default() }, ..SimConfig::default() };
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..ORACLE_INSTANCES {
        let inst = random_instance(&mut rng);
        let w = Workload::from_coflows(&inst.coflows, Vec::new());
        let out = run(&w, &inst.graph, PolicyKind::Terra, &cfg, 0).expect("simulation runs");
        let best = oracle(&inst);
        let ratio = out.metrics.avg_cct / best;
        worst = worst.max(ratio);
        if ratio > ORACLE_SLACK || !clean(&out) {
            failures += 1;
            if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
                eprintln!("terra {:?} oracle {best}", out.metrics.cct);
                for l in inst.graph.links() {
                    eprintln!("  link {}->{} {} Gbps", l.src, l.dst, l.capacity / BYTES_PER_GBPS);
                }
                for c in &inst.coflows {
                    eprintln!("  coflow {} {:?}", c.id, c.flows.iter().map(|f| (f.src, f.dst, f.volume / GB)).collect::<Vec<_>>());
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    Outcome {
        pass: failures == 0 && elapsed < ORACLE_RUNTIME,
        detail: format!(
            "{ORACLE_INSTANCES} instances, worst terra/oracle {worst:.4} (limit {ORACLE_SLACK}), {failures} over limit; runtime {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

// --- criterion 5 ------------------------------------------------------------

fn swan_spec(seed: u64) -> WorkloadSpec {
    let mut spec =
        WorkloadSpec::poisson(SWAN_COFLOWS, 0.5, VolumeDist::Lognormal { median_bytes: 5e9, sigma: 1.0 }, seed);
    spec.mappers = [1, 3];
    spec.reducers = [1, 3];
    spec
}

fn criterion5() -> Outcome {
    let t0 = Instant::now();
    let g = swan_topology();
    let cfg = SimConfig::default();
    let (mut foi_p, mut foi_m) = (0.0, 0.0);
    let mut unsafe_runs = 0;
    for seed in 0..SWAN_INSTANCES {
        let w = load(&generate(&swan_spec(seed), &g).unwrap(), &g).unwrap();
        let terra = run(&w, &g, PolicyKind::Terra, &cfg, seed).unwrap();
        let perflow = run(&w, &g, PolicyKind::Perflow, &cfg, seed).unwrap();
        let multipath = run(&w, &g, PolicyKind::Multipath, &cfg, seed).unwrap();
        unsafe_runs += [&terra, &perflow, &multipath].iter().filter(|o| !clean(o)).count();
        foi_p += perflow.metrics.avg_cct / terra.metrics.avg_cct;
        foi_m += multipath.metrics.avg_cct / terra.metrics.avg_cct;
    }
    foi_p /= SWAN_INSTANCES as f64;
    foi_m /= SWAN_INSTANCES as f64;
    Outcome {
        pass: foi_p >= FOI_PERFLOW_MIN && foi_m >= FOI_MULTIPATH_MIN && unsafe_runs == 0,
        detail: format!(
            "{SWAN_INSTANCES} instances: mean FoI vs perflow {foi_p:.3} (min {FOI_PERFLOW_MIN}), vs multipath {foi_m:.3} \
             (min {FOI_MULTIPATH_MIN}); runs with invariant violations {unsafe_runs}; runtime {:.1}s",
            t0.elapsed().as_secs_f64()
        ),
    }
}

// --- criterion 6 ------------------------------------------------------------

fn criterion6() -> Outcome {
    let g = swan_topology();
    let cfg = SimConfig::default();
    let mut all_met = true;
    let mut rejected = Vec::new();
    for d in DEADLINE_FACTORS {
        let (mut rej, mut total) = (0usize, 0usize);
        for seed in 0..DEADLINE_SEEDS {
            let mut spec = swan_spec(seed);
            spec.arrival = geoflow_core::workload::ArrivalProcess::Poisson { rate_per_s: 1.0 };
            spec.deadline_factor = Some(d);
            let w = load(&generate(&spec, &g).unwrap(), &g).unwrap();
            let out = run(&w, &g, PolicyKind::Terra, &cfg, seed).unwrap();
            if out.metrics.admitted_met.is_some_and(|m| m < 1.0) || !clean(&out) {
                all_met = false;
            }
            rej += out.metrics.rejected;
            total += out.metrics.coflows;
        }
        rejected.push(rej as f64 / total as f64);
    }
    let monotone = rejected.windows(2).all(|w| w[1] <= w[0]) && rejected.last() < rejected.first();
    Outcome {
        pass: all_met && monotone,
        detail: format!(
            "admitted coflows all met deadlines: {all_met}; rejected fraction for d=2..6: {}",
            rejected.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

// --- criterion 7: independent max-flow oracle -----------------------------

/// Edmonds-Karp on a dense capacity matrix.
fn max_flow(cap: &[Vec<f64>], s: usize, t: usize) -> f64 {
    let n = cap.len();
    let mut r = cap.to_vec();
    let mut total = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && r[u][v] > 1e-9 {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            push = push.min(r[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            r[prev[v]][v] -= push;
            r[v][prev[v]] += push;
            v = prev[v];
        }
        total += push;
    }
}

fn random_graph(rng: &mut StdRng, max_nodes: usize) -> WanGraph {
    let n = rng.gen_range(2..=max_nodes);
    let mut g = WanGraph::new();
    for i in 0..n {
        g.add_node(&format!("N{i}")).unwrap();
    }
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.gen_bool(0.5) {
                g.add_link(s, d, rng.gen_range(1.0..20.0) * BYTES_PER_GBPS, 1e-3).unwrap();
            }
        }
    }
    g
}

fn criterion7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst_gamma = 0.0f64;
    let mut graphs = 0;
    while graphs < MAXFLOW_GRAPHS {
        let g = random_graph(&mut rng, 6);
        let n = g.node_count();
        let s = rng.gen_range(0..n);
        let t = (s + rng.gen_range(1..n)) % n;
        let mut cap = vec![vec![0.0; n]; n];
        for l in g.links() {
            cap[l.src][l.dst] += l.capacity;
        }
        let mf = max_flow(&cap, s, t);
        if mf <= 0.0 {
            continue;
        }
        graphs += 1;
        let volume = rng.gen_range(1..=50) as f64 * GB as f64;
        let d = [Demand { key: GroupKey { coflow: CoflowId(1), src: s, dst: t }, volume }];
        let mask = ArcMask::unrestricted(&g, [(s, t)]);
        let gamma = min_cct(&d, &g, &Residual::from_graph(&g), &mask).unwrap().gamma().unwrap_or(f64::INFINITY);
        worst_gamma = worst_gamma.max(((gamma - volume / mf) / (volume / mf)).abs());
    }

    // Decomposition: sums of random paths in a DAG are acyclic arc flows and
    // must re-aggregate exactly.
    let mut worst_decomp = 0.0f64;
    let mut cases = 0;
    while cases < 50 {
        let n = rng.gen_range(3..=6);
        let mut g = WanGraph::new();
        for i in 0..n {
            g.add_node(&format!("N{i}")).unwrap();
        }
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.6) {
                    g.add_link(a, b, 10.0 * BYTES_PER_GBPS, rng.gen_range(1..=5) as f64 / 1e3).unwrap();
                }
            }
        }
        let (s, t) = (0, n - 1);
        let paths = g.k_shortest_paths(s, t, 6);
        if paths.is_empty() {
            continue;
        }
        cases += 1;
        let mut arcs: BTreeMap<LinkId, f64> = BTreeMap::new();
        for p in &paths {
            let r = rng.gen_range(0.1..10.0) * BYTES_PER_GBPS;
            for &l in &p.links {
                *arcs.entry(l).or_default() += r;
            }
        }
        let rates: Vec<(LinkId, f64)> = arcs.iter().map(|(&l, &r)| (l, r)).collect();
        let dec = decompose_paths(&g, &rates, s, t).unwrap();
        let back = GroupAllocation::from_paths(GroupKey { coflow: CoflowId(1), src: s, dst: t }, dec.paths);
        let back: BTreeMap<LinkId, f64> = back.arcs.into_iter().collect();
        for (l, r) in &arcs {
            let b = back.get(l).copied().unwrap_or(0.0);
            worst_decomp = worst_decomp.max((b - r).abs() / r.max(1.0));
        }
        for l in back.keys() {
            if !arcs.contains_key(l) {
                worst_decomp = f64::INFINITY;
            }
        }
    }

    // Scaling laws on multi-group demands.
    let mut worst_scale = 0.0f64;
    let mut cases = 0;
    while cases < 50 {
        let inst = random_instance(&mut rng);
        let c = &inst.coflows[0];
        let g = &inst.graph;
        let full = Residual::from_graph(g);
        let Some((base, _)) = gamma_on(c, 1.0, g, &full) else { continue };
        cases += 1;
        let f = rng.gen_range(0.25..4.0);
        let vol = gamma_on(c, f, g, &full).unwrap().0;
        let capx = gamma_on(c, 1.0, g, &full.scaled(f)).unwrap().0;
        worst_scale = worst_scale.max(((vol - f * base) / (f * base)).abs());
        worst_scale = worst_scale.max(((capx - base / f) / (base / f)).abs());
    }

    Outcome {
        pass: worst_gamma <= MAXFLOW_TOL && worst_decomp <= DECOMPOSE_TOL && worst_scale <= SCALING_TOL,
        detail: format!(
            "gamma vs volume/maxflow worst rel err {worst_gamma:.2e} over {MAXFLOW_GRAPHS} graphs; \
             decomposition re-aggregation worst {worst_decomp:.2e}; scaling laws worst {worst_scale:.2e}"
        ),
    }
}

// --- criterion 8 ------------------------------------------------------------

fn write_outputs(dir: &std::path::Path, s: &Scenario, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    let cfg = scenario_cfg(s);
    let mut rows = Vec::new();
    for p in PolicyKind::ALL {
        let out = run(&s.workload, &s.graph, p, &cfg, seed).unwrap();
        rows.push(MetricsRow::new(p.as_str(), &s.name, seed, &out.metrics));
        std::fs::write(dir.join(format!("trace_{p}_{seed}.jsonl")), trace_jsonl(&out.trace)).unwrap();
        if let Some(sched) = out.schedule_trace {
            std::fs::write(dir.join(format!("schedule_{p}_{seed}.json")), sched).unwrap();
        }
    }
    std::fs::write(dir.join("metrics.csv"), metrics_csv(&rows)).unwrap();
}

fn criterion8() -> Outcome {
    let root = std::env::temp_dir().join(format!("geoflow-acceptance-{}", std::process::id()));
    let g = swan_topology();
    let generated = Scenario {
        name: "swan_generated".into(),
        workload: load(&generate(&swan_spec(11), &g).unwrap(), &g).unwrap(),
        graph: g,
        scheduler: SchedulerConfig::default(),
    };
    let scenarios = [figure1(), figure2(true), flowgroup(1), generated];
    let mut differing = Vec::new();
    let mut files = 0;
    for s in &scenarios {
        let (a, b) = (root.join(format!("{}-a", s.name)), root.join(format!("{}-b", s.name)));
        write_outputs(&a, s, 11);
        write_outputs(&b, s, 11);
        let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            files += 1;
            if std::fs::read(a.join(&name)).unwrap() != std::fs::read(b.join(&name)).ok().unwrap_or_default() {
                differing.push(format!("{}/{}", s.name, name.to_string_lossy()));
            }
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    Outcome {
        pass: differing.is_empty() && files > 0,
        detail: format!("{files} files compared across {} scenarios, differing: {differing:?}", scenarios.len()),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("figure-1 regression", criterion1),
        ("flowgroup scenario", criterion2),
        ("figure-2 failure regression", criterion3),
        ("oracle optimality", criterion4),
        ("statistical dominance", criterion5),
        ("deadline suite", criterion6),
        ("LP and optimizer properties", criterion7),
        ("determinism", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        report(i + 1, name, &o);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use geoflow_core::sim::{metrics_csv, trace_jsonl, IntraGroupOrder};
use geoflow_core::workload::load;
use geoflow_core::{
    generate, load_topology, load_workload, run, MetricsRow, PolicyKind, ScenarioKind, SimConfig, WanGraph, Workload,
    WorkloadSpec,
};
use rayon::prelude::*;

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// Builtin scenario; replaces --topology and --workload.
    #[arg(long, conflicts_with_all = ["topology", "workload", "generate"])]
    pub scenario: Option<ScenarioKind>,
    /// Topology document (JSON).
    #[arg(long, required_unless_present = "scenario")]
    pub topology: Option<PathBuf>,
    /// Workload document (JSON).
    #[arg(long, conflicts_with = "generate", required_unless_present_any = ["scenario", "generate"])]
    pub workload: Option<PathBuf>,
    /// Generator spec (JSON); one workload is generated per seed.
    #[arg(long)]
    pub generate: Option<PathBuf>,
    /// Policies to simulate; repeat or comma-separate. Defaults to all.
    #[arg(long = "policy", value_delimiter = ',')]
    pub policies: Vec<PolicyKind>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Paths per datacenter pair.
    #[arg(long)]
    pub k: Option<usize>,
    /// Seeds; repeat or comma-separate.
    #[arg(long = "seed", value_delimiter = ',', default_values_t = [0u64])]
    pub seeds: Vec<u64>,
    /// Seconds between a scheduling decision and its enforcement.
    #[arg(long, default_value_t = 0.0)]
    pub decision_delay: f64,
    /// Coflows below this many bytes skip the scheduler.
    #[arg(long, default_value_t = 0)]
    pub bypass_bytes: u64,
    /// Split of a FlowGroup's rate among its flows: fair_share or fifo.
    #[arg(long, default_value = "fair_share", value_parser = parse_intra)]
    pub intra_group: IntraGroupOrder,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_intra(s: &str) -> Result<IntraGroupOrder, String> {
    match s {
        "fair_share" => Ok(IntraGroupOrder::FairShare),
        "fifo" => Ok(IntraGroupOrder::Fifo),
        _ => Err(format!("unknown order `{s}` (expected fair_share or fifo)")),
    }
}

enum Source {
    Fixed(Workload),
    Generated(WorkloadSpec),
}

/// A run with every input resolved.
pub struct Prepared {
    pub name: String,
    pub graph: WanGraph,
    source: Source,
    pub sim: SimConfig,
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u64>,
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "workload".into(), |s| s.to_string_lossy().into_owned())
}

impl Prepared {
    pub fn from_args(a: &RunArgs) -> Result<Self> {
        let (name, graph, source, mut scheduler) = match a.scenario {
            Some(kind) => {
                let s = kind.build();
                (s.name, s.graph, Source::Fixed(s.workload), s.scheduler)
            }
            None => {
                let topo = a.topology.as_ref().expect("clap enforces --topology");
                let graph = load_topology(&read(topo)?).with_context(|| format!("loading {}", topo.display()))?;
                let (name, source) = match (&a.workload, &a.generate) {
                    (Some(w), _) => {
                        let wl = load_workload(&read(w)?, &graph).with_context(|| format!("loading {}", w.display()))?;
                        (stem(w), Source::Fixed(wl))
                    }
                    (None, Some(spec)) => {
                        let s: WorkloadSpec = serde_json::from_str(&read(spec)?)
                            .with_context(|| format!("parsing generator spec {}", spec.display()))?;
                        (stem(spec), Source::Generated(s))
                    }
                    (None, None) => bail!("need --workload or --generate"),
                };
                (name, graph, source, Default::default())
            }
        };
        if let Some(x) = a.alpha {
            scheduler.alpha = x;
        }
        if let Some(x) = a.rho {
            scheduler.rho = x;
        }
        if let Some(x) = a.eta {
            scheduler.eta = x;
        }
        if let Some(x) = a.k {
            scheduler.k = x;
        }
        let sim = SimConfig {
            scheduler,
            intra_group: a.intra_group,
            decision_delay: a.decision_delay,
            bypass_bytes: a.bypass_bytes,
            ..SimConfig::default()
        };
        sim.validate()?;
        let policies = if a.policies.is_empty() { PolicyKind::ALL.to_vec() } else { dedup(&a.policies) };
        let seeds = dedup(&a.seeds);
        Ok(Prepared { name, graph, source, sim, policies, seeds })
    }

    /// Scales the generator's arrival rate; fails for fixed workloads.
    pub fn scale_arrivals(&mut self, m: f64) -> Result<()> {
        match &mut self.source {
            Source::Generated(spec) => {
                *spec = spec.with_arrival_multiplier(m);
                Ok(())
            }
            Source::Fixed(_) => bail!("arrival-rate sweeps need a generated workload (--generate)"),
        }
    }

    fn workload(&self, seed: u64) -> Result<Workload> {
        match &self.source {
            Source::Fixed(w) => Ok(w.clone()),
            Source::Generated(spec) => {
                let spec = WorkloadSpec { seed, ..spec.clone() };
                let doc = generate(&spec, &self.graph)?;
                Ok(load(&doc, &self.graph)?)
            }
        }
    }

    /// Simulates every (policy, seed) pair, writes the outputs into `out`
    /// and returns the metrics rows in (policy, seed) order.
    pub fn execute(&self, out: &Path) -> Result<Vec<MetricsRow>> {
        let workloads = self.seeds.iter().map(|&s| self.workload(s)).collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(PolicyKind, usize)> =
            self.policies.iter().flat_map(|&p| (0..self.seeds.len()).map(move |i| (p, i))).collect();
        let outputs = pairs
            .par_iter()
            .map(|&(p, i)| {
                log::info!("running {p} seed {} on {}", self.seeds[i], self.name);
                run(&workloads[i], &self.graph, p, &self.sim, self.seeds[i])
                    .with_context(|| format!("policy {p}, seed {}", self.seeds[i]))
            })
            .collect::<Result<Vec<_>>>()?;

        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let mut rows = Vec::with_capacity(outputs.len());
        for o in &outputs {
            let tag = format!("{}_{}", o.policy, o.seed);
            write(&out.join(format!("trace_{tag}.jsonl")), &trace_jsonl(&o.trace))?;
            if let Some(s) = &o.schedule_trace {
                write(&out.join(format!("schedule_{tag}.json")), s)?;
            }
            if o.metrics.capacity_violations > 0 || o.metrics.conservation_violations > 0 {
                log::warn!(
                    "{tag}: {} capacity and {} conservation violations",
                    o.metrics.capacity_violations,
                    o.metrics.conservation_violations
                );
            }
            rows.push(MetricsRow::new(o.policy.as_str(), &self.name, o.seed, &o.metrics));
        }
        write(&out.join("metrics.csv"), &metrics_csv(&rows))?;
        Ok(rows)
    }
}

fn dedup<T: PartialEq + Copy>(xs: &[T]) -> Vec<T> {
    let mut v = Vec::new();
    for &x in xs {
        if !v.contains(&x) {
            v.push(x);
        }
    }
    v
}

fn write(p: &Path, s: &str) -> Result<()> {
    fs::write(p, s).with_context(|| format!("writing {}", p.display()))
}

pub fn cmd_run(a: &RunArgs) -> Result<()> {
    let prep = Prepared::from_args(a)?;
    let rows = prep.execute(&a.out)?;
    println!("{:<10} {:>6} {:>8} {:>14} {:>14}", "policy", "seed", "finished", "avg_cct_s", "avg_jct_s");
    for r in &rows {
        println!("{:<10} {:>6} {:>8} {:>14} {:>14}", r.policy, r.seed, r.finished, r.avg_cct, r.avg_jct);
    }
    println!("wrote {}", a.out.join("metrics.csv").display());
    Ok(())
}

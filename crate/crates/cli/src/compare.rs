use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use geoflow_core::MetricsRow;

/// Mean factor of improvement of terra over one baseline policy.
#[derive(Clone, Debug, PartialEq)]
pub struct FoiRow {
    pub policy: String,
    /// (workload, seed) pairs present for both policies.
    pub pairs: usize,
    pub cct: f64,
    pub jct: f64,
}

fn num(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite() && *x > 0.0)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// FoI = baseline average / terra average, per (workload, seed), averaged.
/// Terra's own row is included and is 1 by definition.
pub fn foi_table(rows: &[MetricsRow]) -> Result<Vec<FoiRow>> {
    let terra: BTreeMap<(&str, u64), &MetricsRow> =
        rows.iter().filter(|r| r.policy == "terra").map(|r| ((r.workload.as_str(), r.seed), r)).collect();
    if terra.is_empty() {
        bail!("no terra rows to compare against");
    }
    let mut by_policy: BTreeMap<&str, (Vec<f64>, Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let Some(t) = terra.get(&(r.workload.as_str(), r.seed)) else { continue };
        let e = by_policy.entry(r.policy.as_str()).or_default();
        e.2 += 1;
        if let (Some(b), Some(x)) = (num(&r.avg_cct), num(&t.avg_cct)) {
            e.0.push(b / x);
        }
        if let (Some(b), Some(x)) = (num(&r.avg_jct), num(&t.avg_jct)) {
            e.1.push(b / x);
        }
    }
    Ok(by_policy
        .into_iter()
        .map(|(p, (c, j, n))| FoiRow { policy: p.to_string(), pairs: n, cct: mean(&c), jct: mean(&j) })
        .collect())
}

pub fn read_rows(path: &Path) -> Result<Vec<MetricsRow>> {
    let file = if path.is_dir() { path.join("metrics.csv") } else { path.to_path_buf() };
    let mut rd = csv::Reader::from_path(&file).with_context(|| format!("opening {}", file.display()))?;
    rd.deserialize().collect::<Result<Vec<MetricsRow>, _>>().with_context(|| format!("parsing {}", file.display()))
}

pub fn cmd_compare(path: &Path) -> Result<()> {
    let table = foi_table(&read_rows(path)?)?;
    println!("policy,pairs,foi_cct,foi_jct");
    for r in table {
        println!("{},{},{:.6},{:.6}", r.policy, r.pairs, r.cct, r.jct);
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::fs;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use crate::compare::foi_table;
use crate::run::{Prepared, RunArgs};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// Paths per datacenter pair.
    K,
    /// Reserved capacity share.
    Alpha,
    /// Multiplier on the generator's arrival rate.
    Arrival,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::Alpha => "alpha",
            SweepParam::Arrival => "arrival",
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Values to try; comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let mut lines = vec!["param,value,policy,seeds,avg_cct,avg_jct,foi_cct,foi_jct".to_string()];
    for &v in &a.values {
        let mut prep = Prepared::from_args(&a.run)?;
        match a.param {
            SweepParam::K => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    bail!("k must be a positive integer, got {v}");
                }
                prep.sim.scheduler.k = v as usize;
            }
            SweepParam::Alpha => prep.sim.scheduler.alpha = v,
            SweepParam::Arrival => {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("arrival multiplier must be positive, got {v}");
                }
                prep.scale_arrivals(v)?;
            }
        }
        prep.sim.validate().with_context(|| format!("{} = {v}", a.param.name()))?;
        let dir = a.run.out.join(format!("{}_{v}", a.param.name()));
        let rows = prep.execute(&dir)?;

        let foi: BTreeMap<String, (f64, f64)> = match foi_table(&rows) {
            Ok(t) => t.into_iter().map(|r| (r.policy, (r.cct, r.jct))).collect(),
            Err(_) => BTreeMap::new(),
        };
        for &p in &prep.policies {
            let mine: Vec<_> = rows.iter().filter(|r| r.policy == p.as_str()).collect();
            let avg = |f: fn(&geoflow_core::MetricsRow) -> &str| {
                let xs: Vec<f64> = mine.iter().filter_map(|r| f(r).parse::<f64>().ok()).collect();
                xs.iter().sum::<f64>() / xs.len().max(1) as f64
            };
            let (fc, fj) = foi.get(p.as_str()).map_or((String::new(), String::new()), |&(c, j)| {
                (format!("{c:.6}"), format!("{j:.6}"))
            });
            lines.push(format!(
                "{},{v},{p},{},{:.6},{:.6},{fc},{fj}",
                a.param.name(),
                mine.len(),
                avg(|r| &r.avg_cct),
                avg(|r| &r.avg_jct)
            ));
        }
    }
    fs::create_dir_all(&a.run.out)?;
    let text = lines.join("\n") + "\n";
    let path = a.run.out.join("sweep.csv");
    fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    print!("{text}");
    Ok(())
}

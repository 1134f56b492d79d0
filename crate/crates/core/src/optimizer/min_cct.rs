use crate::lp::{self, Comparator, LinearProgram, LpStatus};
use crate::topology::{LinkId, WanGraph};

use super::decompose::decompose_inner;
use super::{capacity_floor, Allocation, ArcMask, Demand, GroupAllocation, OptimizerError, Residual};

#[derive(Clone, Debug, PartialEq)]
pub enum CctResult {
    Feasible(Allocation),
    /// Some FlowGroup has no permitted path with spare capacity.
    Infeasible,
}

impl CctResult {
    pub fn allocation(self) -> Option<Allocation> {
        match self {
            CctResult::Feasible(a) => Some(a),
            CctResult::Infeasible => None,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            CctResult::Feasible(a) => Some(a.gamma),
            CctResult::Infeasible => None,
        }
    }
}

/// Arc-flow LP skeleton shared by the single-coflow and MCF formulations:
/// one rate variable per (commodity, usable arc), conservation rows at
/// intermediate nodes, and shared capacity rows. Rates are normalized by
/// `cap_scale` and volumes by `vol_scale`.
pub(crate) struct CommodityLp {
    pub lp: LinearProgram,
    pub cap_scale: f64,
    pub vol_scale: f64,
    /// Per commodity: (link, variable) pairs.
    pub vars: Vec<Vec<(LinkId, usize)>>,
    /// Per commodity: variables of arcs leaving its source.
    pub out_vars: Vec<Vec<usize>>,
    /// Normalized volumes.
    pub volumes: Vec<f64>,
}

impl CommodityLp {
    pub fn build(
        g: &WanGraph,
        demands: &[Demand],
        arcs: &[Vec<LinkId>],
        residual: &Residual,
    ) -> CommodityLp {
        let cap_scale = arcs
            .iter()
            .flatten()
            .map(|&l| residual.get(l))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let vol_scale = demands.iter().map(|d| d.volume).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut lp = LinearProgram::new();
        let mut vars = Vec::with_capacity(demands.len());
        let mut out_vars = Vec::with_capacity(demands.len());
        let mut per_link: Vec<Vec<usize>> = vec![Vec::new(); g.link_count()];
        for (k, (d, set)) in demands.iter().zip(arcs).enumerate() {
            let mut vk = Vec::with_capacity(set.len());
            let mut out = Vec::new();
            for &l in set {
                let v = lp.add_var(format!("f{k}_{}", l.0), None);
                vk.push((l, v));
                per_link[l.0].push(v);
                if g.link(l).unwrap().src == d.key.src {
                    out.push(v);
                }
            }
            // Conservation at every intermediate node the commodity touches.
            let mut nodes: Vec<usize> = set
                .iter()
                .flat_map(|&l| {
                    let link = g.link(l).unwrap();
                    [link.src, link.dst]
                })
                .filter(|&n| n != d.key.src && n != d.key.dst)
                .collect();
            nodes.sort_unstable();
            nodes.dedup();
            for n in nodes {
                let mut row = Vec::new();
                for &(l, v) in &vk {
                    let link = g.link(l).unwrap();
                    if link.src == n {
                        row.push((v, 1.0));
                    } else if link.dst == n {
                        row.push((v, -1.0));
                    }
                }
                lp.add_constraint(row, Comparator::Eq, 0.0);
            }
            vars.push(vk);
            out_vars.push(out);
        }
        for (l, vs) in per_link.iter().enumerate() {
            if !vs.is_empty() {
                let cap = residual.get(LinkId(l)) / cap_scale;
                lp.add_constraint(vs.iter().map(|&v| (v, 1.0)).collect(), Comparator::Le, cap);
            }
        }
        let volumes = demands.iter().map(|d| d.volume / vol_scale).collect();
        CommodityLp { lp, cap_scale, vol_scale, vars, out_vars, volumes }
    }

    /// Outflow expression of commodity `k` minus `coef` times `extra`.
    pub fn out_row(&self, k: usize, extra: Option<(usize, f64)>) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = self.out_vars[k].iter().map(|&v| (v, 1.0)).collect();
        if let Some((v, c)) = extra {
            row.push((v, -c));
        }
        row
    }

    /// Real arc rates of commodity `k` from an LP assignment.
    pub fn arc_rates(&self, k: usize, values: &[f64]) -> Vec<(LinkId, f64)> {
        self.vars[k]
            .iter()
            .map(|&(l, v)| (l, values[v] * self.cap_scale))
            .filter(|a| a.1 > 0.0)
            .collect()
    }
}

/// Builds a group allocation from raw arc rates: paths by decomposition, with
/// any circulation discarded.
pub(crate) fn group_from_arcs(
    g: &WanGraph,
    d: &Demand,
    arcs: &[(LinkId, f64)],
) -> Result<GroupAllocation, OptimizerError> {
    let dec = decompose_inner(g, arcs, d.key.src, d.key.dst)?;
    Ok(GroupAllocation::from_paths(d.key, dec.paths))
}

pub(crate) fn usable_arcs_for(
    g: &WanGraph,
    demands: &[Demand],
    residual: &Residual,
    mask: &ArcMask,
) -> Result<Vec<Vec<LinkId>>, OptimizerError> {
    let floor = capacity_floor(residual);
    let mut out = Vec::with_capacity(demands.len());
    for d in demands {
        if !(d.volume > 0.0) || !d.volume.is_finite() {
            return Err(OptimizerError::InvalidDemand(d.key));
        }
        let pair = (d.key.src, d.key.dst);
        if let Some(set) = mask.get(pair) {
            for &l in set {
                match g.link(l) {
                    None => {
                        return Err(OptimizerError::MalformedMask(format!("{l} does not exist")))
                    }
                    Some(link) if !link.up => {
                        return Err(OptimizerError::MalformedMask(format!(
                            "{} is down",
                            g.link_name(l)
                        )))
                    }
                    _ => {}
                }
            }
        }
        out.push(mask.usable_arcs(g, residual, d.key.src, d.key.dst, floor));
    }
    Ok(out)
}

/// Relative give on the progress rate when minimizing bandwidth, so the
/// second LP stays feasible under rounding.
const LEAN_SLACK: f64 = 1e-12;

/// Minimum total arc rate that still gives every group progress `lambda`
/// (normalized units).
fn leanest(
    g: &WanGraph,
    demands: &[Demand],
    arcs: &[Vec<LinkId>],
    residual: &Residual,
    lambda: f64,
) -> Option<Vec<f64>> {
    let mut c = CommodityLp::build(g, demands, arcs, residual);
    for k in 0..demands.len() {
        let row = c.out_row(k, None);
        let rhs = c.volumes[k] * lambda;
        c.lp.add_constraint(row, Comparator::Eq, rhs);
        for &(_, v) in &c.vars[k] {
            c.lp.set_objective(v, -1.0);
        }
    }
    match lp::solve(&c.lp) {
        Ok(sol) if sol.status == LpStatus::Optimal => Some(sol.values),
        _ => None,
    }
}

/// Minimum completion time of the FlowGroups `demands` on `residual`, with
/// every group progressing at the common rate `1/gamma` of its volume.
///
/// The objective `min gamma` is linearized by maximizing the progress rate
/// `lambda = 1/gamma`, so each source row reads `out(src) = volume * lambda`.
pub fn min_cct(
    demands: &[Demand],
    g: &WanGraph,
    residual: &Residual,
    mask: &ArcMask,
) -> Result<CctResult, OptimizerError> {
    let Some(first) = demands.first() else {
        return Ok(CctResult::Feasible(Allocation {
            coflow: crate::coflow::CoflowId(0),
            gamma: 0.0,
            groups: Vec::new(),
        }));
    };
    let arcs = usable_arcs_for(g, demands, residual, mask)?;
    if arcs.iter().any(Vec::is_empty) {
        return Ok(CctResult::Infeasible);
    }
    let mut c = CommodityLp::build(g, demands, &arcs, residual);
    let lambda = c.lp.add_var("lambda", None);
    c.lp.set_objective(lambda, 1.0);
    for k in 0..demands.len() {
        // The sink row is implied: no arc enters the source or leaves the sink,
        // and every other node conserves flow.
        let row = c.out_row(k, Some((lambda, c.volumes[k])));
        c.lp.add_constraint(row, Comparator::Eq, 0.0);
    }
    let sol = lp::solve(&c.lp)?;
    if sol.status != LpStatus::Optimal || sol.value(lambda) <= 0.0 {
        return Ok(CctResult::Infeasible);
    }
    // Second pass: at that progress rate, use as little bandwidth as possible
    // so later coflows get the most room. Falls back to the first solution.
    let (lam, values) = match leanest(g, demands, &arcs, residual, sol.value(lambda) * (1.0 - LEAN_SLACK)) {
        Some(v) => (sol.value(lambda) * (1.0 - LEAN_SLACK), v),
        None => (sol.value(lambda), sol.values.clone()),
    };
    let gamma = c.vol_scale / (lam * c.cap_scale);
    let mut groups = Vec::with_capacity(demands.len());
    for (k, d) in demands.iter().enumerate() {
        groups.push(group_from_arcs(g, d, &c.arc_rates(k, &values))?);
    }
    Ok(CctResult::Feasible(Allocation { coflow: first.key.coflow, gamma, groups }))
}

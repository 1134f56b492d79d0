use log::trace;

use crate::lp::{self, Comparator, LpStatus};
use crate::topology::WanGraph;

use super::min_cct::{group_from_arcs, usable_arcs_for, CommodityLp};
use super::{ArcMask, Demand, GroupAllocation, OptimizerError, Residual};

/// Relative slack that separates "strictly above the water level" from "tight".
const LEVEL_TOL: f64 = 1e-7;
/// Smallest volume, relative to the largest, that the LP sees. Nearly
/// finished groups otherwise make the level variable badly scaled.
const MIN_RELATIVE_VOLUME: f64 = 1e-6;

/// Max-min fair multi-commodity flow by water-filling over rate fractions
/// (rate / remaining volume).
///
/// Each round maximizes the common fraction `t` of the unfrozen groups, then
/// freezes every group that cannot exceed `t` while the others keep it. A
/// final pass maximizes total throughput with each group held at its level,
/// so saturated cuts leave no spare capacity. Groups without any permitted
/// path receive rate zero. Output follows the order of `demands`.
pub fn max_min_mcf(
    demands: &[Demand],
    g: &WanGraph,
    residual: &Residual,
    mask: &ArcMask,
) -> Result<Vec<GroupAllocation>, OptimizerError> {
    let arcs = usable_arcs_for(g, demands, residual, mask)?;
    let live: Vec<usize> = (0..demands.len()).filter(|&k| !arcs[k].is_empty()).collect();
    let mut out: Vec<GroupAllocation> = demands
        .iter()
        .map(|d| GroupAllocation { key: d.key, rate: 0.0, arcs: Vec::new(), paths: Vec::new() })
        .collect();
    if live.is_empty() {
        return Ok(out);
    }
    let live_demands: Vec<Demand> = live.iter().map(|&k| demands[k]).collect();
    let live_arcs: Vec<_> = live.iter().map(|&k| arcs[k].clone()).collect();
    let mut base = CommodityLp::build(g, &live_demands, &live_arcs, residual);
    for v in &mut base.volumes {
        *v = v.max(MIN_RELATIVE_VOLUME);
    }
    let n = live.len();

    // Frozen water level per live group (normalized fraction units).
    let mut level: Vec<Option<f64>> = vec![None; n];
    let hold = |c: &mut CommodityLp, level: &[Option<f64>]| {
        for (k, l) in level.iter().enumerate() {
            if let Some(l) = l {
                let row = c.out_row(k, None);
                c.lp.add_constraint(row, Comparator::Ge, c.volumes[k] * l * (1.0 - 1e-9));
            }
        }
    };

    let mut rounds = 0;
    while level.iter().any(Option::is_none) {
        rounds += 1;
        let unfrozen: Vec<usize> = (0..n).filter(|&k| level[k].is_none()).collect();

        // Highest common level for the unfrozen groups.
        let mut c = clone_lp(&base);
        let t = c.lp.add_var("t", None);
        c.lp.set_objective(t, 1.0);
        for &k in &unfrozen {
            let row = c.out_row(k, Some((t, c.volumes[k])));
            c.lp.add_constraint(row, Comparator::Ge, 0.0);
        }
        hold(&mut c, &level);
        let sol = lp::solve(&c.lp)?;
        if sol.status != LpStatus::Optimal {
            // Only reachable through round-off in held levels; freeze at zero.
            for &k in &unfrozen {
                level[k] = Some(0.0);
            }
            break;
        }
        let t_star = sol.value(t);

        // Push every unfrozen group above the level where possible; groups
        // that rise are certainly not tight.
        let mut c = clone_lp(&base);
        for &k in &unfrozen {
            let row = c.out_row(k, None);
            c.lp.add_constraint(row, Comparator::Ge, c.volumes[k] * t_star * (1.0 - 1e-9));
            for &v in &c.out_vars[k].clone() {
                c.lp.set_objective(v, 1.0 / c.volumes[k]);
            }
        }
        hold(&mut c, &level);
        let lifted = lp::solve(&c.lp)?;
        let ratio = |k: usize, values: &[f64], c: &CommodityLp| {
            c.out_vars[k].iter().map(|&v| values[v]).sum::<f64>() / c.volumes[k]
        };
        let threshold = t_star * (1.0 + LEVEL_TOL) + 1e-12;
        let mut newly_frozen = Vec::new();
        for &k in &unfrozen {
            if lifted.is_optimal() && ratio(k, &lifted.values, &c) > threshold {
                continue;
            }
            // Individual check: can k alone exceed the level?
            let mut ck = clone_lp(&base);
            for &j in &unfrozen {
                if j != k {
                    let row = ck.out_row(j, None);
                    ck.lp.add_constraint(row, Comparator::Ge, ck.volumes[j] * t_star * (1.0 - 1e-9));
                }
            }
            for &v in &ck.out_vars[k].clone() {
                ck.lp.set_objective(v, 1.0 / ck.volumes[k]);
            }
            hold(&mut ck, &level);
            let s = lp::solve(&ck.lp)?;
            if !s.is_optimal() || s.objective <= threshold {
                newly_frozen.push(k);
            }
        }
        if newly_frozen.is_empty() {
            // Round-off guard: freeze the groups sitting lowest in the lifted solution.
            let lowest = unfrozen
                .iter()
                .map(|&k| (k, if lifted.is_optimal() { ratio(k, &lifted.values, &c) } else { 0.0 }))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            newly_frozen.push(lowest.0);
        }
        for k in newly_frozen {
            level[k] = Some(t_star);
        }
    }
    trace!("max-min MCF over {n} groups converged in {rounds} rounds");

    // Work-conserving final pass.
    let mut c = clone_lp(&base);
    for k in 0..n {
        for &v in &c.out_vars[k].clone() {
            c.lp.set_objective(v, 1.0);
        }
    }
    hold(&mut c, &level);
    let sol = lp::solve(&c.lp)?;
    if !sol.is_optimal() {
        return Ok(out);
    }
    for (slot, &k) in live.iter().enumerate() {
        out[k] = group_from_arcs(g, &demands[k], &c.arc_rates(slot, &sol.values))?;
    }
    Ok(out)
}

fn clone_lp(c: &CommodityLp) -> CommodityLp {
    CommodityLp {
        lp: c.lp.clone(),
        cap_scale: c.cap_scale,
        vol_scale: c.vol_scale,
        vars: c.vars.clone(),
        out_vars: c.out_vars.clone(),
        volumes: c.volumes.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coflow::{CoflowId, GroupKey};
    use crate::topology::{load_topology, BYTES_PER_GBPS};

    const GBPS: f64 = BYTES_PER_GBPS;

    fn demand(c: u64, src: usize, dst: usize, volume: f64) -> Demand {
        Demand { key: GroupKey { coflow: CoflowId(c), src, dst }, volume }
    }

    #[test]
    fn shared_arc_splits_evenly() {
        let g = load_topology(
            r#"{"nodes":["A","B","C","D"],"links":[
            {"src":"A","dst":"C","gbps":100},{"src":"B","dst":"C","gbps":100},
            {"src":"C","dst":"D","gbps":10}]}"#,
        )
        .unwrap();
        let ds = [demand(1, 0, 3, 1e9), demand(2, 1, 3, 1e9)];
        let mask = ArcMask::from_k_paths(&g, [(0, 3), (1, 3)], 15);
        let r = max_min_mcf(&ds, &g, &Residual::from_graph(&g), &mask).unwrap();
        assert!((r[0].rate - 5.0 * GBPS).abs() < 1e-3 * GBPS);
        assert!((r[1].rate - 5.0 * GBPS).abs() < 1e-3 * GBPS);
    }

    #[test]
    fn disjoint_groups_independent() {
        let g = load_topology(
            r#"{"nodes":["A","B","C","D"],"links":[
            {"src":"A","dst":"B","gbps":10},{"src":"C","dst":"D","gbps":10}]}"#,
        )
        .unwrap();
        let ds = [demand(1, 0, 1, 1e9), demand(2, 2, 3, 7e9)];
        let mask = ArcMask::from_k_paths(&g, [(0, 1), (2, 3)], 15);
        let r = max_min_mcf(&ds, &g, &Residual::from_graph(&g), &mask).unwrap();
        assert!((r[0].rate - 10.0 * GBPS).abs() < 1e-3 * GBPS);
        assert!((r[1].rate - 10.0 * GBPS).abs() < 1e-3 * GBPS);
    }

    #[test]
    fn bottlenecked_group_leaves_rest_to_other() {
        // Group 1: A->C->D with A->C = 2 Gbps. Group 2: B->C->D. Shared C->D = 10 Gbps.
        let g = load_topology(
            r#"{"nodes":["A","B","C","D"],"links":[
            {"src":"A","dst":"C","gbps":2},{"src":"B","dst":"C","gbps":100},
            {"src":"C","dst":"D","gbps":10}]}"#,
        )
        .unwrap();
        let ds = [demand(1, 0, 3, 1e9), demand(2, 1, 3, 1e9)];
        let mask = ArcMask::from_k_paths(&g, [(0, 3), (1, 3)], 15);
        let r = max_min_mcf(&ds, &g, &Residual::from_graph(&g), &mask).unwrap();
        assert!((r[0].rate - 2.0 * GBPS).abs() < 1e-3 * GBPS);
        assert!((r[1].rate - 8.0 * GBPS).abs() < 1e-3 * GBPS);
    }

    #[test]
    fn fairness_unit_is_fraction_of_volume() {
        let g = load_topology(r#"{"nodes":["A","B"],"links":[{"src":"A","dst":"B","gbps":9}]}"#).unwrap();
        let ds = [demand(1, 0, 1, 1e9), demand(2, 0, 1, 2e9)];
        let mask = ArcMask::from_k_paths(&g, [(0, 1)], 1);
        let r = max_min_mcf(&ds, &g, &Residual::from_graph(&g), &mask).unwrap();
        assert!((r[0].rate - 3.0 * GBPS).abs() < 1e-3 * GBPS);
        assert!((r[1].rate - 6.0 * GBPS).abs() < 1e-3 * GBPS);
    }

    #[test]
    fn unreachable_group_gets_zero() {
        let g = load_topology(
            r#"{"nodes":["A","B","C"],"links":[{"src":"A","dst":"B","gbps":10}]}"#,
        )
        .unwrap();
        let ds = [demand(1, 0, 2, 1e9), demand(2, 0, 1, 1e9)];
        let mask = ArcMask::from_k_paths(&g, [(0, 2), (0, 1)], 3);
        let r = max_min_mcf(&ds, &g, &Residual::from_graph(&g), &mask).unwrap();
        assert_eq!(r[0].rate, 0.0);
        assert!((r[1].rate - 10.0 * GBPS).abs() < 1e-3 * GBPS);
    }
}

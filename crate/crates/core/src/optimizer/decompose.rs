use std::collections::BTreeMap;

use crate::topology::{LinkId, NodeId, WanGraph};

use super::{OptimizerError, PathRate, RATE_TOL};

/// Paths peeled from an arc-rate matrix, plus whatever circulated in cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub paths: Vec<PathRate>,
    /// Total rate removed from cycles that carried no src->dst traffic.
    pub cycle_rate: f64,
}

/// Standard flow decomposition. Each round walks from `src` along positive arcs,
/// always stepping to the next node with the smallest name, and peels off the
/// bottleneck rate once `dst` is reached. Cycles met on the way are cancelled.
/// Circulation above the rate tolerance is an error.
pub fn decompose_paths(
    g: &WanGraph,
    rates: &[(LinkId, f64)],
    src: NodeId,
    dst: NodeId,
) -> Result<Decomposition, OptimizerError> {
    let d = decompose_inner(g, rates, src, dst)?;
    let total: f64 = d.paths.iter().map(|p| p.rate).sum();
    if d.cycle_rate > RATE_TOL * total.max(1.0) {
        return Err(OptimizerError::CycleTooLarge(d.cycle_rate));
    }
    Ok(d)
}

/// Like [`decompose_paths`] but silently discards cycles of any size.
pub(crate) fn decompose_inner(
    g: &WanGraph,
    rates: &[(LinkId, f64)],
    src: NodeId,
    dst: NodeId,
) -> Result<Decomposition, OptimizerError> {
    let mut rate: BTreeMap<LinkId, f64> = BTreeMap::new();
    for &(l, r) in rates {
        if r < 0.0 {
            return Err(OptimizerError::ConservationViolated { node: g.link(l).unwrap().src, violation: r });
        }
        if r > 0.0 {
            *rate.entry(l).or_default() += r;
        }
    }
    let outflow: f64 = g.out_links(src).iter().filter_map(|l| rate.get(l)).sum();
    let scale = rate.values().copied().fold(0.0, f64::max).max(outflow);
    let tol = RATE_TOL * scale.max(1e-300);
    let zero = scale * 1e-12;

    let mut net = vec![0.0; g.node_count()];
    for (&l, &r) in &rate {
        let link = g.link(l).unwrap();
        net[link.src] += r;
        net[link.dst] -= r;
    }
    for (v, &x) in net.iter().enumerate() {
        if v != src && v != dst && x.abs() > tol {
            return Err(OptimizerError::ConservationViolated { node: v, violation: x });
        }
    }

    // Out-arcs of each node ordered by destination name.
    let mut order: Vec<Vec<LinkId>> = (0..g.node_count()).map(|u| g.out_links(u).to_vec()).collect();
    for arcs in &mut order {
        arcs.sort_by(|&a, &b| {
            g.node_name(g.link(a).unwrap().dst).cmp(g.node_name(g.link(b).unwrap().dst))
        });
    }

    let mut paths = Vec::new();
    let mut cycle_rate = 0.0;
    let max_rounds = 4 * (rate.len() + 1) + 8;
    let mut rounds = 0;
    loop {
        let remaining_out: f64 = g.out_links(src).iter().filter_map(|l| rate.get(l)).sum();
        if remaining_out <= tol || rounds > max_rounds {
            break;
        }
        rounds += 1;
        let mut nodes = vec![src];
        let mut links: Vec<LinkId> = Vec::new();
        let mut pos = vec![usize::MAX; g.node_count()];
        pos[src] = 0;
        let mut u = src;
        let mut stuck = false;
        while u != dst {
            let next = order[u].iter().copied().find(|l| rate.get(l).copied().unwrap_or(0.0) > zero);
            let Some(l) = next else {
                stuck = true;
                break;
            };
            let v = g.link(l).unwrap().dst;
            if pos[v] != usize::MAX {
                // Cancel the cycle v -> ... -> u -> v.
                let start = pos[v];
                let mut cyc: Vec<LinkId> = links[start..].to_vec();
                cyc.push(l);
                let m = cyc.iter().map(|c| rate[c]).fold(f64::INFINITY, f64::min);
                for c in &cyc {
                    reduce(&mut rate, *c, m, zero);
                }
                cycle_rate += m;
                for &n in &nodes[start + 1..] {
                    pos[n] = usize::MAX;
                }
                nodes.truncate(start + 1);
                links.truncate(start);
                u = v;
                continue;
            }
            pos[v] = nodes.len();
            nodes.push(v);
            links.push(l);
            u = v;
        }
        if stuck {
            if links.is_empty() {
                break;
            }
            // Dead end: only round-off imbalance may be dropped here.
            let m = links.iter().map(|c| rate[c]).fold(f64::INFINITY, f64::min);
            if m > tol {
                return Err(OptimizerError::ConservationViolated { node: u, violation: m });
            }
            for c in &links {
                reduce(&mut rate, *c, m, zero);
            }
            continue;
        }
        let m = links.iter().map(|c| rate[c]).fold(f64::INFINITY, f64::min);
        for c in &links {
            reduce(&mut rate, *c, m, zero);
        }
        paths.push(PathRate { nodes, links, rate: m });
    }
    // Anything left circulates.
    cycle_rate += rate.values().filter(|&&r| r > zero).sum::<f64>();
    merge_duplicate_paths(&mut paths);
    Ok(Decomposition { paths, cycle_rate })
}

fn reduce(rate: &mut BTreeMap<LinkId, f64>, l: LinkId, by: f64, zero: f64) {
    if let Some(r) = rate.get_mut(&l) {
        *r -= by;
        if *r <= zero {
            rate.remove(&l);
        }
    }
}

fn merge_duplicate_paths(paths: &mut Vec<PathRate>) {
    let mut out: Vec<PathRate> = Vec::with_capacity(paths.len());
    for p in paths.drain(..) {
        if let Some(q) = out.iter_mut().find(|q| q.links == p.links) {
            q.rate += p.rate;
        } else {
            out.push(p);
        }
    }
    *paths = out;
}

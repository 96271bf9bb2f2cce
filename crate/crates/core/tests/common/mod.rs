//! Reference models shared by the integration tests. They are written from
//! the definitions, without reusing the library's cost machinery.

#![allow(dead_code)]

use hybrid_noc::selector::{SelectionConstraints, SelectorConfig, TrafficMatrix};
use hybrid_noc::topology::{LogicalLinkCandidate, MeshSpec, NodeId, SnakeLayout};

fn manhattan(mesh: &MeshSpec, a: NodeId, b: NodeId) -> u32 {
    let (ax, ay) = (a % mesh.width, a / mesh.width);
    let (bx, by) = (b % mesh.width, b / mesh.width);
    (ax.abs_diff(bx) + ay.abs_diff(by)) as u32
}

/// Cheapest route using the mesh and at most one of `links`.
pub fn single_segment_cost(
    mesh: &MeshSpec,
    cfg: &SelectorConfig,
    links: &[LogicalLinkCandidate],
    s: NodeId,
    d: NodeId,
) -> u32 {
    let edge = cfg.ingress_cycles + cfg.photonic_cycles + cfg.egress_cycles;
    let direct = manhattan(mesh, s, d) * cfg.hop_cycles;
    links
        .iter()
        .map(|l| (manhattan(mesh, s, l.src) + manhattan(mesh, l.dst, d)) * cfg.hop_cycles + edge)
        .fold(direct, u32::min)
}

/// Volume-weighted mean route cost with `links` active.
pub fn weighted_cost(
    mesh: &MeshSpec,
    cfg: &SelectorConfig,
    links: &[LogicalLinkCandidate],
    traffic: &TrafficMatrix,
) -> f64 {
    let n = mesh.width * mesh.height;
    let mut sum = 0.0;
    let mut total = 0.0;
    for s in 0..n {
        for d in 0..n {
            let v = traffic.get(s, d);
            if v > 0.0 {
                sum += v * f64::from(single_segment_cost(mesh, cfg, links, s, d));
                total += v;
            }
        }
    }
    sum / total
}

/// Whether `links` respects the total, per-snake and per-router budgets.
pub fn respects_budgets(
    layout: &SnakeLayout,
    constraints: &SelectionConstraints,
    links: &[LogicalLinkCandidate],
) -> bool {
    let n = layout.mesh.width * layout.mesh.height;
    let k = layout.snakes.len();
    let per_snake = constraints.total_links / k;
    let mut snake = vec![0usize; k];
    let mut out = vec![0usize; n];
    let mut inc = vec![0usize; n];
    for l in links {
        snake[l.snake] += 1;
        out[l.src] += 1;
        inc[l.dst] += 1;
    }
    links.len() <= constraints.total_links
        && snake.iter().all(|&c| c <= per_snake)
        && out.iter().all(|&c| c <= constraints.per_node)
        && inc.iter().all(|&c| c <= constraints.per_node)
}

/// Lowest weighted cost over every budget-respecting subset of `pool`.
pub fn brute_force_optimum(
    layout: &SnakeLayout,
    constraints: &SelectionConstraints,
    cfg: &SelectorConfig,
    pool: &[LogicalLinkCandidate],
    traffic: &TrafficMatrix,
) -> f64 {
    assert!(pool.len() <= 16, "subset enumeration is exponential");
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << pool.len()) {
        let subset: Vec<_> = (0..pool.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pool[i])
            .collect();
        if respects_budgets(layout, constraints, &subset) {
            best = best.min(weighted_cost(&layout.mesh, cfg, &subset, traffic));
        }
    }
    best
}

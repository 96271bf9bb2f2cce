//! Greedy express-link selection for a traffic pattern and the routing
//! tables built from it.

use hybrid_noc::selector::{
    base_latency, routing_tables, select, CostModel, SelectionConstraints, SelectorConfig,
};
use hybrid_noc::topology::{build, MeshSpec};
use hybrid_noc::traffic::{generate, trace_to_matrix, PatternSpec, Placement};

fn main() -> hybrid_noc::Result<()> {
    let mesh = MeshSpec::default();
    let trace = generate(&PatternSpec::fcp(Placement::Center), &mesh)?;
    let matrix = trace_to_matrix(&trace, &mesh)?;
    let layout = build(&mesh, 2, 2)?;
    let cfg = SelectorConfig::default();
    let sel = select(&layout, &matrix, &SelectionConstraints::default(), &cfg)?;

    for step in sel.log.iter().take(8) {
        let c = step.candidate;
        println!(
            "snake {} {:?} -> {:?}  gain {:.4}  {}",
            c.snake,
            mesh.coord(c.src),
            mesh.coord(c.dst),
            step.gain,
            if step.accepted { "accepted" } else { "over budget" }
        );
    }
    let after = CostModel::with_links(&mesh, &cfg, &sel.links).weighted_latency(&matrix)?;
    println!(
        "{} links active; weighted path cost {:.3} -> {:.3} cycles",
        sel.links.len(),
        base_latency(&mesh, &matrix, &cfg)?,
        after
    );

    let tables = routing_tables(&layout, &sel.links, &cfg);
    let (s, d) = (mesh.node(0, 0), mesh.node(7, 3));
    println!("route {s} -> {d}: {:?}, cost {}", tables.trace(s, d), tables.path_cost(s, d));
    Ok(())
}

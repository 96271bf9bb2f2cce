//! Cycle-level simulation of the mesh and a hybrid variant on the same
//! trace, with energy accounting for both.

use hybrid_noc::config::Config;
use hybrid_noc::experiment::{design_variant, run_design};
use hybrid_noc::traffic::generate;

fn main() -> hybrid_noc::Result<()> {
    let cfg = Config::default();
    let trace = generate(&cfg.traffic, &cfg.mesh)?;
    let mesh = run_design(&cfg, None, &trace)?;
    let design = design_variant(&cfg, 1, 2)?;
    let hybrid = run_design(&cfg, Some(&design), &trace)?;

    for (name, out) in [("mesh", &mesh), ("K1S2", &hybrid)] {
        let r = &out.report;
        println!(
            "{name}: {} packets, mean latency {:.2}, p95 {}, {} photonic flits, {:.3} pJ/bit",
            r.packets.len(),
            r.mean_latency,
            r.p95_latency,
            r.total_photonic_flits(),
            out.energy.total_pj_per_bit()
        );
    }
    let ratios = hybrid.energy.ratios(&mesh.energy);
    println!(
        "hybrid vs mesh: latency x{:.3}, dynamic energy x{:.3}, total energy x{:.3}",
        hybrid.report.mean_latency / mesh.report.mean_latency,
        ratios.dynamic,
        ratios.total
    );
    Ok(())
}

//! Serpentine layouts for every (K, S) variant and the photonic resources
//! of their optimized link designs.

use hybrid_noc::config::Config;
use hybrid_noc::energy::{static_power_summary, PhotonicDesigns};
use hybrid_noc::experiment::design_variant;
use hybrid_noc::topology::{build, candidates, VARIANTS};

fn main() -> hybrid_noc::Result<()> {
    let cfg = Config::default();

    let layout = build(&cfg.mesh, 2, 4)?;
    for snake in &layout.snakes {
        println!("snake {} routers {:?}", snake.id, snake.routers);
        println!("        sites   {:?}", snake.sites);
    }

    println!("\nvariant  sites  candidates  length mm  D_λ  W  static W");
    for (k, s) in VARIANTS {
        let v = design_variant(&cfg, k, s)?;
        let statics = static_power_summary(&v.layout, &PhotonicDesigns::uniform(&v.layout, v.design));
        println!(
            "K{k}S{s:<5} {:>5} {:>11} {:>10} {:>4} {:>2} {:>9.3}",
            v.layout.total_sites(),
            candidates(&v.layout).len(),
            v.layout.length_per_waveguide_m() * 1e3,
            v.design.config.data_rate_gbps(),
            v.design.config.waveguides,
            statics.total_w()
        );
    }
    Ok(())
}

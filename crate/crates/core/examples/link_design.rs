//! Energy-optimal MWMR link for one length, then how the optimum moves as
//! the waveguide gets longer.

use hybrid_noc::dse::{find_optimum, trend_table};
use hybrid_noc::photonic::PhotonicTechParams;

fn main() -> hybrid_noc::Result<()> {
    let tech = PhotonicTechParams::default();
    let best = find_optimum(0.07, 16, 1, &tech, 0.1)?;
    let b = &best.breakdown;
    println!(
        "70 mm, 16 links, stride 1: {} Gb/s per wavelength on {} waveguides",
        best.config.data_rate_gbps(),
        best.config.waveguides
    );
    println!(
        "  laser {:.3}  trimming {:.3}  leakage {:.3}  dynamic {:.3}  total {:.3} pJ/bit",
        b.laser_pj(),
        b.trimming_pj(),
        b.leakage_pj(),
        b.dynamic_pj(),
        best.total_pj
    );
    println!(
        "  modulator at {:.2} dB insertion loss, {:.2} dB extinction",
        best.tuning.insertion_loss, best.tuning.extinction_ratio
    );

    println!("\nlength  D_λ  W  total pJ/bit (stride 2)");
    let lengths: Vec<f64> = (1..=8).map(|i| f64::from(i) * 20.0).collect();
    for row in trend_table(&lengths, 16, 2, &tech, 0.1)? {
        match row.optimum {
            Some(r) => println!(
                "{:>6} {:>4} {:>2}  {:.3}",
                row.length_mm,
                r.config.data_rate_gbps(),
                r.config.waveguides,
                r.total_pj
            ),
            None => println!("{:>6}  infeasible: {}", row.length_mm, row.error.unwrap_or_default()),
        }
    }
    Ok(())
}

//! Per-bit energy of one electrical router plus one link hop across the
//! swept router configurations.

use hybrid_noc::electrical::{sweep_router_configs, ElectricalCoefficients};

fn main() -> hybrid_noc::Result<()> {
    let coef = ElectricalCoefficients::default();
    println!("clock GHz  flit bits  ports  dynamic  leakage  total pJ/bit");
    for row in sweep_router_configs(&coef, 0.1, 2.5)? {
        let c = row.config;
        println!(
            "{:>9.2} {:>10} {:>6} {:>8.3} {:>8.3} {:>8.3}",
            c.clock_hz / 1e9,
            c.flit_bits,
            c.ports,
            row.dynamic_pj,
            row.leakage_pj,
            row.energy_per_bit
        );
    }
    Ok(())
}

//! Where an optimized photonic link starts beating a chain of electrical
//! routers, for each site stride.

use hybrid_noc::dse::{compare_vs_electrical, crossover_length};
use hybrid_noc::electrical::{ElectricalCoefficients, RouterConfig};
use hybrid_noc::photonic::PhotonicTechParams;

fn main() -> hybrid_noc::Result<()> {
    let tech = PhotonicTechParams::default();
    let router = RouterConfig::default();
    let coef = ElectricalCoefficients::default();
    for stride in [1u32, 2, 4] {
        let step = 2.5 * f64::from(stride);
        let lengths: Vec<f64> = (1..=(160.0 / step) as u32).map(|i| f64::from(i) * step).collect();
        let rows = compare_vs_electrical(&lengths, 16, stride, &tech, &router, &coef, 0.1)?;
        let last = rows.last().expect("at least one length");
        println!(
            "stride {stride}: at 160 mm photonic {:.2} vs electrical {:.2} pJ/bit; crossover {}",
            last.photonic_pj.unwrap_or(f64::NAN),
            last.electrical_pj,
            crossover_length(&rows).map_or("none".into(), |l| format!("{l} mm"))
        );
    }
    Ok(())
}

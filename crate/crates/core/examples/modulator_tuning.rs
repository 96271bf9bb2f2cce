//! Loss budget, modulator trade-off and trimming of a single design point.

use hybrid_noc::photonic::{
    derive_geometry, energy_per_bit, laser_power, optimize_modulator, ring_trimming_power,
    trimming_power, worst_case_loss, ModulatorTuning, MwmrLinkConfig, PhotonicTechParams,
    TrimmingMode,
};

fn main() -> hybrid_noc::Result<()> {
    let tech = PhotonicTechParams::default();
    let cfg = MwmrLinkConfig::new(16, 16, 6, 0.07, 1);
    let g = derive_geometry(&cfg, &tech)?;
    println!(
        "{} sites, {} channels lit, {} on the busiest waveguide, {} rings",
        g.sites, g.lit_wavelengths, g.busiest_waveguide_wavelengths, g.total_rings
    );

    println!("\n IL dB  ER dB  loss dB  laser mW");
    for (il, er) in [(0.5, 3.0), (1.0, 5.0), (2.0, 8.0)] {
        let t = ModulatorTuning::new(il, er)?;
        println!(
            "{il:>6} {er:>6} {:>8.2} {:>9.3}",
            worst_case_loss(&cfg, &tech, &t)?,
            laser_power(&cfg, &tech, &t)? * 1e3
        );
    }
    let best = optimize_modulator(&cfg, &tech)?;
    let b = energy_per_bit(&cfg, &tech, &best)?;
    println!(
        "optimized: IL {:.2} dB, ER {:.2} dB, laser {:.3} pJ/bit, modulator {:.3} pJ/bit",
        best.insertion_loss,
        best.extinction_ratio,
        b.laser_pj(),
        b.modulator_pj()
    );

    println!(
        "\nper-ring heater: full FSR {:.3} mW, bit reshuffle over {} channels {:.1} uW",
        ring_trimming_power(&tech, g.busiest_waveguide_wavelengths, TrimmingMode::FullFsr) * 1e3,
        g.busiest_waveguide_wavelengths,
        ring_trimming_power(&tech, g.busiest_waveguide_wavelengths, TrimmingMode::BitReshuffle)
            * 1e6
    );
    for mode in [TrimmingMode::FullFsr, TrimmingMode::BitReshuffle] {
        println!(
            "bundle trimming {mode:?}: {:.3} W",
            trimming_power(&cfg, &tech, mode)?
        );
    }
    Ok(())
}

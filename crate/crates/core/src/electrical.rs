//! Parametric energy model of electronic mesh routers and links.
//!
//! Every router configuration moves the same 128 Gb/s per port and stores the
//! same 512 bits per port; narrowing the flit raises the clock and deepens
//! the buffers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonic::whole_multiple;

/// Bits per second carried by one router port.
pub const PORT_RATE: f64 = 128e9;
/// Buffer storage per VC lane set, bits.
pub const PORT_STORAGE_BITS: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouterConfig {
    pub clock_hz: f64,
    pub flit_bits: u32,
    /// Flits per VC buffer.
    pub buffer_depth: u32,
    pub ports: u32,
    pub vcs_per_port: u32,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl RouterConfig {
    /// Configuration for `clock_hz`, with flit width and buffer depth chosen
    /// to keep the port rate and storage fixed.
    pub fn at_clock(clock_hz: f64) -> Result<Self> {
        let flit = PORT_RATE / clock_hz;
        let flit_bits = flit.round() as u32;
        if !(flit_bits >= 1
            && (flit - f64::from(flit_bits)).abs() < 1e-9
            && PORT_STORAGE_BITS % flit_bits == 0)
        {
            return Err(Error::invalid(format!(
                "{clock_hz} Hz does not yield a whole flit width dividing {PORT_STORAGE_BITS} bits"
            )));
        }
        Ok(Self {
            clock_hz,
            flit_bits,
            buffer_depth: PORT_STORAGE_BITS / flit_bits,
            ports: 5,
            vcs_per_port: 4,
        })
    }

    /// The four swept configurations, fastest clock first.
    pub fn sweep_set() -> Vec<Self> {
        [4e9, 2e9, 1e9, 0.5e9]
            .into_iter()
            .map(|f| Self::at_clock(f).expect("sweep clocks divide the port rate"))
            .collect()
    }

    /// The reference 128-bit, 1 GHz router.
    pub fn reference() -> Self {
        Self::at_clock(1e9).expect("1 GHz divides the port rate")
    }

    pub fn with_ports(mut self, ports: u32) -> Self {
        self.ports = ports;
        self
    }

    pub fn storage_bits(&self) -> u32 {
        self.flit_bits * self.buffer_depth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectricalCoefficients {
    /// Router traversal energy at the reference clock, pJ per bit.
    pub router_dynamic: f64,
    /// Link traversal energy at the reference clock, pJ per bit per mm.
    pub link_dynamic: f64,
    /// Exponent of the clock scaling applied to dynamic energy.
    pub frequency_exponent: f64,
    pub reference_clock: f64,
    /// W per router, independent of configuration.
    pub router_leakage_base: f64,
    /// W per bit of flit width (crossbar and datapath width).
    pub router_width_leakage: f64,
    /// W per buffer entry (decode circuitry).
    pub router_decode_leakage: f64,
    /// W per mm of link.
    pub link_leakage: f64,
}

impl Default for ElectricalCoefficients {
    fn default() -> Self {
        Self {
            router_dynamic: 0.12,
            link_dynamic: 0.0408,
            frequency_exponent: 0.15,
            reference_clock: 1e9,
            router_leakage_base: 1e-4,
            router_width_leakage: 3.906_25e-6,
            router_decode_leakage: 2.5e-7,
            link_leakage: 0.0,
        }
    }
}

impl ElectricalCoefficients {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("router_dynamic", self.router_dynamic),
            ("link_dynamic", self.link_dynamic),
            ("frequency_exponent", self.frequency_exponent),
            ("router_leakage_base", self.router_leakage_base),
            ("router_width_leakage", self.router_width_leakage),
            ("router_decode_leakage", self.router_decode_leakage),
            ("link_leakage", self.link_leakage),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.reference_clock > 0.0) {
            return Err(Error::invalid("reference_clock must be > 0"));
        }
        Ok(())
    }

    fn clock_scale(&self, rc: &RouterConfig) -> f64 {
        (rc.clock_hz / self.reference_clock).powf(self.frequency_exponent)
    }
}

/// Energy of one flit crossing one router, pJ.
pub fn router_energy_per_flit(rc: &RouterConfig, coef: &ElectricalCoefficients) -> f64 {
    coef.router_dynamic * f64::from(rc.flit_bits) * coef.clock_scale(rc)
}

/// Energy of one flit crossing `length_mm` of link, pJ.
pub fn link_energy_per_flit(
    rc: &RouterConfig,
    coef: &ElectricalCoefficients,
    length_mm: f64,
) -> f64 {
    coef.link_dynamic * length_mm * f64::from(rc.flit_bits) * coef.clock_scale(rc)
}

/// Static power of one router, W.
pub fn router_leakage(rc: &RouterConfig, coef: &ElectricalCoefficients) -> f64 {
    let entries = f64::from(rc.buffer_depth * rc.vcs_per_port * rc.ports);
    coef.router_leakage_base
        + coef.router_width_leakage * f64::from(rc.flit_bits)
        + coef.router_decode_leakage * entries
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config: RouterConfig,
    pub dynamic_pj: f64,
    pub leakage_pj: f64,
    pub energy_per_bit: f64,
}

/// One router plus one hop of link per bit, for each swept configuration.
pub fn sweep_router_configs(
    coef: &ElectricalCoefficients,
    injection_rate: f64,
    hop_length_mm: f64,
) -> Result<Vec<SweepRow>> {
    if !(injection_rate > 0.0 && injection_rate <= 1.0) {
        return Err(Error::UndefinedEnergy(injection_rate));
    }
    let bit_rate = injection_rate * PORT_RATE;
    Ok(RouterConfig::sweep_set()
        .into_iter()
        .map(|rc| {
            let flit =
                router_energy_per_flit(&rc, coef) + link_energy_per_flit(&rc, coef, hop_length_mm);
            let dynamic_pj = flit / f64::from(rc.flit_bits);
            let leakage = router_leakage(&rc, coef) + coef.link_leakage * hop_length_mm;
            let leakage_pj = leakage / bit_rate * 1e12;
            SweepRow {
                config: rc,
                dynamic_pj,
                leakage_pj,
                energy_per_bit: dynamic_pj + leakage_pj,
            }
        })
        .collect())
}

/// Energy per bit of a back-to-back chain of routers and links spanning
/// `length_m`, with router leakage amortized over the offered load.
pub fn electrical_chain_energy_per_bit(
    length_m: f64,
    rc: &RouterConfig,
    coef: &ElectricalCoefficients,
    injection_rate: f64,
    hop_length_mm: f64,
) -> Result<f64> {
    if !(injection_rate > 0.0 && injection_rate <= 1.0) {
        return Err(Error::UndefinedEnergy(injection_rate));
    }
    let hops = whole_multiple(length_m * 1e3, hop_length_mm).ok_or_else(|| {
        Error::invalid(format!(
            "length {} mm is not a multiple of {hop_length_mm} mm",
            length_m * 1e3
        ))
    })?;
    let per_hop_dynamic = (router_energy_per_flit(rc, coef)
        + link_energy_per_flit(rc, coef, hop_length_mm))
        / f64::from(rc.flit_bits);
    let per_hop_leakage = (router_leakage(rc, coef) + coef.link_leakage * hop_length_mm)
        / (injection_rate * PORT_RATE)
        * 1e12;
    Ok(f64::from(hops) * (per_hop_dynamic + per_hop_leakage))
}

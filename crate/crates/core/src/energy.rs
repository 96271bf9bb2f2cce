//! Run-level energy from simulator counters.
//!
//! Dynamic energy is linear in the flit-hop counters of a [`SimReport`];
//! static energy is the summed static power of every router and waveguide
//! set, held for the simulated time including drain.

use serde::{Deserialize, Serialize};

use crate::dse::DseResult;
use crate::electrical::{
    link_energy_per_flit, router_energy_per_flit, router_leakage, ElectricalCoefficients,
    RouterConfig,
};
use crate::error::{Error, Result};
use crate::sim::SimReport;
use crate::topology::{Direction, LogicalLinkCandidate, MeshSpec, SnakeLayout};

/// Design of every waveguide set of a layout, indexed `2 * snake + d` with
/// `d = 0` forward and `d = 1` reverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonicDesigns {
    pub sets: Vec<DseResult>,
}

impl PhotonicDesigns {
    /// The same design in both directions of every snake.
    pub fn uniform(layout: &SnakeLayout, design: DseResult) -> Self {
        Self {
            sets: vec![design; 2 * layout.snakes_count],
        }
    }

    pub fn set(&self, snake: usize, direction: Direction) -> Option<&DseResult> {
        let d = match direction {
            Direction::Forward => 0,
            Direction::Reverse => 1,
        };
        self.sets.get(2 * snake + d)
    }
}

/// Static photonic power of a layout, W, summed over all waveguide sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticPowerSummary {
    pub snakes: usize,
    pub stride: usize,
    pub laser_w: f64,
    pub trimming_w: f64,
    pub leakage_w: f64,
}

impl StaticPowerSummary {
    pub fn total_w(&self) -> f64 {
        self.laser_w + self.trimming_w + self.leakage_w
    }
}

pub fn static_power_summary(layout: &SnakeLayout, designs: &PhotonicDesigns) -> StaticPowerSummary {
    let mut s = StaticPowerSummary {
        snakes: layout.snakes_count,
        stride: layout.stride,
        laser_w: 0.0,
        trimming_w: 0.0,
        leakage_w: 0.0,
    };
    for d in &designs.sets {
        s.laser_w += d.breakdown.laser_w;
        s.trimming_w += d.breakdown.trimming_w;
        s.leakage_w += d.breakdown.leakage_w;
    }
    s
}

/// Energies in joules unless the name says otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub router_dynamic_j: f64,
    pub link_dynamic_j: f64,
    pub photonic_modulator_j: f64,
    pub photonic_serdes_j: f64,
    pub electrical_static_j: f64,
    pub photonic_static_j: f64,
    pub delivered_bits: u64,
    pub simulated_s: f64,
}

impl EnergyReport {
    pub fn photonic_dynamic_j(&self) -> f64 {
        self.photonic_modulator_j + self.photonic_serdes_j
    }

    pub fn dynamic_j(&self) -> f64 {
        self.router_dynamic_j + self.link_dynamic_j + self.photonic_dynamic_j()
    }

    pub fn static_j(&self) -> f64 {
        self.electrical_static_j + self.photonic_static_j
    }

    pub fn total_j(&self) -> f64 {
        self.dynamic_j() + self.static_j()
    }

    /// Zero when nothing was delivered.
    pub fn dynamic_pj_per_bit(&self) -> f64 {
        per_bit(self.dynamic_j(), self.delivered_bits)
    }

    pub fn total_pj_per_bit(&self) -> f64 {
        per_bit(self.total_j(), self.delivered_bits)
    }

    pub fn ratios(&self, baseline: &EnergyReport) -> EnergyRatios {
        EnergyRatios {
            dynamic: ratio(self.dynamic_j(), baseline.dynamic_j()),
            static_: ratio(self.static_j(), baseline.static_j()),
            total: ratio(self.total_j(), baseline.total_j()),
            dynamic_per_bit: ratio(self.dynamic_pj_per_bit(), baseline.dynamic_pj_per_bit()),
        }
    }
}

fn per_bit(joules: f64, bits: u64) -> f64 {
    if bits == 0 {
        0.0
    } else {
        joules / bits as f64 * 1e12
    }
}

/// `a / b`, with `0 / 0 = 1` so that identical empty runs compare equal.
fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRatios {
    pub dynamic: f64,
    #[serde(rename = "static")]
    pub static_: f64,
    pub total: f64,
    pub dynamic_per_bit: f64,
}

/// Energy of one simulated run. `links` must be the routing-table links the
/// report's per-link counters refer to.
pub fn account(
    report: &SimReport,
    mesh: &MeshSpec,
    links: &[LogicalLinkCandidate],
    designs: &PhotonicDesigns,
    coef: &ElectricalCoefficients,
    router: &RouterConfig,
) -> Result<EnergyReport> {
    coef.validate()?;
    if report.photonic_flits.len() != links.len() {
        return Err(Error::invalid(format!(
            "report counts {} logical links, selection has {}",
            report.photonic_flits.len(),
            links.len()
        )));
    }
    let mut modulator_j = 0.0;
    let mut serdes_j = 0.0;
    for (l, &flits) in links.iter().zip(&report.photonic_flits) {
        let d = designs.set(l.snake, l.direction).ok_or_else(|| {
            Error::MissingCoefficient(format!(
                "no photonic design for snake {} ({:?})",
                l.snake, l.direction
            ))
        })?;
        let bits = (flits * u64::from(report.flit_bits)) as f64;
        modulator_j += bits * d.breakdown.modulator_pj() * 1e-12;
        serdes_j += bits * d.breakdown.serdes_pj() * 1e-12;
    }
    let seconds = report.simulated_seconds();
    let mesh_link_mm = mesh_link_count(mesh) as f64 * mesh.hop_length_mm;
    let electrical_static_w =
        mesh.nodes() as f64 * router_leakage(router, coef) + coef.link_leakage * mesh_link_mm;
    let photonic_static_w: f64 = designs.sets.iter().map(|d| d.breakdown.static_w()).sum();
    Ok(EnergyReport {
        router_dynamic_j: report.router_traversals as f64
            * router_energy_per_flit(router, coef)
            * 1e-12,
        link_dynamic_j: link_energy_per_flit(router, coef, report.link_length_mm) * 1e-12,
        photonic_modulator_j: modulator_j,
        photonic_serdes_j: serdes_j,
        electrical_static_j: electrical_static_w * seconds,
        photonic_static_j: photonic_static_w * seconds,
        delivered_bits: report.ejected_flits * u64::from(report.flit_bits),
        simulated_s: seconds,
    })
}

/// Directed mesh links.
fn mesh_link_count(mesh: &MeshSpec) -> usize {
    2 * ((mesh.width - 1) * mesh.height + mesh.width * (mesh.height - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dse::find_optimum;
    use crate::photonic::PhotonicTechParams;
    use crate::selector::{routing_tables, SelectorConfig};
    use crate::sim::{run, SimConfig};
    use crate::topology::{build, candidates};
    use crate::traffic::{Trace, TracePacket};
    use approx::assert_relative_eq;

    fn designs_for(k: usize, s: usize) -> (SnakeLayout, PhotonicDesigns) {
        let layout = build(&MeshSpec::default(), k, s).unwrap();
        let tech = PhotonicTechParams::default();
        let e = (32 / k) as u32;
        let d = find_optimum(layout.length_per_waveguide_m(), e, s as u32, &tech, 0.1).unwrap();
        let designs = PhotonicDesigns::uniform(&layout, d);
        (layout, designs)
    }

    fn one_packet(src: usize, dst: usize, links: &[LogicalLinkCandidate]) -> SimReport {
        let layout = build(&MeshSpec::default(), 1, 1).unwrap();
        let t = routing_tables(&layout, links, &SelectorConfig::default());
        let trace = Trace {
            packets: vec![TracePacket {
                cycle: 0,
                src,
                dst,
                size: 1,
            }],
        };
        run(&MeshSpec::default(), &t, &trace, &SimConfig::default()).unwrap()
    }

    #[test]
    fn three_hops_cost_three_router_and_link_quanta() {
        let r = one_packet(0, 3, &[]);
        let coef = ElectricalCoefficients::default();
        let rc = RouterConfig::reference();
        let e = account(
            &r,
            &MeshSpec::default(),
            &[],
            &PhotonicDesigns { sets: vec![] },
            &coef,
            &rc,
        )
        .unwrap();
        let router_q = coef.router_dynamic * 128.0 * 1e-12;
        let link_q = coef.link_dynamic * 2.5 * 128.0 * 1e-12;
        assert_relative_eq!(e.router_dynamic_j, 3.0 * router_q, max_relative = 1e-12);
        assert_relative_eq!(e.link_dynamic_j, 3.0 * link_q, max_relative = 1e-12);
        assert_eq!(e.photonic_dynamic_j(), 0.0);
        assert_relative_eq!(
            e.total_j(),
            e.dynamic_j() + e.static_j(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn photonic_bits_use_the_set_design() {
        let layout = build(&MeshSpec::default(), 1, 1).unwrap();
        let link = candidates(&layout)
            .into_iter()
            .find(|c| c.src == 0 && c.dst == 7)
            .unwrap();
        let r = one_packet(0, 7, &[link]);
        let (_, designs) = designs_for(1, 1);
        let e = account(
            &r,
            &MeshSpec::default(),
            &[link],
            &designs,
            &ElectricalCoefficients::default(),
            &RouterConfig::reference(),
        )
        .unwrap();
        let want = 128.0 * designs.sets[0].breakdown.dynamic_pj() * 1e-12;
        assert_relative_eq!(e.photonic_dynamic_j(), want, max_relative = 1e-12);
        assert_eq!(e.router_dynamic_j, 0.0);
        let static_w: f64 = designs.sets.iter().map(|d| d.breakdown.static_w()).sum();
        assert_relative_eq!(e.photonic_static_j, static_w * 1e-9 * r.cycles as f64);
    }

    #[test]
    fn missing_set_is_reported() {
        let layout = build(&MeshSpec::default(), 1, 1).unwrap();
        let link = candidates(&layout)
            .into_iter()
            .find(|c| c.src == 0 && c.dst == 7)
            .unwrap();
        let r = one_packet(0, 7, &[link]);
        let err = account(
            &r,
            &MeshSpec::default(),
            &[link],
            &PhotonicDesigns { sets: vec![] },
            &ElectricalCoefficients::default(),
            &RouterConfig::reference(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingCoefficient(_)));
    }

    #[test]
    fn self_ratio_is_one() {
        let r = one_packet(0, 9, &[]);
        let e = account(
            &r,
            &MeshSpec::default(),
            &[],
            &PhotonicDesigns { sets: vec![] },
            &ElectricalCoefficients::default(),
            &RouterConfig::reference(),
        )
        .unwrap();
        let q = e.ratios(&e);
        assert_eq!(
            (q.dynamic, q.static_, q.total, q.dynamic_per_bit),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn more_snakes_and_wider_strides_save_static_power() {
        let (l, d) = designs_for(8, 4);
        let small = static_power_summary(&l, &d);
        let (l, d) = designs_for(2, 1);
        let large = static_power_summary(&l, &d);
        assert!(small.total_w() < large.total_w());
    }

    #[test]
    fn laser_power_falls_with_snake_count() {
        for s in [1, 2, 4] {
            let lasers: Vec<f64> = [2, 4, 8]
                .iter()
                .map(|&k| {
                    let (l, d) = designs_for(k, s);
                    static_power_summary(&l, &d).laser_w
                })
                .collect();
            assert!(lasers.windows(2).all(|w| w[1] < w[0]), "S={s}: {lasers:?}");
        }
    }

    #[test]
    fn one_set_summary_is_its_statics() {
        let (layout, designs) = designs_for(1, 1);
        let one = PhotonicDesigns {
            sets: designs.sets[..1].to_vec(),
        };
        let s = static_power_summary(&layout, &one);
        let b = one.sets[0].breakdown;
        assert_eq!(s.laser_w, b.laser_w);
        assert_eq!(s.total_w(), b.laser_w + b.trimming_w + b.leakage_w);
    }
}

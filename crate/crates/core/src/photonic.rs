//! Closed-form power, loss and latency model of a multi-write multi-read
//! (MWMR) waveguide bundle.
//!
//! One bundle carries `E` logical links of `logical_link_rate` each, every
//! link striped over `logical_link_rate / D_λ` wavelengths. The lit
//! wavelengths are spread as evenly as possible over `W` waveguides, so the
//! busiest waveguide carries `⌈E·(link_rate/D_λ) / W⌉` channels. Every
//! modulator/detector site along the waveguide hosts one modulator ring and
//! one drop ring per channel on that waveguide.
//!
//! Units follow the field names: losses in dB, powers in W, energies in pJ,
//! rates in bit/s, lengths in meters unless suffixed `_mm`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device constants and technology-level calibration knobs.
///
/// Key names in configuration files mirror the row labels of the usual
/// nanophotonic parameter tables (`waveguide_loss`, `ring_through_loss`,
/// `ring_tuning_efficiency`, `modulator_driver_latency`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotonicTechParams {
    /// dB per meter of waveguide.
    pub waveguide_loss: f64,
    pub coupler_loss: f64,
    #[serde(rename = "waveguide_bending_loss")]
    pub bending_loss: f64,
    /// Wall-plug efficiency of the laser, as a fraction.
    pub laser_efficiency: f64,
    /// dB per ring passed by a wavelength it is not tuned to.
    pub ring_through_loss: f64,
    pub ring_drop_loss: f64,
    pub detector_loss: f64,
    /// µm².
    pub ring_area: f64,
    /// Free spectral range of a ring, Hz.
    pub fsr: f64,
    /// Hz of resonance shift per kelvin.
    #[serde(rename = "ring_tuning_efficiency")]
    pub tuning_efficiency: f64,
    /// Kelvin of heating per milliwatt.
    #[serde(rename = "ring_heating_efficiency")]
    pub heating_efficiency: f64,
    /// Span of the operating temperature window, K.
    #[serde(rename = "temperature_range")]
    pub temp_range: f64,
    /// Cap full-FSR trimming at the temperature window instead of the full FSR.
    pub clamp_trimming_to_temperature_range: bool,
    /// A/W.
    #[serde(rename = "photodetector_responsivity")]
    pub responsivity: f64,
    pub target_ber: f64,
    /// Receiver sensitivity at `reference_rate` with an ideal modulator, dBm.
    pub detector_sensitivity: f64,
    /// Extra dB of required receiver power per `reference_rate` of data rate
    /// above `reference_rate` (negative below it).
    pub rate_penalty: f64,
    /// bit/s.
    pub reference_rate: f64,
    /// pJ per bit per squared ring-linewidth of modulation swing.
    pub modulator_energy: f64,
    /// Serializer, driver, receiver and deserializer energy, pJ per bit.
    pub serdes_energy: f64,
    /// Static power of one site interface on one waveguide, W.
    pub site_leakage: f64,
    /// Maximum laser power for one waveguide, W.
    pub laser_power_ceiling: f64,
    /// ps.
    pub modulator_driver_latency: f64,
    /// E-O conversion, ps.
    pub modulator_delay: f64,
    /// O-E conversion, ps.
    pub photodetector_delay: f64,
    /// ps.
    pub receiver_amplifier: f64,
    /// ps per mm.
    pub link_propagation: f64,
    /// bit/s usable on one waveguide.
    pub aggregate_waveguide_rate: u64,
    /// bit/s of one logical link (equal to an electrical link).
    pub logical_link_rate: u64,
    /// Distance between neighboring mesh routers, mm.
    pub hop_length: f64,
}

impl Default for PhotonicTechParams {
    fn default() -> Self {
        Self {
            waveguide_loss: 100.0,
            coupler_loss: 1.0,
            bending_loss: 0.0,
            laser_efficiency: 0.25,
            ring_through_loss: 0.01,
            ring_drop_loss: 1.0,
            detector_loss: 1.0,
            ring_area: 100.0,
            fsr: 2e12,
            tuning_efficiency: 10e9,
            heating_efficiency: 100.0,
            temp_range: 100.0,
            clamp_trimming_to_temperature_range: false,
            responsivity: 1.1,
            target_ber: 1e-15,
            detector_sensitivity: -22.0,
            rate_penalty: 12.0,
            reference_rate: 16e9,
            modulator_energy: 0.02,
            serdes_energy: 0.32,
            site_leakage: 1.2e-4,
            laser_power_ceiling: 10.0,
            modulator_driver_latency: 9.5,
            modulator_delay: 14.3,
            photodetector_delay: 0.2,
            receiver_amplifier: 4.0,
            link_propagation: 4.67,
            aggregate_waveguide_rate: 512_000_000_000,
            logical_link_rate: 128_000_000_000,
            hop_length: 2.5,
        }
    }
}

impl PhotonicTechParams {
    pub fn validate(&self) -> Result<()> {
        let losses = [
            ("waveguide_loss", self.waveguide_loss),
            ("coupler_loss", self.coupler_loss),
            ("waveguide_bending_loss", self.bending_loss),
            ("ring_through_loss", self.ring_through_loss),
            ("ring_drop_loss", self.ring_drop_loss),
            ("detector_loss", self.detector_loss),
        ];
        for (name, v) in losses {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        let positive = [
            ("laser_efficiency", self.laser_efficiency),
            ("fsr", self.fsr),
            ("ring_tuning_efficiency", self.tuning_efficiency),
            ("ring_heating_efficiency", self.heating_efficiency),
            ("temperature_range", self.temp_range),
            ("photodetector_responsivity", self.responsivity),
            ("reference_rate", self.reference_rate),
            ("laser_power_ceiling", self.laser_power_ceiling),
            ("hop_length", self.hop_length),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.laser_efficiency > 1.0 {
            return Err(Error::invalid("laser_efficiency must not exceed 1"));
        }
        if self.logical_link_rate == 0 || self.aggregate_waveguide_rate == 0 {
            return Err(Error::invalid("link and waveguide rates must be > 0"));
        }
        if self.aggregate_waveguide_rate % self.logical_link_rate != 0 {
            return Err(Error::invalid(
                "aggregate_waveguide_rate must be an integer multiple of logical_link_rate",
            ));
        }
        for (name, v) in [
            ("modulator_energy", self.modulator_energy),
            ("serdes_energy", self.serdes_energy),
            ("site_leakage", self.site_leakage),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Logical links that fit on one fully populated waveguide.
    pub fn max_links_per_waveguide(&self) -> u32 {
        (self.aggregate_waveguide_rate / self.logical_link_rate) as u32
    }
}

/// One MWMR design point: `(D_λ, E, W, L, S)` plus the offered load used to
/// amortize static power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MwmrLinkConfig {
    /// bit/s per wavelength.
    pub data_rate_per_wavelength: u64,
    pub logical_links: u32,
    pub waveguides: u32,
    pub length_m: f64,
    /// Router hops between consecutive modulator/detector sites.
    pub stride: u32,
    pub injection_rate: f64,
}

impl MwmrLinkConfig {
    pub fn new(
        data_rate_gbps: u32,
        logical_links: u32,
        waveguides: u32,
        length_m: f64,
        stride: u32,
    ) -> Self {
        Self {
            data_rate_per_wavelength: u64::from(data_rate_gbps) * 1_000_000_000,
            logical_links,
            waveguides,
            length_m,
            stride,
            injection_rate: 0.1,
        }
    }

    pub fn with_injection_rate(mut self, rate: f64) -> Self {
        self.injection_rate = rate;
        self
    }

    pub fn data_rate_gbps(&self) -> f64 {
        self.data_rate_per_wavelength as f64 / 1e9
    }

    pub fn length_mm(&self) -> f64 {
        self.length_m * 1e3
    }
}

/// Counts derived from a design point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub sites: u32,
    /// `N_λ`: channels one waveguide can carry at this data rate.
    pub max_wavelengths: u32,
    pub wavelengths_per_link: u32,
    pub links_per_waveguide: u32,
    /// Channels lit across the whole bundle.
    pub lit_wavelengths: u32,
    /// Channels on the most heavily loaded waveguide.
    pub busiest_waveguide_wavelengths: u32,
    /// Modulator plus drop rings over all sites and waveguides.
    pub total_rings: u64,
}

/// Number of whole router hops in `length_m`, when it is one.
pub(crate) fn whole_multiple(length: f64, unit: f64) -> Option<u32> {
    let n = length / unit;
    let r = n.round();
    if r >= 1.0 && (n - r).abs() <= 1e-9 * r.max(1.0) {
        Some(r as u32)
    } else {
        None
    }
}

pub fn derive_geometry(cfg: &MwmrLinkConfig, tech: &PhotonicTechParams) -> Result<LinkGeometry> {
    let d = cfg.data_rate_per_wavelength;
    if d == 0 {
        return Err(Error::invalid("data rate per wavelength must be > 0"));
    }
    if tech.aggregate_waveguide_rate % d != 0 {
        return Err(Error::invalid(format!(
            "{} Gb/s does not divide the waveguide rate into whole wavelengths",
            cfg.data_rate_gbps()
        )));
    }
    if tech.logical_link_rate % d != 0 {
        return Err(Error::invalid(format!(
            "{} Gb/s does not divide a logical link into whole wavelengths",
            cfg.data_rate_gbps()
        )));
    }
    if cfg.logical_links == 0 {
        return Err(Error::invalid("at least one logical link is required"));
    }
    if cfg.stride == 0 {
        return Err(Error::invalid("stride must be >= 1"));
    }
    let max_wavelengths = (tech.aggregate_waveguide_rate / d) as u32;
    let wavelengths_per_link = (tech.logical_link_rate / d) as u32;
    let lit = cfg.logical_links * wavelengths_per_link;
    let min_w = lit.div_ceil(max_wavelengths);
    if cfg.waveguides < min_w || cfg.waveguides > max_wavelengths {
        return Err(Error::invalid(format!(
            "W={} outside [{min_w}, {max_wavelengths}] for E={} at {} Gb/s",
            cfg.waveguides,
            cfg.logical_links,
            cfg.data_rate_gbps()
        )));
    }
    if cfg.waveguides > lit {
        return Err(Error::invalid(format!(
            "W={} leaves waveguides dark: only {lit} wavelengths are lit",
            cfg.waveguides
        )));
    }
    let site_pitch_m = tech.hop_length * 1e-3 * f64::from(cfg.stride);
    let sites = whole_multiple(cfg.length_m, site_pitch_m).ok_or_else(|| {
        Error::invalid(format!(
            "length {} mm is not a positive multiple of the {} mm site pitch",
            cfg.length_mm(),
            site_pitch_m * 1e3
        ))
    })?;
    Ok(LinkGeometry {
        sites,
        max_wavelengths,
        wavelengths_per_link,
        links_per_waveguide: tech
            .max_links_per_waveguide()
            .min(max_wavelengths / wavelengths_per_link),
        lit_wavelengths: lit,
        busiest_waveguide_wavelengths: lit.div_ceil(cfg.waveguides),
        total_rings: 2 * u64::from(sites) * u64::from(lit),
    })
}

/// Insertion loss and extinction ratio of the ring modulators, both in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulatorTuning {
    pub insertion_loss: f64,
    pub extinction_ratio: f64,
}

impl ModulatorTuning {
    pub const MIN_DB: f64 = 0.01;
    pub const MAX_DB: f64 = 10.0;

    pub fn new(insertion_loss: f64, extinction_ratio: f64) -> Result<Self> {
        for (name, v) in [
            ("insertion loss", insertion_loss),
            ("extinction ratio", extinction_ratio),
        ] {
            if !(Self::MIN_DB..=Self::MAX_DB).contains(&v) {
                return Err(Error::invalid(format!(
                    "{name} {v} dB outside [{}, {}] dB",
                    Self::MIN_DB,
                    Self::MAX_DB
                )));
            }
        }
        Ok(Self {
            insertion_loss,
            extinction_ratio,
        })
    }
}

/// Worst-case optical loss seen by any channel of the busiest waveguide.
///
/// The worst channel enters at the coupler, travels the full waveguide and
/// passes every ring on it except the one that drops it.
pub fn worst_case_loss(
    cfg: &MwmrLinkConfig,
    tech: &PhotonicTechParams,
    tuning: &ModulatorTuning,
) -> Result<f64> {
    let geom = derive_geometry(cfg, tech)?;
    Ok(loss_for(&geom, cfg.length_m, tech, tuning.insertion_loss))
}

fn loss_for(
    geom: &LinkGeometry,
    length_m: f64,
    tech: &PhotonicTechParams,
    insertion_loss: f64,
) -> f64 {
    let rings_passed =
        2 * u64::from(geom.busiest_waveguide_wavelengths) * u64::from(geom.sites) - 1;
    tech.coupler_loss
        + tech.waveguide_loss * length_m
        + tech.bending_loss
        + tech.ring_through_loss * rings_passed as f64
        + insertion_loss
        + tech.ring_drop_loss
        + tech.detector_loss
}

/// Power penalty of a finite extinction ratio, dB. Infinite at 0 dB.
pub fn extinction_penalty_db(extinction_ratio_db: f64) -> f64 {
    10.0 * extinction_penalty(extinction_ratio_db).log10()
}

/// Optical power the receiver needs at `data_rate` bit/s, dBm.
pub fn required_receiver_power_dbm(
    tech: &PhotonicTechParams,
    data_rate: f64,
    extinction_ratio_db: f64,
) -> f64 {
    tech.detector_sensitivity
        + extinction_penalty_db(extinction_ratio_db)
        + tech.rate_penalty * (data_rate / tech.reference_rate - 1.0)
}

/// Electrical power a laser draws to deliver `required_dbm` through `loss_db`.
pub fn wall_plug_power(required_dbm: f64, loss_db: f64, efficiency: f64) -> f64 {
    10f64.powf((required_dbm + loss_db) / 10.0) * 1e-3 / efficiency
}

pub fn laser_power(
    cfg: &MwmrLinkConfig,
    tech: &PhotonicTechParams,
    tuning: &ModulatorTuning,
) -> Result<f64> {
    let geom = derive_geometry(cfg, tech)?;
    laser_power_for(&geom, cfg, tech, tuning)
}

fn laser_power_for(
    geom: &LinkGeometry,
    cfg: &MwmrLinkConfig,
    tech: &PhotonicTechParams,
    tuning: &ModulatorTuning,
) -> Result<f64> {
    let base = LaserBase::new(geom, cfg, tech);
    base.total(
        tech,
        db_gain(tuning.insertion_loss),
        extinction_penalty(tuning.extinction_ratio),
    )
}

fn db_gain(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear receiver power penalty of a finite extinction ratio.
fn extinction_penalty(extinction_ratio_db: f64) -> f64 {
    let r = db_gain(extinction_ratio_db);
    (r + 1.0) / (r - 1.0)
}

/// Laser power split into the part fixed by the link and the two factors
/// set by the modulator, so a tuning sweep costs one multiply per point.
struct LaserBase {
    /// Wall-plug watts per wavelength at zero insertion loss and an ideal
    /// extinction ratio.
    per_wavelength: f64,
    busiest: f64,
    lit: f64,
}

impl LaserBase {
    fn new(geom: &LinkGeometry, cfg: &MwmrLinkConfig, tech: &PhotonicTechParams) -> Self {
        let rate_penalty =
            tech.rate_penalty * (cfg.data_rate_per_wavelength as f64 / tech.reference_rate - 1.0);
        let loss = loss_for(geom, cfg.length_m, tech, 0.0);
        Self {
            per_wavelength: wall_plug_power(
                tech.detector_sensitivity + rate_penalty,
                loss,
                tech.laser_efficiency,
            ),
            busiest: f64::from(geom.busiest_waveguide_wavelengths),
            lit: f64::from(geom.lit_wavelengths),
        }
    }

    fn total(&self, tech: &PhotonicTechParams, il_gain: f64, er_penalty: f64) -> Result<f64> {
        let per_wavelength = self.per_wavelength * il_gain * er_penalty;
        let busiest = per_wavelength * self.busiest;
        if !(busiest <= tech.laser_power_ceiling) {
            return Err(Error::Infeasible(format!(
                "laser needs {busiest:.3e} W on one waveguide (ceiling {} W)",
                tech.laser_power_ceiling
            )));
        }
        Ok(per_wavelength * self.lit)
    }
}

/// Ring resonance shift, in linewidths, needed to swing between the
/// on-state (`insertion_loss` below unity) and off-state
/// (`extinction_ratio` further down) of a Lorentzian notch.
pub fn modulator_swing(tuning: &ModulatorTuning) -> f64 {
    let detune = |t: f64| (t / (1.0 - t)).sqrt();
    let on = 10f64.powf(-tuning.insertion_loss / 10.0);
    let off = on * 10f64.powf(-tuning.extinction_ratio / 10.0);
    detune(on) - detune(off)
}

/// Modulator drive energy, pJ per bit.
pub fn modulator_energy_per_bit(tech: &PhotonicTechParams, tuning: &ModulatorTuning) -> f64 {
    tech.modulator_energy * modulator_swing(tuning).powi(2)
}

/// Log-spaced sweep values used when optimizing the modulator.
pub fn modulator_grid(points: usize) -> Vec<f64> {
    let span = (ModulatorTuning::MAX_DB / ModulatorTuning::MIN_DB).log10();
    (0..points)
        .map(|i| {
            if i + 1 == points {
                ModulatorTuning::MAX_DB
            } else {
                ModulatorTuning::MIN_DB * 10f64.powf(span * i as f64 / (points - 1) as f64)
            }
        })
        .collect()
}

pub const MODULATOR_GRID_POINTS: usize = 25;

/// Laser plus modulator power at `tuning`; the quantity minimized by
/// [`optimize_modulator`].
pub fn modulator_objective(
    cfg: &MwmrLinkConfig,
    tech: &PhotonicTechParams,
    tuning: &ModulatorTuning,
) -> Result<f64> {
    let geom = derive_geometry(cfg, tech)?;
    objective_for(&geom, cfg, tech, tuning)
}

fn objective_for(
    geom: &LinkGeometry,
    cfg: &MwmrLinkConfig,
    tech: &PhotonicTechParams,
    tuning: &ModulatorTuning,
) -> Result<f64> {
    let laser = laser_power_for(geom, cfg, tech, tuning)?;
    let modulator_w_per_swing = tech.modulator_energy * 1e-12 * delivered_rate(cfg, tech);
    Ok(laser + modulator_w_per_swing * modulator_swing(tuning).powi(2))
}

/// Per-point factors of the modulator grid, computed once.
struct TuningTable {
    values: Vec<f64>,
    il_gain: Vec<f64>,
    er_penalty: Vec<f64>,
    /// Squared swing indexed `[il * n + er]`.
    swing_sq: Vec<f64>,
}

fn tuning_table() -> &'static TuningTable {
    static TABLE: OnceLock<TuningTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let values = modulator_grid(MODULATOR_GRID_POINTS);
        let mut swing_sq = Vec::with_capacity(values.len() * values.len());
        for &il in &values {
            for &er in &values {
                let t = ModulatorTuning {
                    insertion_loss: il,
                    extinction_ratio: er,
                };
                swing_sq.push(modulator_swing(&t).powi(2));
            }
        }
        TuningTable {
            il_gain: values.iter().map(|&v| db_gain(v)).collect(),
            er_penalty: values.iter().map(|&v| extinction_penalty(v)).collect(),
            values,
            swing_sq,
        }
    })
}

/// Grid search over insertion loss × extinction ratio.
///
/// Ties go to the lower insertion loss, then the lower extinction ratio.
pub fn optimize_modulator(
    cfg: &MwmrLinkConfig,
    tech: &PhotonicTechParams,
) -> Result<ModulatorTuning> {
    let geom = derive_geometry(cfg, tech)?;
    let base = LaserBase::new(&geom, cfg, tech);
    let table = tuning_table();
    let n = table.values.len();
    let modulator_w_per_swing = tech.modulator_energy * 1e-12 * delivered_rate(cfg, tech);
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in 0..n {
            let Ok(laser) = base.total(tech, table.il_gain[i], table.er_penalty[j]) else {
                continue;
            };
            let obj = laser + modulator_w_per_swing * table.swing_sq[i * n + j];
            if best.map_or(true, |(b, _, _)| obj < b) {
                best = Some((obj, i, j));
            }
        }
    }
    best.map(|(_, i, j)| ModulatorTuning {
        insertion_loss: table.values[i],
        extinction_ratio: table.values[j],
    })
    .ok_or_else(|| {
        Error::Infeasible(format!(
            "no modulator setting keeps the laser under {} W per waveguide",
            tech.laser_power_ceiling
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrimmingMode {
    /// Every ring can be pulled across a whole FSR.
    FullFsr,
    /// A ring only covers its own channel band; drifted rings take over the
    /// neighbouring channel through bit reshuffling.
    BitReshuffle,
}

/// Heater power of one ring, W, on a waveguide carrying `channels` wavelengths.
pub fn ring_trimming_power(tech: &PhotonicTechParams, channels: u32, mode: TrimmingMode) -> f64 {
    let kelvin = match mode {
        TrimmingMode::FullFsr => {
            let k = tech.fsr / tech.tuning_efficiency;
            if tech.clamp_trimming_to_temperature_range {
                k.min(tech.temp_range)
            } else {
                k
            }
        }
        TrimmingMode::BitReshuffle => {
            tech.fsr / f64::from(channels.max(1)) / tech.tuning_efficiency
        }
    };
    kelvin / tech.heating_efficiency * 1e-3
}

pub fn trimming_power(
    cfg: &MwmrLinkConfig,
    tech: &PhotonicTechParams,
    mode: TrimmingMode,
) -> Result<f64> {
    let geom = derive_geometry(cfg, tech)?;
    Ok(trimming_for(&geom, cfg.waveguides, tech, mode))
}

fn trimming_for(
    geom: &LinkGeometry,
    waveguides: u32,
    tech: &PhotonicTechParams,
    mode: TrimmingMode,
) -> f64 {
    let rings_per_channel = 2.0 * f64::from(geom.sites);
    match mode {
        // A lit waveguide's rings each span 1/channels of the FSR, so together
        // they cover one FSR whatever the channel count. Counting lit
        // waveguides keeps the result bit-identical across data rates.
        TrimmingMode::BitReshuffle => {
            let lit = geom.lit_wavelengths.min(waveguides);
            f64::from(lit) * rings_per_channel * ring_trimming_power(tech, 1, mode)
        }
        TrimmingMode::FullFsr => {
            f64::from(geom.lit_wavelengths)
                * rings_per_channel
                * ring_trimming_power(tech, geom.lit_wavelengths, mode)
        }
    }
}

/// Static and dynamic power of one MWMR bundle at its offered load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub laser_w: f64,
    pub trimming_w: f64,
    pub leakage_w: f64,
    /// Serializer, driver and receiver electronics.
    pub serdes_w: f64,
    /// Ring modulator drive.
    pub modulator_w: f64,
    /// Bits per second actually carried.
    pub delivered_bps: f64,
}

impl PowerBreakdown {
    pub fn dynamic_w(&self) -> f64 {
        self.serdes_w + self.modulator_w
    }

    pub fn static_w(&self) -> f64 {
        self.laser_w + self.trimming_w + self.leakage_w
    }

    pub fn total_w(&self) -> f64 {
        self.static_w() + self.dynamic_w()
    }

    fn per_bit(&self, watts: f64) -> f64 {
        watts / self.delivered_bps * 1e12
    }

    pub fn laser_pj(&self) -> f64 {
        self.per_bit(self.laser_w)
    }

    pub fn trimming_pj(&self) -> f64 {
        self.per_bit(self.trimming_w)
    }

    pub fn leakage_pj(&self) -> f64 {
        self.per_bit(self.leakage_w)
    }

    pub fn dynamic_pj(&self) -> f64 {
        self.per_bit(self.dynamic_w())
    }

    pub fn modulator_pj(&self) -> f64 {
        self.per_bit(self.modulator_w)
    }

    pub fn serdes_pj(&self) -> f64 {
        self.per_bit(self.serdes_w)
    }

    pub fn total_pj(&self) -> f64 {
        self.laser_pj() + self.trimming_pj() + self.leakage_pj() + self.dynamic_pj()
    }
}

fn delivered_rate(cfg: &MwmrLinkConfig, tech: &PhotonicTechParams) -> f64 {
    cfg.injection_rate * f64::from(cfg.logical_links) * tech.logical_link_rate as f64
}

pub fn energy_per_bit(
    cfg: &MwmrLinkConfig,
    tech: &PhotonicTechParams,
    tuning: &ModulatorTuning,
) -> Result<PowerBreakdown> {
    if !(cfg.injection_rate > 0.0 && cfg.injection_rate <= 1.0) {
        return Err(Error::UndefinedEnergy(cfg.injection_rate));
    }
    let geom = derive_geometry(cfg, tech)?;
    let delivered = delivered_rate(cfg, tech);
    Ok(PowerBreakdown {
        laser_w: laser_power_for(&geom, cfg, tech, tuning)?,
        trimming_w: trimming_for(&geom, cfg.waveguides, tech, TrimmingMode::BitReshuffle),
        leakage_w: tech.site_leakage * f64::from(geom.sites) * f64::from(cfg.waveguides),
        serdes_w: tech.serdes_energy * 1e-12 * delivered,
        modulator_w: modulator_energy_per_bit(tech, tuning) * 1e-12 * delivered,
        delivered_bps: delivered,
    })
}

/// End-to-end latency of one photonic traversal of `length_mm`, ps.
pub fn link_latency(length_mm: f64, tech: &PhotonicTechParams) -> f64 {
    tech.modulator_driver_latency
        + tech.modulator_delay
        + tech.photodetector_delay
        + tech.receiver_amplifier
        + tech.link_propagation * length_mm
}

/// Whole clock cycles a photonic traversal occupies, at least one.
pub fn photonic_hop_cycles(length_mm: f64, tech: &PhotonicTechParams, clock_hz: f64) -> u32 {
    let period_ps = 1e12 / clock_hz;
    let cycles = (link_latency(length_mm, tech) / period_ps - 1e-9).ceil();
    (cycles as u32).max(1)
}

//! Exhaustive design-space exploration over MWMR design points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::electrical::{electrical_chain_energy_per_bit, ElectricalCoefficients, RouterConfig};
use crate::error::{Error, Result};
use crate::photonic::{
    derive_geometry, energy_per_bit, optimize_modulator, whole_multiple, ModulatorTuning,
    MwmrLinkConfig, PhotonicTechParams, PowerBreakdown,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DseGrid {
    pub data_rates_gbps: Vec<u32>,
    pub logical_links: Vec<u32>,
    pub lengths_mm: Vec<f64>,
    pub strides: Vec<u32>,
    /// Restricts the waveguide counts tried; every feasible count when absent.
    pub waveguides: Option<Vec<u32>>,
    pub injection_rate: f64,
}

impl Default for DseGrid {
    fn default() -> Self {
        Self {
            data_rates_gbps: vec![2, 4, 8, 16, 32],
            logical_links: vec![4, 8, 16, 32],
            lengths_mm: default_lengths_mm(),
            strides: vec![1, 2, 4, 8],
            waveguides: None,
            injection_rate: 0.1,
        }
    }
}

/// 2.5 mm to 160 mm in 2.5 mm steps.
pub fn default_lengths_mm() -> Vec<f64> {
    (1..=64).map(|i| f64::from(i) * 2.5).collect()
}

impl DseGrid {
    /// All data rates and waveguide counts for a single `(L, E, S)`.
    pub fn point(length_mm: f64, logical_links: u32, stride: u32, injection_rate: f64) -> Self {
        Self {
            logical_links: vec![logical_links],
            lengths_mm: vec![length_mm],
            strides: vec![stride],
            injection_rate,
            ..Self::default()
        }
    }

    fn waveguide_range(&self, tech: &PhotonicTechParams, d_gbps: u32, e: u32) -> Vec<u32> {
        let d = u64::from(d_gbps) * 1_000_000_000;
        if d == 0 || tech.aggregate_waveguide_rate % d != 0 || tech.logical_link_rate % d != 0 {
            return Vec::new();
        }
        let max_wl = (tech.aggregate_waveguide_rate / d) as u32;
        let lit = e * (tech.logical_link_rate / d) as u32;
        let lo = lit.div_ceil(max_wl).max(1);
        let hi = max_wl.min(lit);
        match &self.waveguides {
            Some(ws) => {
                let mut ws: Vec<u32> = ws
                    .iter()
                    .copied()
                    .filter(|w| (lo..=hi).contains(w))
                    .collect();
                ws.sort_unstable();
                ws.dedup();
                ws
            }
            None => (lo..=hi).collect(),
        }
    }
}

/// Design points of `grid` in lexicographic `(L, E, S, D_λ, W)` order,
/// skipping `(L, S)` pairs without a whole number of sites.
pub fn enumerate(grid: &DseGrid, tech: &PhotonicTechParams) -> Result<Vec<MwmrLinkConfig>> {
    let mut out = Vec::new();
    for &l in &grid.lengths_mm {
        for &e in &grid.logical_links {
            for &s in &grid.strides {
                if s == 0 || whole_multiple(l, tech.hop_length * f64::from(s)).is_none() {
                    continue;
                }
                for &d in &grid.data_rates_gbps {
                    for w in grid.waveguide_range(tech, d, e) {
                        let cfg = MwmrLinkConfig::new(d, e, w, l / 1e3, s)
                            .with_injection_rate(grid.injection_rate);
                        if derive_geometry(&cfg, tech).is_ok() {
                            out.push(cfg);
                        }
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyGrid("no valid design point in the grid".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DseResult {
    pub config: MwmrLinkConfig,
    pub tuning: ModulatorTuning,
    pub breakdown: PowerBreakdown,
    pub total_pj: f64,
}

impl DseResult {
    pub fn row(&self) -> DseRow {
        let b = &self.breakdown;
        DseRow {
            length_mm: self.config.length_mm(),
            logical_links: self.config.logical_links,
            stride: self.config.stride,
            data_rate_gbps: self.config.data_rate_gbps(),
            waveguides: self.config.waveguides,
            laser_pj: b.laser_pj(),
            trim_pj: b.trimming_pj(),
            lkg_pj: b.leakage_pj(),
            dyn_pj: b.dynamic_pj(),
            total_pj: self.total_pj,
        }
    }

    /// Ordering used to pick an optimum: energy, then fewer waveguides, then
    /// the lower data rate.
    fn better_than(&self, other: &DseResult) -> bool {
        let key = |r: &DseResult| (r.config.waveguides, r.config.data_rate_per_wavelength);
        self.total_pj < other.total_pj
            || (self.total_pj == other.total_pj && key(self) < key(other))
    }
}

/// Flat CSV record of a [`DseResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DseRow {
    #[serde(rename = "L_mm")]
    pub length_mm: f64,
    #[serde(rename = "E")]
    pub logical_links: u32,
    #[serde(rename = "S")]
    pub stride: u32,
    #[serde(rename = "D_lambda_Gbps")]
    pub data_rate_gbps: f64,
    #[serde(rename = "W")]
    pub waveguides: u32,
    #[serde(rename = "laser_pJ")]
    pub laser_pj: f64,
    #[serde(rename = "trim_pJ")]
    pub trim_pj: f64,
    #[serde(rename = "lkg_pJ")]
    pub lkg_pj: f64,
    #[serde(rename = "dyn_pJ")]
    pub dyn_pj: f64,
    #[serde(rename = "total_pJ")]
    pub total_pj: f64,
}

/// Optimizes the modulator for `cfg` and returns its energy breakdown.
pub fn evaluate(cfg: &MwmrLinkConfig, tech: &PhotonicTechParams) -> Result<DseResult> {
    let tuning = optimize_modulator(cfg, tech)?;
    let breakdown = energy_per_bit(cfg, tech, &tuning)?;
    Ok(DseResult {
        config: *cfg,
        tuning,
        breakdown,
        total_pj: breakdown.total_pj(),
    })
}

/// Evaluates every design point of `grid`; infeasible points yield `None`.
/// Output order matches [`enumerate`].
pub fn evaluate_grid(
    grid: &DseGrid,
    tech: &PhotonicTechParams,
) -> Result<Vec<(MwmrLinkConfig, Option<DseResult>)>> {
    let configs = enumerate(grid, tech)?;
    Ok(configs
        .into_par_iter()
        .map(|cfg| (cfg, evaluate(&cfg, tech).ok()))
        .collect())
}

fn best_of(results: impl IntoIterator<Item = DseResult>) -> Option<DseResult> {
    results
        .into_iter()
        .fold(None, |best: Option<DseResult>, r| match best {
            Some(b) if !r.better_than(&b) => Some(b),
            _ => Some(r),
        })
}

/// Energy-optimal design point over every data rate and waveguide count of
/// `grid`, which must hold a single `(L, E, S)`.
pub fn find_optimum_in(grid: &DseGrid, tech: &PhotonicTechParams) -> Result<DseResult> {
    let evaluated = evaluate_grid(grid, tech)?;
    let candidates = evaluated.len();
    best_of(evaluated.into_iter().filter_map(|(_, r)| r)).ok_or_else(|| Error::NoFeasibleDesign {
        candidates,
        context: format!(
            "L={:?} mm, E={:?}, S={:?}",
            grid.lengths_mm, grid.logical_links, grid.strides
        ),
    })
}

pub fn find_optimum(
    length_m: f64,
    logical_links: u32,
    stride: u32,
    tech: &PhotonicTechParams,
    injection_rate: f64,
) -> Result<DseResult> {
    find_optimum_in(
        &DseGrid::point(length_m * 1e3, logical_links, stride, injection_rate),
        tech,
    )
}

/// Optimum per `(L, E, S)` of the full grid, in enumeration order.
pub fn optima(grid: &DseGrid, tech: &PhotonicTechParams) -> Result<Vec<DseResult>> {
    let evaluated = evaluate_grid(grid, tech)?;
    let mut out: Vec<DseResult> = Vec::new();
    let mut current: Option<((u64, u32, u32), Option<DseResult>)> = None;
    let key = |c: &MwmrLinkConfig| ((c.length_m * 1e6).round() as u64, c.logical_links, c.stride);
    for (cfg, result) in evaluated {
        let k = key(&cfg);
        match &mut current {
            Some((ck, best)) if *ck == k => {
                if let Some(r) = result {
                    if best.map_or(true, |b| r.better_than(&b)) {
                        *best = Some(r);
                    }
                }
            }
            _ => {
                if let Some((_, Some(b))) = current.take() {
                    out.push(b);
                }
                current = Some((k, result));
            }
        }
    }
    if let Some((_, Some(b))) = current {
        out.push(b);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub length_mm: f64,
    pub optimum: Option<DseResult>,
    pub error: Option<String>,
}

/// Optimal `(D_λ, W)` at each length; rows that cannot be built carry the
/// reason instead.
pub fn trend_table(
    lengths_mm: &[f64],
    logical_links: u32,
    stride: u32,
    tech: &PhotonicTechParams,
    injection_rate: f64,
) -> Result<Vec<TrendRow>> {
    if lengths_mm.is_empty() {
        return Err(Error::EmptyGrid(
            "trend table needs at least one length".into(),
        ));
    }
    Ok(lengths_mm
        .iter()
        .map(
            |&l| match find_optimum(l / 1e3, logical_links, stride, tech, injection_rate) {
                Ok(r) => TrendRow {
                    length_mm: l,
                    optimum: Some(r),
                    error: None,
                },
                Err(e) => TrendRow {
                    length_mm: l,
                    optimum: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect())
}

/// Number of strict decreases in a sequence.
pub fn inversions<T: PartialOrd>(values: &[T]) -> usize {
    values.windows(2).filter(|w| w[1] < w[0]).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub length_mm: f64,
    pub photonic_pj: Option<f64>,
    pub electrical_pj: f64,
}

impl ComparisonRow {
    pub fn photonic_wins(&self) -> bool {
        self.photonic_pj.is_some_and(|p| p < self.electrical_pj)
    }
}

/// Optimized photonic energy per bit next to an electrical router chain of
/// the same length.
pub fn compare_vs_electrical(
    lengths_mm: &[f64],
    logical_links: u32,
    stride: u32,
    tech: &PhotonicTechParams,
    router: &RouterConfig,
    coef: &ElectricalCoefficients,
    injection_rate: f64,
) -> Result<Vec<ComparisonRow>> {
    trend_table(lengths_mm, logical_links, stride, tech, injection_rate)?
        .into_iter()
        .map(|row| {
            Ok(ComparisonRow {
                length_mm: row.length_mm,
                photonic_pj: row.optimum.map(|r| r.total_pj),
                electrical_pj: electrical_chain_energy_per_bit(
                    row.length_mm / 1e3,
                    router,
                    coef,
                    injection_rate,
                    tech.hop_length,
                )?,
            })
        })
        .collect()
}

/// Shortest length at which the photonic link beats the electrical chain.
pub fn crossover_length(rows: &[ComparisonRow]) -> Option<f64> {
    rows.iter().find(|r| r.photonic_wins()).map(|r| r.length_mm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tech() -> PhotonicTechParams {
        PhotonicTechParams::default()
    }

    /// Independent count of valid design points: W ranges are counted
    /// arithmetically rather than enumerated.
    fn count_oracle(grid: &DseGrid) -> usize {
        let mut n = 0;
        for &l in &grid.lengths_mm {
            for &e in &grid.logical_links {
                for &s in &grid.strides {
                    let sites = l / (2.5 * f64::from(s));
                    if (sites - sites.round()).abs() > 1e-9 || sites < 0.5 {
                        continue;
                    }
                    for &d in &grid.data_rates_gbps {
                        let n_max = 512 / d;
                        let lit = e * 128 / d;
                        let lo = lit.div_ceil(n_max);
                        let hi = n_max.min(lit);
                        n += (hi + 1 - lo) as usize;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn single_point_grid() {
        let grid = DseGrid {
            data_rates_gbps: vec![16],
            waveguides: Some(vec![6]),
            ..DseGrid::point(70.0, 16, 1, 0.1)
        };
        let cfgs = enumerate(&grid, &tech()).unwrap();
        assert_eq!(cfgs.len(), 1);
        let opt = find_optimum_in(&grid, &tech()).unwrap();
        assert_eq!(opt.config, cfgs[0]);
    }

    #[test]
    fn every_waveguide_count_is_enumerated() {
        let cfgs = enumerate(&DseGrid::point(70.0, 16, 1, 0.1), &tech()).unwrap();
        for d in [2u32, 4, 8, 16, 32] {
            let ws: Vec<u32> = cfgs
                .iter()
                .filter(|c| c.data_rate_gbps() == f64::from(d))
                .map(|c| c.waveguides)
                .collect();
            let n_max = 512 / d;
            assert_eq!(
                ws,
                (4..=n_max.min(16 * 128 / d)).collect::<Vec<_>>(),
                "D={d}"
            );
        }
    }

    #[test]
    fn enumeration_count_matches_oracle() {
        let grid = DseGrid::default();
        assert_eq!(
            enumerate(&grid, &tech()).unwrap().len(),
            count_oracle(&grid)
        );
        let grid = DseGrid {
            lengths_mm: vec![5.0, 7.5, 20.0],
            ..DseGrid::default()
        };
        assert_eq!(
            enumerate(&grid, &tech()).unwrap().len(),
            count_oracle(&grid)
        );
    }

    #[test]
    fn enumeration_order_is_lexicographic() {
        let grid = DseGrid {
            lengths_mm: vec![10.0, 20.0],
            logical_links: vec![4, 8],
            strides: vec![1, 2],
            ..DseGrid::default()
        };
        let cfgs = enumerate(&grid, &tech()).unwrap();
        let keys: Vec<_> = cfgs
            .iter()
            .map(|c| {
                (
                    (c.length_m * 1e4).round() as u64,
                    c.logical_links,
                    c.stride,
                    c.data_rate_per_wavelength,
                    c.waveguides,
                )
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let grid = DseGrid {
            lengths_mm: vec![],
            ..DseGrid::default()
        };
        assert!(matches!(
            enumerate(&grid, &tech()),
            Err(Error::EmptyGrid(_))
        ));
        let grid = DseGrid {
            lengths_mm: vec![2.5],
            strides: vec![2],
            ..DseGrid::default()
        };
        assert!(matches!(
            enumerate(&grid, &tech()),
            Err(Error::EmptyGrid(_))
        ));
    }

    #[test]
    fn optimum_matches_rescan() {
        let t = tech();
        let opt = find_optimum(0.07, 16, 1, &t, 0.1).unwrap();
        assert_eq!(opt.config.data_rate_gbps(), 16.0);
        assert!((4..=8).contains(&opt.config.waveguides));
        for cfg in enumerate(&DseGrid::point(70.0, 16, 1, 0.1), &t).unwrap() {
            if let Ok(r) = evaluate(&cfg, &t) {
                assert!(opt.total_pj <= r.total_pj, "{cfg:?}");
            }
        }
    }

    #[test]
    fn result_breakdown_revalidates() {
        let t = tech();
        let opt = find_optimum(0.07, 16, 1, &t, 0.1).unwrap();
        let again = energy_per_bit(&opt.config, &t, &opt.tuning).unwrap();
        assert_relative_eq!(again.total_pj(), opt.total_pj, max_relative = 1e-9);
    }

    #[test]
    fn ties_prefer_fewer_waveguides() {
        let base = evaluate(&MwmrLinkConfig::new(16, 16, 6, 0.07, 1), &tech()).unwrap();
        let mut wider = base;
        wider.config.waveguides = 7;
        let mut faster = base;
        faster.config.data_rate_per_wavelength = 32_000_000_000;
        assert_eq!(best_of([wider, base]).unwrap().config.waveguides, 6);
        assert_eq!(
            best_of([faster, base]).unwrap().config.data_rate_gbps(),
            16.0
        );
    }

    #[test]
    fn infeasible_everywhere_is_reported() {
        let t = PhotonicTechParams {
            laser_power_ceiling: 1e-9,
            ..tech()
        };
        assert!(matches!(
            find_optimum(0.07, 16, 1, &t, 0.1),
            Err(Error::NoFeasibleDesign { .. })
        ));
    }

    #[test]
    fn trend_single_length_equals_optimum() {
        let t = tech();
        let rows = trend_table(&[70.0], 16, 1, &t, 0.1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(
            rows[0].optimum,
            Some(find_optimum(0.07, 16, 1, &t, 0.1).unwrap())
        );
        let rows = trend_table(&[7.5], 16, 2, &t, 0.1).unwrap();
        assert!(rows[0].optimum.is_none() && rows[0].error.is_some());
    }

    #[test]
    fn inversion_count() {
        assert_eq!(inversions(&[1, 2, 2, 3]), 0);
        assert_eq!(inversions(&[1, 3, 2, 4, 3]), 2);
    }

    #[test]
    fn stride_one_loses_at_one_hop() {
        let t = tech();
        let rows = compare_vs_electrical(
            &[2.5, 5.0],
            16,
            1,
            &t,
            &RouterConfig::reference(),
            &ElectricalCoefficients::default(),
            0.1,
        )
        .unwrap();
        assert!(!rows[0].photonic_wins());
        let again = compare_vs_electrical(
            &[2.5, 5.0],
            16,
            1,
            &t,
            &RouterConfig::reference(),
            &ElectricalCoefficients::default(),
            0.1,
        )
        .unwrap();
        assert_eq!(rows, again);
    }
}

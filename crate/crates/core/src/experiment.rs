//! Batch sweeps over `(K, S)` variants and traffic patterns.
//!
//! Every cell runs layout, per-snake link design, link selection,
//! simulation and energy accounting. A failing cell is recorded and the
//! sweep continues. Aggregate files follow plan order, so reruns of the
//! same configuration produce identical bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{digest_json, Config};
use crate::dse::{find_optimum_in, DseGrid, DseResult};
use crate::energy::{account, static_power_summary, EnergyReport, PhotonicDesigns};
use crate::error::{Error, Result};
use crate::selector::{routing_tables, select, LinkSelection, RoutingTables, SelectionConstraints};
use crate::sim::{self, SimReport};
use crate::topology::{build, MeshSpec, SnakeLayout, VARIANTS};
use crate::traffic::{generate, trace_to_matrix, PatternSpec, Placement, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The electrical mesh alone.
    Mesh,
    Hybrid {
        snakes: usize,
        stride: usize,
    },
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Mesh => write!(f, "mesh"),
            Variant::Hybrid { snakes, stride } => write!(f, "K{snakes}S{stride}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    /// `[K, S]` pairs.
    pub variants: Vec<[usize; 2]>,
    pub baseline: bool,
    pub patterns: Vec<PatternSpec>,
    /// Overrides the seed of every pattern when set.
    pub seed: Option<u64>,
    /// Worker threads; zero uses every core.
    pub workers: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            variants: VARIANTS.iter().map(|&(k, s)| [k, s]).collect(),
            baseline: true,
            patterns: default_patterns(),
            seed: None,
            workers: 0,
        }
    }
}

pub fn default_patterns() -> Vec<PatternSpec> {
    vec![
        PatternSpec::fcp(Placement::Center),
        PatternSpec::fcp(Placement::Side),
        PatternSpec::mfm(Placement::Center),
        PatternSpec::mfm(Placement::Side),
        PatternSpec::mfm(Placement::Corner),
    ]
}

impl ExperimentPlan {
    /// Baseline first, then the hybrid variants in configured order.
    pub fn variants(&self) -> Vec<Variant> {
        let mut v = Vec::new();
        if self.baseline {
            v.push(Variant::Mesh);
        }
        v.extend(
            self.variants
                .iter()
                .map(|&[snakes, stride]| Variant::Hybrid { snakes, stride }),
        );
        v
    }

    pub fn patterns(&self) -> Vec<PatternSpec> {
        self.patterns
            .iter()
            .map(|p| match self.seed {
                Some(seed) => p.clone().with_seed(seed),
                None => p.clone(),
            })
            .collect()
    }

    /// `(pattern index, variant)` for every cell, pattern-major.
    pub fn cells(&self) -> Vec<(usize, Variant)> {
        let variants = self.variants();
        (0..self.patterns.len())
            .flat_map(|p| variants.iter().map(move |&v| (p, v)))
            .collect()
    }

    pub fn validate(&self, mesh: &MeshSpec, constraints: &SelectionConstraints) -> Result<()> {
        for &[k, s] in &self.variants {
            build(mesh, k, s)?;
            constraints.validate(k)?;
        }
        let mut labels = BTreeMap::new();
        for p in &self.patterns {
            p.validate()?;
            if labels.insert(p.label(), ()).is_some() {
                return Err(Error::invalid(format!(
                    "pattern {} listed twice",
                    p.label()
                )));
            }
        }
        Ok(())
    }
}

/// Link design shared by every waveguide set of a variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantDesign {
    pub variant: Variant,
    pub layout: SnakeLayout,
    pub design: DseResult,
}

/// Optimizes one waveguide set sized for the whole per-snake link budget.
pub fn design_variant(cfg: &Config, snakes: usize, stride: usize) -> Result<VariantDesign> {
    let layout = build(&cfg.mesh, snakes, stride)?;
    let grid = DseGrid {
        logical_links: vec![cfg.constraints.per_snake(snakes) as u32],
        lengths_mm: vec![layout.length_per_waveguide_m() * 1e3],
        strides: vec![stride as u32],
        ..cfg.dse.clone()
    };
    let design = find_optimum_in(&grid, &cfg.photonic)?;
    Ok(VariantDesign {
        variant: Variant::Hybrid { snakes, stride },
        layout,
        design,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub links: usize,
    pub packets: usize,
    pub mean_latency: f64,
    pub p50_latency: u64,
    pub p95_latency: u64,
    pub p99_latency: u64,
    pub max_latency: u64,
    pub cycles: u64,
    pub photonic_flits: u64,
    pub energy: EnergyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub pattern: String,
    pub variant: Variant,
    pub outcome: std::result::Result<CellMetrics, String>,
}

fn metrics(report: &SimReport, links: usize, energy: EnergyReport) -> CellMetrics {
    CellMetrics {
        links,
        packets: report.packets.len(),
        mean_latency: report.mean_latency,
        p50_latency: report.p50_latency,
        p95_latency: report.p95_latency,
        p99_latency: report.p99_latency,
        max_latency: report.max_latency,
        cycles: report.cycles,
        photonic_flits: report.total_photonic_flits(),
        energy,
    }
}

/// Everything one simulated run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub selection: Option<LinkSelection>,
    pub tables: RoutingTables,
    pub report: SimReport,
    pub energy: EnergyReport,
}

/// Selects links for `trace` (when a hybrid design is given), simulates and
/// accounts energy. Without a design the run is the mesh baseline.
pub fn run_design(
    cfg: &Config,
    design: Option<&VariantDesign>,
    trace: &Trace,
) -> Result<RunOutput> {
    let (tables, selection, designs) = match design {
        None => (
            routing_tables(&build(&cfg.mesh, 1, 1)?, &[], &cfg.selector),
            None,
            PhotonicDesigns { sets: Vec::new() },
        ),
        Some(d) => {
            let matrix = trace_to_matrix(trace, &cfg.mesh)?;
            let sel = select(&d.layout, &matrix, &cfg.constraints, &cfg.selector)?;
            let tables = routing_tables(&d.layout, &sel.links, &cfg.selector);
            (
                tables,
                Some(sel),
                PhotonicDesigns::uniform(&d.layout, d.design),
            )
        }
    };
    let report = sim::run(&cfg.mesh, &tables, trace, &cfg.sim)?;
    let energy = account(
        &report,
        &cfg.mesh,
        &tables.links,
        &designs,
        &cfg.electrical,
        &cfg.router,
    )?;
    Ok(RunOutput {
        selection,
        tables,
        report,
        energy,
    })
}

fn run_cell(
    cfg: &Config,
    variant: Variant,
    trace: &Trace,
    design: Option<&std::result::Result<VariantDesign, String>>,
) -> std::result::Result<CellMetrics, String> {
    let design = match variant {
        Variant::Mesh => None,
        Variant::Hybrid { .. } => Some(
            design
                .expect("hybrid variants are designed first")
                .as_ref()
                .map_err(|e| format!("link design failed: {e}"))?,
        ),
    };
    let out = run_design(cfg, design, trace).map_err(|e| e.to_string())?;
    Ok(metrics(&out.report, out.tables.links.len(), out.energy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub patterns: Vec<PatternSpec>,
    pub designs: Vec<std::result::Result<VariantDesign, String>>,
    /// Plan order.
    pub cells: Vec<Cell>,
    /// SHA-256 of each generated trace, by pattern label.
    pub trace_digests: BTreeMap<String, String>,
}

/// Runs every cell of the configured plan without touching the filesystem.
pub fn run_plan(cfg: &Config) -> Result<ExperimentResults> {
    cfg.validate()?;
    let plan = &cfg.experiment;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    pool.install(|| {
        let patterns = plan.patterns();
        let traces: Vec<std::result::Result<Trace, String>> = patterns
            .par_iter()
            .map(|p| generate(p, &cfg.mesh).map_err(|e| e.to_string()))
            .collect();
        let hybrids: Vec<(usize, usize)> = plan.variants.iter().map(|&[k, s]| (k, s)).collect();
        let designs: Vec<_> = hybrids
            .par_iter()
            .map(|&(k, s)| design_variant(cfg, k, s).map_err(|e| e.to_string()))
            .collect();
        let by_variant: BTreeMap<Variant, &std::result::Result<VariantDesign, String>> = hybrids
            .iter()
            .zip(&designs)
            .map(|(&(snakes, stride), d)| (Variant::Hybrid { snakes, stride }, d))
            .collect();
        let cells = plan
            .cells()
            .into_par_iter()
            .map(|(p, variant)| Cell {
                pattern: patterns[p].label(),
                variant,
                outcome: match &traces[p] {
                    Ok(trace) => run_cell(cfg, variant, trace, by_variant.get(&variant).copied()),
                    Err(e) => Err(format!("trace generation failed: {e}")),
                },
            })
            .collect();
        let trace_digests = patterns
            .iter()
            .zip(&traces)
            .filter_map(|(p, t)| t.as_ref().ok().map(|t| (p.label(), digest_json(t))))
            .collect();
        Ok(ExperimentResults {
            patterns,
            designs,
            cells,
            trace_digests,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub pattern: String,
    pub variant: String,
    pub status: String,
    pub links: Option<usize>,
    pub packets: Option<usize>,
    pub mean_latency: Option<f64>,
    pub p50_latency: Option<u64>,
    pub p95_latency: Option<u64>,
    pub p99_latency: Option<u64>,
    pub max_latency: Option<u64>,
    pub cycles: Option<u64>,
    /// Mean latency over the mesh baseline of the same pattern.
    pub latency_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub pattern: String,
    pub variant: String,
    pub status: String,
    pub router_dynamic_j: Option<f64>,
    pub link_dynamic_j: Option<f64>,
    pub photonic_modulator_j: Option<f64>,
    pub photonic_serdes_j: Option<f64>,
    pub electrical_static_j: Option<f64>,
    pub photonic_static_j: Option<f64>,
    pub total_j: Option<f64>,
    pub dynamic_pj_per_bit: Option<f64>,
    pub total_pj_per_bit: Option<f64>,
    pub dynamic_ratio: Option<f64>,
    pub total_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticRow {
    pub variant: String,
    pub status: String,
    pub length_mm: Option<f64>,
    pub logical_links: Option<u32>,
    pub data_rate_gbps: Option<f64>,
    pub waveguides: Option<u32>,
    pub laser_w: Option<f64>,
    pub trimming_w: Option<f64>,
    pub leakage_w: Option<f64>,
    pub total_w: Option<f64>,
}

fn status<T>(r: &std::result::Result<T, String>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => format!("failed: {e}"),
    }
}

impl ExperimentResults {
    fn baseline(&self, pattern: &str) -> Option<&CellMetrics> {
        self.cells
            .iter()
            .find(|c| c.pattern == pattern && c.variant == Variant::Mesh)
            .and_then(|c| c.outcome.as_ref().ok())
    }

    pub fn cell(&self, pattern: &str, variant: Variant) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.pattern == pattern && c.variant == variant)
    }

    pub fn latency_rows(&self) -> Vec<LatencyRow> {
        self.cells
            .iter()
            .map(|c| {
                let m = c.outcome.as_ref().ok();
                let base = self.baseline(&c.pattern);
                LatencyRow {
                    pattern: c.pattern.clone(),
                    variant: c.variant.to_string(),
                    status: status(&c.outcome),
                    links: m.map(|m| m.links),
                    packets: m.map(|m| m.packets),
                    mean_latency: m.map(|m| m.mean_latency),
                    p50_latency: m.map(|m| m.p50_latency),
                    p95_latency: m.map(|m| m.p95_latency),
                    p99_latency: m.map(|m| m.p99_latency),
                    max_latency: m.map(|m| m.max_latency),
                    cycles: m.map(|m| m.cycles),
                    latency_ratio: m.zip(base).map(|(m, b)| m.mean_latency / b.mean_latency),
                }
            })
            .collect()
    }

    pub fn energy_rows(&self) -> Vec<EnergyRow> {
        self.cells
            .iter()
            .map(|c| {
                let e = c.outcome.as_ref().ok().map(|m| m.energy);
                let photonic = |f: fn(&EnergyReport) -> f64| match c.variant {
                    Variant::Mesh => None,
                    Variant::Hybrid { .. } => e.as_ref().map(f),
                };
                let ratios = e
                    .zip(self.baseline(&c.pattern))
                    .map(|(e, b)| e.ratios(&b.energy));
                EnergyRow {
                    pattern: c.pattern.clone(),
                    variant: c.variant.to_string(),
                    status: status(&c.outcome),
                    router_dynamic_j: e.map(|e| e.router_dynamic_j),
                    link_dynamic_j: e.map(|e| e.link_dynamic_j),
                    photonic_modulator_j: photonic(|e| e.photonic_modulator_j),
                    photonic_serdes_j: photonic(|e| e.photonic_serdes_j),
                    electrical_static_j: e.map(|e| e.electrical_static_j),
                    photonic_static_j: photonic(|e| e.photonic_static_j),
                    total_j: e.map(|e| e.total_j()),
                    dynamic_pj_per_bit: e.map(|e| e.dynamic_pj_per_bit()),
                    total_pj_per_bit: e.map(|e| e.total_pj_per_bit()),
                    dynamic_ratio: ratios.map(|r| r.dynamic),
                    total_ratio: ratios.map(|r| r.total),
                }
            })
            .collect()
    }

    pub fn static_rows(&self, plan: &ExperimentPlan) -> Vec<StaticRow> {
        plan.variants
            .iter()
            .zip(&self.designs)
            .map(|(&[k, s], d)| {
                let ok = d.as_ref().ok();
                let summary = ok.map(|d| {
                    static_power_summary(&d.layout, &PhotonicDesigns::uniform(&d.layout, d.design))
                });
                StaticRow {
                    variant: Variant::Hybrid {
                        snakes: k,
                        stride: s,
                    }
                    .to_string(),
                    status: status(d),
                    length_mm: ok.map(|d| d.design.config.length_mm()),
                    logical_links: ok.map(|d| d.design.config.logical_links),
                    data_rate_gbps: ok.map(|d| d.design.config.data_rate_gbps()),
                    waveguides: ok.map(|d| d.design.config.waveguides),
                    laser_w: summary.map(|s| s.laser_w),
                    trimming_w: summary.map(|s| s.trimming_w),
                    leakage_w: summary.map(|s| s.leakage_w),
                    total_w: summary.map(|s| s.total_w()),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub pattern: String,
    pub variant: String,
    pub status: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Written beside the manifest; rerunning with it regenerates every file.
    pub config_file: String,
    pub config_sha256: String,
    pub trace_sha256: BTreeMap<String, String>,
    pub cells: Vec<ManifestCell>,
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::invalid(e.to_string()))
}

/// Atomically writes `rows` as CSV with a header line.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

/// Atomically writes `value` as pretty-printed JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &serde_json::to_vec_pretty(value)?)
}

/// Runs the plan and writes cells, aggregate CSVs, the resolved
/// configuration and the manifest under `out`.
pub fn run_experiment(cfg: &Config, out: &Path) -> Result<(ExperimentResults, Manifest)> {
    let results = run_plan(cfg)?;
    let cells_dir = out.join("cells");
    std::fs::create_dir_all(&cells_dir).map_err(|e| Error::io(&cells_dir, e))?;
    let mut manifest_cells = Vec::new();
    for c in &results.cells {
        let file = format!("cells/{}__{}.json", c.pattern, c.variant);
        let bytes = serde_json::to_vec_pretty(c)?;
        write_atomic(&out.join(&file), &bytes)?;
        manifest_cells.push(ManifestCell {
            pattern: c.pattern.clone(),
            variant: c.variant.to_string(),
            status: status(&c.outcome),
            sha256: crate::config::digest_bytes(&bytes),
            file,
        });
    }
    write_atomic(
        &out.join("latency.csv"),
        &csv_bytes(&results.latency_rows())?,
    )?;
    write_atomic(&out.join("energy.csv"), &csv_bytes(&results.energy_rows())?)?;
    write_atomic(
        &out.join("static_power.csv"),
        &csv_bytes(&results.static_rows(&cfg.experiment))?,
    )?;
    write_atomic(&out.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_file: "config.toml".into(),
        config_sha256: cfg.digest(),
        trace_sha256: results.trace_digests.clone(),
        cells: manifest_cells,
    };
    write_atomic(
        &out.join("manifest.json"),
        &serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok((results, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Config {
        let mut cfg = Config::default();
        cfg.experiment.variants = vec![[1, 1], [8, 4]];
        cfg.experiment.patterns = vec![
            PatternSpec {
                duration: 600,
                ..PatternSpec::fcp(Placement::Center)
            },
            PatternSpec {
                duration: 600,
                ..PatternSpec::mfm(Placement::Corner)
            },
        ];
        cfg
    }

    #[test]
    fn full_plan_cardinality() {
        let plan = ExperimentPlan::default();
        assert_eq!(plan.cells().len(), 5 * 15);
        assert_eq!(plan.variants()[0], Variant::Mesh);
        assert_eq!(
            Variant::Hybrid {
                snakes: 2,
                stride: 4
            }
            .to_string(),
            "K2S4"
        );
    }

    #[test]
    fn baseline_only_plan_has_no_photonic_columns() {
        let mut cfg = small();
        cfg.experiment.variants.clear();
        let r = run_plan(&cfg).unwrap();
        assert_eq!(r.cells.len(), 2);
        for row in r.energy_rows() {
            assert_eq!(row.status, "ok");
            assert!(row.photonic_static_j.is_none() && row.photonic_modulator_j.is_none());
            assert_eq!(row.total_ratio, Some(1.0));
        }
    }

    #[test]
    fn outputs_are_reproducible() {
        let cfg = small();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (results, manifest) = run_experiment(&cfg, a.path()).unwrap();
        run_experiment(&cfg, b.path()).unwrap();
        assert_eq!(results.cells.len(), 6);
        assert!(results.cells.iter().all(|c| c.outcome.is_ok()));
        for f in [
            "latency.csv",
            "energy.csv",
            "static_power.csv",
            "manifest.json",
        ] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f} differs");
        }
        let saved = Config::load(&a.path().join(&manifest.config_file)).unwrap();
        assert_eq!(saved.digest(), manifest.config_sha256);
    }

    #[test]
    fn failing_cells_do_not_stop_the_sweep() {
        let mut cfg = small();
        cfg.sim.max_cycles = 50;
        let r = run_plan(&cfg).unwrap();
        assert_eq!(r.cells.len(), 6);
        assert!(r.cells.iter().all(|c| c.outcome.is_err()));
        assert!(r.latency_rows()[0].status.starts_with("failed"));
    }

    #[test]
    fn duplicate_patterns_are_rejected() {
        let mut cfg = small();
        cfg.experiment
            .patterns
            .push(PatternSpec::fcp(Placement::Center));
        assert!(run_plan(&cfg).is_err());
    }
}

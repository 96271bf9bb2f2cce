use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hybrid_noc::config::Config;
use hybrid_noc::dse::{
    compare_vs_electrical, crossover_length, find_optimum_in, optima, trend_table, DseGrid,
};
use hybrid_noc::electrical::sweep_router_configs;
use hybrid_noc::experiment::{design_variant, run_design, run_experiment, write_csv, write_json};
use hybrid_noc::selector::TrafficMatrix;
use hybrid_noc::topology::resource_summary;
use hybrid_noc::traffic::{generate, trace_to_matrix, Trace};
use hybrid_noc::{Error, Result};

#[derive(Parser)]
#[command(
    version,
    about = "Hybrid electronic-photonic NoC modeling and simulation"
)]
struct Cli {
    /// TOML configuration; defaults apply to every absent key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides every traffic seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy-optimal MWMR link design.
    Dse(DseArgs),
    /// Electrical router energy across clock/flit-width configurations.
    RouterSweep {
        #[arg(long, default_value_t = 0.1)]
        injection_rate: f64,
    },
    /// Snake layout, candidate links and resource census.
    Topo(VariantArgs),
    /// Greedy logical-link selection for a traffic matrix.
    Select {
        #[command(flatten)]
        variant: VariantArgs,
        /// `src,dst,volume` CSV; the configured pattern is generated when absent.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Trace-driven simulation with energy accounting.
    Sim {
        #[command(flatten)]
        variant: VariantArgs,
        /// Simulate the electrical mesh alone.
        #[arg(long, conflicts_with_all = ["snakes", "stride"])]
        mesh_only: bool,
        /// Trace file; the configured pattern is generated when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Every configured variant against every configured pattern.
    Experiment,
}

#[derive(Args)]
struct DseArgs {
    /// Link length, e.g. `70mm` or `0.07m`.
    #[arg(long = "L", value_parser = parse_length_mm)]
    length: Option<f64>,
    /// Logical links sharing the waveguides.
    #[arg(long = "E")]
    logical_links: Option<u32>,
    /// Stride between hybrid sites.
    #[arg(long = "S")]
    stride: Option<u32>,
    /// Optimum at every configured length.
    #[arg(long, conflicts_with = "length")]
    trend: bool,
    /// Also compare against an electrical router chain of equal length.
    #[arg(long)]
    vs_electrical: bool,
    /// Write every evaluated design point, not only the optima.
    #[arg(long)]
    all_points: bool,
}

#[derive(Args)]
struct VariantArgs {
    /// Snakes (K).
    #[arg(long = "K", id = "snakes", default_value_t = 1)]
    snakes: usize,
    /// Stride (S).
    #[arg(long = "S", id = "stride", default_value_t = 1)]
    stride: usize,
}

fn parse_length_mm(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let (num, scale) = if let Some(v) = t.strip_suffix("mm") {
        (v, 1.0)
    } else if let Some(v) = t.strip_suffix('m') {
        (v, 1e3)
    } else {
        (t, 1.0)
    };
    match num.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v * scale),
        _ => Err(format!(
            "`{s}` is not a positive length such as 70mm or 0.07m"
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = Config::load_or_default(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.clone(),
        source: e,
    })?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Dse(args) => dse(&cfg, args, out),
        Command::RouterSweep { injection_rate } => {
            let rows =
                sweep_router_configs(&cfg.electrical, *injection_rate, cfg.mesh.hop_length_mm)?;
            let flat: Vec<_> = rows
                .iter()
                .map(|r| SweepCsv {
                    clock_ghz: r.config.clock_hz / 1e9,
                    flit_bits: r.config.flit_bits,
                    buffer_depth: r.config.buffer_depth,
                    dynamic_pj: r.dynamic_pj,
                    leakage_pj: r.leakage_pj,
                    energy_per_bit_pj: r.energy_per_bit,
                })
                .collect();
            report(out, "router_sweep.csv", &flat)
        }
        Command::Topo(v) => {
            let d = design_variant(&cfg, v.snakes, v.stride)?;
            let c = d.design.config;
            let geometry = hybrid_noc::photonic::derive_geometry(&c, &cfg.photonic)?;
            let avg = f64::from(geometry.lit_wavelengths) / f64::from(c.waveguides);
            let summary = resource_summary(&d.layout, 2 * c.waveguides, avg, c.data_rate_gbps());
            write_json(&out.join("layout.json"), &d.layout.export())?;
            write_json(&out.join("resources.json"), &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        Command::Select { variant, matrix } => {
            let d = design_variant(&cfg, variant.snakes, variant.stride)?;
            let n = cfg.mesh.nodes();
            let m = match matrix {
                Some(p) => TrafficMatrix::load_csv(p, n)?,
                None => trace_to_matrix(&generate(&cfg.traffic, &cfg.mesh)?, &cfg.mesh)?,
            };
            let sel = hybrid_noc::selector::select(&d.layout, &m, &cfg.constraints, &cfg.selector)?;
            write_json(&out.join("selection.json"), &sel)?;
            write_csv(&out.join("selected_links.csv"), &sel.links)?;
            println!("{} links selected", sel.links.len());
            Ok(())
        }
        Command::Sim {
            variant,
            mesh_only,
            trace,
        } => {
            let trace = match trace {
                Some(p) => Trace::load(p)?,
                None => generate(&cfg.traffic, &cfg.mesh)?,
            };
            let design = if *mesh_only {
                None
            } else {
                Some(design_variant(&cfg, variant.snakes, variant.stride)?)
            };
            let run = run_design(&cfg, design.as_ref(), &trace)?;
            let mut lat = Vec::new();
            run.report.write_latency_csv(&mut lat)?;
            std::fs::write(out.join("latency.csv"), lat).map_err(|e| Error::Io {
                path: out.join("latency.csv"),
                source: e,
            })?;
            write_json(&out.join("report.json"), &run.report)?;
            write_json(&out.join("energy.json"), &run.energy)?;
            if let Some(sel) = &run.selection {
                write_json(&out.join("selection.json"), sel)?;
            }
            println!(
                "{} packets, mean latency {:.3} cycles, {:.4} pJ/bit dynamic",
                run.report.packets.len(),
                run.report.mean_latency,
                run.energy.dynamic_pj_per_bit()
            );
            Ok(())
        }
        Command::Experiment => {
            let (results, _) = run_experiment(&cfg, out)?;
            let failed = results.cells.iter().filter(|c| c.outcome.is_err()).count();
            println!(
                "{} cells, {failed} failed; results in {}",
                results.cells.len(),
                out.display()
            );
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SweepCsv {
    clock_ghz: f64,
    flit_bits: u32,
    buffer_depth: u32,
    dynamic_pj: f64,
    leakage_pj: f64,
    energy_per_bit_pj: f64,
}

#[derive(Serialize)]
struct TrendCsv {
    #[serde(rename = "L_mm")]
    length_mm: f64,
    status: String,
    #[serde(rename = "D_lambda_Gbps")]
    data_rate_gbps: Option<f64>,
    #[serde(rename = "W")]
    waveguides: Option<u32>,
    #[serde(rename = "total_pJ")]
    total_pj: Option<f64>,
}

/// Writes `rows` under `out` and echoes them to stdout.
fn report<T: Serialize>(out: &Path, name: &str, rows: &[T]) -> Result<()> {
    let path = out.join(name);
    write_csv(&path, rows)?;
    print!(
        "{}",
        std::fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?
    );
    Ok(())
}

fn dse(cfg: &Config, args: &DseArgs, out: &Path) -> Result<()> {
    let inj = cfg.dse.injection_rate;
    let mut grid = cfg.dse.clone();
    if let Some(e) = args.logical_links {
        grid.logical_links = vec![e];
    }
    if let Some(s) = args.stride {
        grid.strides = vec![s];
    }
    if let Some(l) = args.length {
        grid.lengths_mm = vec![l];
    }
    let single = |v: &[u32], flag: &str| -> Result<u32> {
        match v {
            [x] => Ok(*x),
            _ => Err(Error::InvalidConfig(format!(
                "{flag} must name a single value here"
            ))),
        }
    };
    if args.trend || args.vs_electrical {
        let e = single(&grid.logical_links, "--E")?;
        let s = single(&grid.strides, "--S")?;
        if args.vs_electrical {
            let rows = compare_vs_electrical(
                &grid.lengths_mm,
                e,
                s,
                &cfg.photonic,
                &cfg.router,
                &cfg.electrical,
                inj,
            )?;
            report(out, "vs_electrical.csv", &rows)?;
            match crossover_length(&rows) {
                Some(l) => eprintln!("photonic link wins from {l} mm"),
                None => eprintln!("photonic link never wins in this range"),
            }
            return Ok(());
        }
        // Only lengths holding a whole number of site spacings can be built.
        let spacing = cfg.photonic.hop_length * f64::from(s);
        let lengths: Vec<f64> = grid
            .lengths_mm
            .iter()
            .copied()
            .filter(|l| ((l / spacing) - (l / spacing).round()).abs() < 1e-9)
            .collect();
        let rows: Vec<_> = trend_table(&lengths, e, s, &cfg.photonic, inj)?
            .into_iter()
            .map(|r| {
                let row = r.optimum.map(|o| o.row());
                TrendCsv {
                    length_mm: r.length_mm,
                    status: r.error.unwrap_or_else(|| "ok".into()),
                    data_rate_gbps: row.map(|o| o.data_rate_gbps),
                    waveguides: row.map(|o| o.waveguides),
                    total_pj: row.map(|o| o.total_pj),
                }
            })
            .collect();
        return report(out, "trend.csv", &rows);
    }
    if args.length.is_some() && grid.logical_links.len() == 1 && grid.strides.len() == 1 {
        let best = find_optimum_in(&grid, &cfg.photonic)?;
        if args.all_points {
            write_points(&grid, cfg, out)?;
        }
        return report(out, "dse.csv", &[best.row()]);
    }
    if args.all_points {
        write_points(&grid, cfg, out)?;
    }
    let rows: Vec<_> = optima(&grid, &cfg.photonic)?
        .iter()
        .map(|r| r.row())
        .collect();
    write_csv(&out.join("dse_optima.csv"), &rows)?;
    println!(
        "{} optima written to {}",
        rows.len(),
        out.join("dse_optima.csv").display()
    );
    Ok(())
}

fn write_points(grid: &DseGrid, cfg: &Config, out: &Path) -> Result<()> {
    let rows: Vec<_> = hybrid_noc::dse::evaluate_grid(grid, &cfg.photonic)?
        .into_iter()
        .filter_map(|(_, r)| r.map(|r| r.row()))
        .collect();
    write_csv(&out.join("dse_points.csv"), &rows)
}

//! A reduced experiment: three variants against the mesh on two patterns,
//! written to a temporary directory.

use hybrid_noc::config::Config;
use hybrid_noc::experiment::{default_patterns, run_experiment};

fn main() -> hybrid_noc::Result<()> {
    let mut cfg = Config::default();
    cfg.experiment.variants = vec![[1, 1], [2, 2], [8, 4]];
    cfg.experiment.patterns = default_patterns().into_iter().take(2).collect();
    let out = std::env::temp_dir().join("hybrid-noc-experiment-example");
    let (results, manifest) = run_experiment(&cfg, &out)?;
    for row in results.latency_rows() {
        println!(
            "{:<11} {:<5} mean {:>7.2}  ratio {}",
            row.pattern,
            row.variant,
            row.mean_latency.unwrap_or(f64::NAN),
            row.latency_ratio.map_or("-".into(), |r| format!("{r:.3}"))
        );
    }
    println!(
        "{} cells written to {} (config sha256 {})",
        manifest.cells.len(),
        out.display(),
        &manifest.config_sha256[..12]
    );
    Ok(())
}

//! Drive the experiment harness from code: a small N x M sweep on the SLAM
//! instance with the exact posterior as reference.

use apinfer::harness::{run_experiment, ExperimentConfig, SchemeName};

fn main() -> apinfer::Result<()> {
    let cfg = ExperimentConfig {
        model: "slam-small".into(),
        particles: vec![100, 500],
        approx_samples: vec![5, 50],
        scheme: SchemeName::MonteCarlo,
        seeds: (0..5).collect(),
        record_every: 1000,
        ..ExperimentConfig::default()
    };
    let summary = run_experiment(&cfg, None::<std::io::Sink>)?;
    println!("{:>5} {:>4} {:>10} {:>9}", "N", "M", "median KL", "wall ms");
    for g in &summary.groups {
        println!("{:>5} {:>4} {:>10.4} {:>9.1}", g.n, g.m, g.median_kl.unwrap_or(f64::NAN), g.mean_wall_ms);
    }
    Ok(())
}

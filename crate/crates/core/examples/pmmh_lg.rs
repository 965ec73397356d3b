//! Particle-marginal Metropolis-Hastings on the linear-Gaussian model against
//! the grid posterior.
//!
//! ```text
//! cargo run --release --example pmmh_lg -- [inner particles] [iterations]
//! ```

use apinfer::filter::{pmmh_run, PmmhConfig};
use apinfer::model::{simulate, ParamVector, RngStream};
use apinfer::models::{LinearGaussianModel, LG_TRUE_THETA};
use apinfer::oracle::{grid_posterior_lg, linspace};

fn main() -> apinfer::Result<()> {
    let mut args = std::env::args().skip(1);
    let particles: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5000);

    let model = LinearGaussianModel::default();
    let truth = ParamVector::continuous(vec![LG_TRUE_THETA]);
    let obs = simulate(&model, &truth, 100, &mut RngStream::new(0, 0))?.observations;

    let grid = grid_posterior_lg(&model, &obs, &linspace(-1.5, 1.5, 601))?;
    let cfg = PmmhConfig {
        particles,
        iterations,
        ..PmmhConfig::default()
    };
    let chain = pmmh_run(&model, &obs, &cfg)?;

    println!("grid:  mean {:.4}  sd {:.4}", grid.mean(), grid.variance().sqrt());
    println!(
        "pmmh:  mean {:.4}  se {:.4}  acceptance {:.2}  {:.1} s",
        chain.mean[0],
        chain.mean_standard_error()[0],
        chain.acceptance_rate(),
        chain.elapsed.as_secs_f64()
    );
    Ok(())
}

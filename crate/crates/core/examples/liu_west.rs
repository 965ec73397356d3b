//! API, Liu-West and the bootstrap filter with θ drawn once, side by side on
//! the linear-Gaussian model, each against the grid posterior.
//!
//! ```text
//! cargo run --release --example liu_west -- [particles]
//! ```

use apinfer::filter::{api_run, bootstrap_pf_run, liu_west_run, FilterConfig};
use apinfer::model::{simulate, ParamVector, RngStream};
use apinfer::models::{LinearGaussianModel, LG_TRUE_THETA};
use apinfer::oracle::{grid_posterior_lg, linspace};

fn main() -> apinfer::Result<()> {
    let particles: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);

    let model = LinearGaussianModel::default();
    let truth = ParamVector::continuous(vec![LG_TRUE_THETA]);
    let obs = simulate(&model, &truth, 200, &mut RngStream::new(6, 0))?.observations;
    let grid = grid_posterior_lg(&model, &obs, &linspace(-1.5, 1.5, 601))?;
    println!("{:>9}: mean {:+.4}  sd {:.4}", "grid", grid.mean(), grid.variance().sqrt());

    let cfg = FilterConfig::new(particles, 2);
    let runs = [
        ("api", api_run(&model, &obs, &cfg)?),
        ("liu-west", liu_west_run(&model, &obs, &cfg)?),
        ("pf", bootstrap_pf_run(&model, &obs, &cfg)?),
    ];
    for (name, r) in &runs {
        println!(
            "{name:>9}: mean {:+.4}  sd {:.4}  {:.0} ms",
            r.param_mean()[0],
            r.final_param.variances()[0].sqrt(),
            r.elapsed.as_secs_f64() * 1e3
        );
    }
    Ok(())
}

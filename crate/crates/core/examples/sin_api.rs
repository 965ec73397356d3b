//! Estimate θ of the SIN model online with API and compare with the bootstrap
//! particle filter.
//!
//! ```text
//! cargo run --release --example sin_api -- [particles] [steps]
//! ```

use apinfer::filter::{api_run, bootstrap_pf_run, FilterConfig};
use apinfer::model::{simulate, ParamVector, RngStream};
use apinfer::models::{SinModel, SIN_TRUE_THETA};

fn main() -> apinfer::Result<()> {
    let mut args = std::env::args().skip(1);
    let particles: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5000);

    let model = SinModel::plain();
    let truth = ParamVector::continuous(vec![SIN_TRUE_THETA]);
    let data = simulate(&model, &truth, steps, &mut RngStream::new(42, 0))?;

    let cfg = FilterConfig::new(particles, 7);
    let api = api_run(&model, &data.observations, &cfg)?;
    let pf = bootstrap_pf_run(&model, &data.observations, &cfg)?;

    for (name, r) in [("api", &api), ("pf", &pf)] {
        let est = r.param_mean()[0];
        println!(
            "{name:>3}: theta = {est:+.4}  sq.err = {:.2e}  posterior sd = {:.4}  {:.0} ms",
            (est - SIN_TRUE_THETA).powi(2),
            r.final_param.variances()[0].sqrt(),
            r.elapsed.as_secs_f64() * 1e3,
        );
    }
    println!(
        "api ran {} moment-matching updates for {} particle-steps",
        api.adf_updates,
        particles * (steps + 1)
    );
    Ok(())
}

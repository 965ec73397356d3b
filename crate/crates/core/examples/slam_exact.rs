//! Learn a discrete SLAM map with API and compare the map marginals with the
//! exact forward recursion and with a bootstrap particle filter.
//!
//! ```text
//! cargo run --release --example slam_exact -- [particles] [samples]
//! ```

use apinfer::adf::MomentScheme;
use apinfer::filter::{api_run, bootstrap_pf_run, FilterConfig};
use apinfer::model::{simulate, RngStream};
use apinfer::models::SlamModel;
use apinfer::oracle::{kl_factorized, slam_exact_forward, DEFAULT_SLAM_BUDGET};

fn main() -> apinfer::Result<()> {
    let mut args = std::env::args().skip(1);
    let particles: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1500);
    let samples: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);

    let model = SlamModel::small();
    let obs = simulate(&model, &model.default_map(), model.steps(), &mut RngStream::new(0, 0))?.observations;
    let exact = slam_exact_forward(&model, &obs, DEFAULT_SLAM_BUDGET, false)?;

    let cfg = FilterConfig::new(particles, 1).with_scheme(MomentScheme::MonteCarlo { samples });
    let api = api_run(&model, &obs, &cfg)?;
    let pf = bootstrap_pf_run(&model, &obs, &cfg)?;

    println!("cell  exact  api    pf     (probability of label 1)");
    let (a, p) = (api.final_param.marginals().unwrap(), pf.final_param.marginals().unwrap());
    for (i, e) in exact.marginals.iter().enumerate() {
        println!("{i:>4}  {:.3}  {:.3}  {:.3}", e[1], a[i][1], p[i][1]);
    }
    println!("KL(exact || api) = {:.4}", kl_factorized(a, &exact.marginals)?);
    println!("KL(exact || pf)  = {:.4}", kl_factorized(p, &exact.marginals)?);
    Ok(())
}

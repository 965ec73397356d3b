//! Track both modes of the bimodal SIN model with a mixture of Gaussians per
//! particle.
//!
//! ```text
//! cargo run --release --example bimodal_mixture -- [components] [steps]
//! ```

use apinfer::adf::{ApproxFamily, MomentScheme};
use apinfer::filter::{api_run, FilterConfig};
use apinfer::model::{simulate, ParamVector, RngStream};
use apinfer::models::{SinModel, SIN_BIMODAL_TRUE_THETA};

fn main() -> apinfer::Result<()> {
    let mut args = std::env::args().skip(1);
    let components: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);

    let model = SinModel::bimodal();
    let truth = ParamVector::continuous(vec![SIN_BIMODAL_TRUE_THETA]);
    let obs = simulate(&model, &truth, steps, &mut RngStream::new(1, 0))?.observations;

    let cfg = FilterConfig::new(1000, 3)
        .with_scheme(MomentScheme::GaussHermite { points: 7 })
        .with_family(ApproxFamily::Mixture { components });
    let r = api_run(&model, &obs, &cfg)?;

    let total: f64 = r.param_atoms.iter().map(|a| a.0).sum();
    for target in [SIN_BIMODAL_TRUE_THETA, -SIN_BIMODAL_TRUE_THETA] {
        let mass: f64 = r.param_atoms.iter().filter(|a| (a.1[0] - target).abs() <= 0.15).map(|a| a.0).sum();
        println!("weight within 0.15 of {target:+.1}: {:.3}", mass / total);
    }

    // coarse histogram of component means
    let mut bins = [0.0; 16];
    for (w, m) in &r.param_atoms {
        let b = ((m[0] + 2.0) / 4.0 * 16.0).floor();
        if (0.0..16.0).contains(&b) {
            bins[b as usize] += w / total;
        }
    }
    for (i, w) in bins.iter().enumerate() {
        println!("{:+.2} {}", -2.0 + (i as f64 + 0.5) * 0.25, "#".repeat((w * 100.0).round() as usize));
    }
    Ok(())
}

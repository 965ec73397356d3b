//! Moment rules on their own: Gauss-Hermite and unscented point sets, and a
//! single assumed-density update under each scheme.

use apinfer::adf::{gauss_hermite_points, gaussian_update, unscented_points, GaussianApprox, MomentScheme};
use apinfer::model::RngStream;

fn main() -> apinfer::Result<()> {
    let pts = gauss_hermite_points(&[0.0], &[1.0], 7)?;
    println!("Gauss-Hermite, 7 nodes on N(0, 1):");
    for (x, w) in pts.iter() {
        println!("  {:+.6}  {:.6}", x[0], w);
    }
    let fourth: f64 = pts.iter().map(|(x, w)| w * x[0].powi(4)).sum();
    println!("  E[x^4] = {fourth:.12} (exact 3)");

    let (m, c) = unscented_points(&[1.0, -1.0], &[1.0, 0.5, 0.5, 2.0])?.moments();
    println!("unscented points reproduce mean {m:?} and covariance {c:?}");

    // q = N(0, 1) times the factor N(θ; 1, 1) has the exact answer N(0.5, 0.5)
    let q = GaussianApprox::scalar(0.0, 1.0)?;
    let factor = |th: &[f64]| -0.5 * (th[0] - 1.0).powi(2);
    let mut rng = RngStream::new(0, 0);
    for scheme in [
        MomentScheme::GaussHermite { points: 7 },
        MomentScheme::GaussHermite { points: 20 },
        MomentScheme::Unscented,
        MomentScheme::MonteCarlo { samples: 10_000 },
    ] {
        let up = gaussian_update(&q, &factor, scheme, &mut rng)?;
        println!("{scheme:?}: mean {:.6}  var {:.6}", up.approx.mean()[0], up.approx.cov()[0]);
    }
    Ok(())
}

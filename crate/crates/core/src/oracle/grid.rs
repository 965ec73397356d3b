use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kalman_filter;
use crate::error::{Error, Result};
use crate::filter::{log_mean_exp, Algorithm, Filter, FilterConfig};
use crate::model::{DynamicModel, ObsVector};
use crate::models::{BenchmarkModel, LinearGaussianModel};

/// Posterior over a scalar θ on a fixed grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPosterior {
    pub grid: Vec<f64>,
    /// Normalized masses, one per grid point.
    pub masses: Vec<f64>,
    /// `ln p(y | θ)` (or its estimate) per grid point.
    pub log_likelihood: Vec<f64>,
    /// Standard error of each log-likelihood estimate, when stochastic.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_likelihood_se: Option<Vec<f64>>,
}

impl GridPosterior {
    fn from_log_likelihood<M: DynamicModel + ?Sized>(
        model: &M,
        grid: &[f64],
        log_likelihood: Vec<f64>,
        log_likelihood_se: Option<Vec<f64>>,
    ) -> Result<Self> {
        let lp: Vec<f64> = grid
            .iter()
            .zip(&log_likelihood)
            .map(|(&g, &ll)| model.param_prior_logdensity(&[g]) + ll)
            .collect();
        let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Model("grid posterior has no finite mass".into()));
        }
        let mut masses: Vec<f64> = lp.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|m| *m /= z);
        Ok(Self {
            grid: grid.to_vec(),
            masses,
            log_likelihood,
            log_likelihood_se,
        })
    }

    pub fn mean(&self) -> f64 {
        self.grid.iter().zip(&self.masses).map(|(g, m)| g * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.grid.iter().zip(&self.masses).map(|(g, m)| m * (g - mu).powi(2)).sum()
    }

    /// Grid point of largest mass.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .masses
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &m)| if m > b.1 { (i, m) } else { b });
        self.grid[i]
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Exact grid posterior of the linear-Gaussian model via Kalman likelihoods.
pub fn grid_posterior_lg(model: &LinearGaussianModel, observations: &[ObsVector], grid: &[f64]) -> Result<GridPosterior> {
    if model.config().known_theta.is_some() {
        return Err(Error::Config("the model has no free parameter".into()));
    }
    let ll = grid
        .par_iter()
        .map(|&g| kalman_filter(model, g, observations).map(|k| k.log_likelihood))
        .collect::<Result<Vec<_>>>()?;
    GridPosterior::from_log_likelihood(model, grid, ll, None)
}

/// Settings of the particle-filter likelihood estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfLikelihood {
    pub particles: usize,
    pub replications: usize,
    pub seed: u64,
}

impl Default for PfLikelihood {
    fn default() -> Self {
        Self {
            particles: 10_000,
            replications: 20,
            seed: 0,
        }
    }
}

/// Grid posterior from bootstrap-filter likelihood estimates averaged over
/// independent replications. Replication `r` uses seed `seed + r` at every
/// grid point, so neighbouring points share random numbers.
pub fn grid_posterior_pf<M: DynamicModel + ?Sized>(
    model: &M,
    observations: &[ObsVector],
    grid: &[f64],
    pf: &PfLikelihood,
) -> Result<GridPosterior> {
    if model.dims().param != 1 {
        return Err(Error::Config("grid posteriors need a scalar parameter".into()));
    }
    if pf.replications == 0 || observations.is_empty() {
        return Err(Error::Config("need at least one replication and one observation".into()));
    }
    let per_point = grid
        .par_iter()
        .map(|&g| -> Result<(f64, f64)> {
            let mut filter = Filter::new(model, Algorithm::Pf, FilterConfig::new(pf.particles, pf.seed))?;
            filter.set_fixed_param(Some(&[g]))?;
            let mut lls = Vec::with_capacity(pf.replications);
            for r in 0..pf.replications {
                filter.reseed(pf.seed.wrapping_add(r as u64));
                let mut ll = 0.0;
                for (t, y) in observations.iter().enumerate() {
                    let s = if t == 0 { filter.initialize(y) } else { filter.step(y) };
                    match s {
                        Ok(s) => ll += s.log_evidence,
                        Err(e) if e.is_degeneracy() => {
                            ll = f64::NEG_INFINITY;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                lls.push(ll);
            }
            let n = lls.len() as f64;
            let m = lls.iter().sum::<f64>() / n;
            let sd = (lls.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
            Ok((log_mean_exp(&lls), sd / n.sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (ll, se): (Vec<f64>, Vec<f64>) = per_point.into_iter().unzip();
    GridPosterior::from_log_likelihood(model, grid, ll, Some(se))
}

/// The applicable grid oracle for a bundled model with a scalar parameter.
pub fn grid_posterior(
    model: &BenchmarkModel,
    observations: &[ObsVector],
    grid: &[f64],
    pf: &PfLikelihood,
) -> Result<GridPosterior> {
    match model {
        BenchmarkModel::LinearGaussian(m) => grid_posterior_lg(m, observations, grid),
        BenchmarkModel::Sin(m) => grid_posterior_pf(m, observations, grid, pf),
        BenchmarkModel::Slam(_) => Err(Error::Config(
            "SLAM has discrete parameters; use the exact forward oracle".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, ParamVector, RngStream};
    use crate::models::{LinearGaussianConfig, SinModel};

    #[test]
    fn flat_likelihood_returns_the_prior_on_the_grid() {
        let m = LinearGaussianModel::default();
        let grid = linspace(-2.0, 2.0, 41);
        let post = GridPosterior::from_log_likelihood(&m, &grid, vec![0.0; 41], None).unwrap();
        let prior: Vec<f64> = grid.iter().map(|g| (-0.5 * g * g).exp()).collect();
        let z: f64 = prior.iter().sum();
        for (a, b) in post.masses.iter().zip(&prior) {
            assert!((a - b / z).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_flipped_data_gives_a_mirrored_posterior() {
        // alternating-sign data mirrors θ ↦ −θ when every other y is negated
        let m = LinearGaussianModel::new(LinearGaussianConfig::default());
        let traj = simulate(&m, &ParamVector::continuous(vec![0.6]), 50, &mut RngStream::new(4, 0)).unwrap();
        let flipped: Vec<ObsVector> = traj
            .observations
            .iter()
            .enumerate()
            .map(|(t, y)| ObsVector::from(vec![if t % 2 == 0 { y[0] } else { -y[0] }]))
            .collect();
        let grid = linspace(-1.5, 1.5, 61);
        let a = grid_posterior_lg(&m, &traj.observations, &grid).unwrap();
        let b = grid_posterior_lg(&m, &flipped, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((a.masses[i] - b.masses[grid.len() - 1 - i]).abs() < 1e-12);
        }
        assert!((a.mean() + b.mean()).abs() < 1e-12);
    }

    #[test]
    fn refining_the_grid_barely_moves_the_mean() {
        let m = LinearGaussianModel::default();
        let traj = simulate(&m, &ParamVector::continuous(vec![0.6]), 100, &mut RngStream::new(8, 0)).unwrap();
        let coarse = grid_posterior_lg(&m, &traj.observations, &linspace(-1.5, 1.5, 151)).unwrap();
        let fine = grid_posterior_lg(&m, &traj.observations, &linspace(-1.5, 1.5, 301)).unwrap();
        assert!((coarse.mean() - fine.mean()).abs() < 1e-3);
    }

    #[test]
    fn sin_grid_posterior_concentrates_near_the_truth() {
        let m = SinModel::plain();
        let traj = simulate(&m, &ParamVector::continuous(vec![-0.5]), 200, &mut RngStream::new(1, 0)).unwrap();
        let pf = PfLikelihood {
            particles: 500,
            replications: 4,
            seed: 1,
        };
        let post = grid_posterior_pf(&m, &traj.observations, &linspace(-1.5, 1.5, 31), &pf).unwrap();
        assert!((post.mode() + 0.5).abs() <= 0.1 + 1e-12, "mode {}", post.mode());
        assert!(post.log_likelihood_se.is_some());
    }
}

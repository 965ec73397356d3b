use serde::{Deserialize, Serialize};

use crate::adf::ParamApprox;
use crate::error::{Error, Result};

/// Posterior summary over θ pooled across particles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSummary {
    /// Mean and row-major covariance.
    Continuous { mean: Vec<f64>, cov: Vec<f64> },
    /// One marginal table per parameter.
    Discrete { marginals: Vec<Vec<f64>> },
}

impl ParamSummary {
    pub fn empty() -> Self {
        ParamSummary::Continuous {
            mean: vec![],
            cov: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParamSummary::Continuous { mean, .. } => mean.len(),
            ParamSummary::Discrete { marginals } => marginals.len(),
        }
    }

    /// Posterior mean; for discrete parameters the expected code.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            ParamSummary::Continuous { mean, .. } => mean.clone(),
            ParamSummary::Discrete { marginals } => marginals
                .iter()
                .map(|t| t.iter().enumerate().map(|(v, q)| v as f64 * q).sum())
                .collect(),
        }
    }

    /// Marginal variances.
    pub fn variances(&self) -> Vec<f64> {
        match self {
            ParamSummary::Continuous { mean, cov } => {
                let p = mean.len();
                (0..p).map(|i| cov[i * p + i]).collect()
            }
            ParamSummary::Discrete { marginals } => marginals
                .iter()
                .map(|t| {
                    let m: f64 = t.iter().enumerate().map(|(v, q)| v as f64 * q).sum();
                    t.iter().enumerate().map(|(v, q)| q * (v as f64 - m).powi(2)).sum()
                })
                .collect(),
        }
    }

    pub fn marginals(&self) -> Option<&[Vec<f64>]> {
        match self {
            ParamSummary::Discrete { marginals } => Some(marginals),
            _ => None,
        }
    }
}

/// Equal-weight pooling of per-particle approximations.
///
/// Continuous approximations are summarized by the mean and covariance of
/// their mixture; discrete tables are averaged.
pub fn fuse_param_posterior(particles: &[ParamApprox]) -> Result<ParamSummary> {
    let first = particles
        .first()
        .ok_or_else(|| Error::InvalidApprox("no particles to fuse".into()))?;
    let w = 1.0 / particles.len() as f64;
    match first {
        ParamApprox::Discrete(d0) => {
            let mut marginals: Vec<Vec<f64>> = d0.tables().iter().map(|t| vec![0.0; t.len()]).collect();
            for q in particles {
                let ParamApprox::Discrete(d) = q else {
                    return Err(Error::InvalidApprox("mixed approximation kinds".into()));
                };
                if d.cardinalities() != d0.cardinalities() {
                    return Err(Error::InvalidApprox("table shapes differ".into()));
                }
                for (acc, t) in marginals.iter_mut().zip(d.tables()) {
                    for (a, v) in acc.iter_mut().zip(t) {
                        *a += w * v;
                    }
                }
            }
            Ok(ParamSummary::Discrete { marginals })
        }
        _ => {
            let p = first.dim();
            let mut mean = vec![0.0; p];
            let mut second = vec![0.0; p * p];
            for q in particles {
                let (m, c) = match q {
                    ParamApprox::Gaussian(g) => (g.mean().to_vec(), g.cov().to_vec()),
                    ParamApprox::Mixture(x) => (x.mean(), x.cov()),
                    ParamApprox::Discrete(_) => {
                        return Err(Error::InvalidApprox("mixed approximation kinds".into()))
                    }
                };
                if m.len() != p {
                    return Err(Error::InvalidApprox("dimensions differ".into()));
                }
                accumulate(&m, &c, w, &mut mean, &mut second);
            }
            Ok(ParamSummary::Continuous {
                cov: central(&mean, second),
                mean,
            })
        }
    }
}

pub(crate) fn accumulate(m: &[f64], c: &[f64], w: f64, mean: &mut [f64], second: &mut [f64]) {
    let p = m.len();
    for i in 0..p {
        mean[i] += w * m[i];
        for j in 0..p {
            second[i * p + j] += w * (c[i * p + j] + m[i] * m[j]);
        }
    }
}

/// `E[θθᵀ] − μμᵀ`, symmetrized.
pub(crate) fn central(mean: &[f64], mut second: Vec<f64>) -> Vec<f64> {
    let p = mean.len();
    for i in 0..p {
        for j in 0..p {
            second[i * p + j] -= mean[i] * mean[j];
        }
    }
    for i in 0..p {
        // rounding can push a vanishing variance below zero
        second[i * p + i] = second[i * p + i].max(0.0);
        for j in 0..i {
            let v = 0.5 * (second[i * p + j] + second[j * p + i]);
            second[i * p + j] = v;
            second[j * p + i] = v;
        }
    }
    second
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adf::{FactorizedDiscreteApprox, GaussianApprox, MixtureApprox};

    #[test]
    fn single_particle_is_its_own_summary() {
        let g = GaussianApprox::new(vec![1.0, -2.0], vec![2.0, 0.3, 0.3, 1.0]).unwrap();
        let s = fuse_param_posterior(&[ParamApprox::Gaussian(g.clone())]).unwrap();
        let ParamSummary::Continuous { mean, cov } = s else { panic!() };
        assert_eq!(mean, g.mean());
        for (a, b) in cov.iter().zip(g.cov()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_gaussians_pool_by_total_variance() {
        let a = ParamApprox::Gaussian(GaussianApprox::scalar(0.0, 1.0).unwrap());
        let b = ParamApprox::Gaussian(GaussianApprox::scalar(2.0, 1.0).unwrap());
        let s = fuse_param_posterior(&[a, b]).unwrap();
        // mixture moments: mean (0+2)/2, variance 1 + ((0-1)² + (2-1)²)/2
        assert!((s.mean()[0] - 1.0).abs() < 1e-12);
        assert!((s.variances()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mixtures_and_tables_pool() {
        let m = MixtureApprox::new(
            vec![0.5, 0.5],
            vec![
                GaussianApprox::scalar(-1.0, 0.5).unwrap(),
                GaussianApprox::scalar(1.0, 0.5).unwrap(),
            ],
        )
        .unwrap();
        let s = fuse_param_posterior(&[ParamApprox::Mixture(m)]).unwrap();
        assert!((s.variances()[0] - 1.5).abs() < 1e-12);

        let d1 = FactorizedDiscreteApprox::new(vec![vec![1.0, 0.0]]).unwrap();
        let d2 = FactorizedDiscreteApprox::new(vec![vec![0.5, 0.5]]).unwrap();
        let s = fuse_param_posterior(&[ParamApprox::Discrete(d1), ParamApprox::Discrete(d2)]).unwrap();
        assert_eq!(s.marginals().unwrap()[0], vec![0.75, 0.25]);
    }
}

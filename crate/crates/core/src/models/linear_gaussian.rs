use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::{normal_logpdf, Dims, DynamicModel, ParamSpace, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearGaussianConfig {
    pub trans_sd: f64,
    pub obs_sd: f64,
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub init_mean: f64,
    pub init_sd: f64,
    /// When set, θ is fixed to this value and the model has no parameters.
    pub known_theta: Option<f64>,
}

impl Default for LinearGaussianConfig {
    fn default() -> Self {
        Self {
            trans_sd: 1.0,
            obs_sd: 0.5,
            prior_mean: 0.0,
            prior_sd: 1.0,
            init_mean: 0.0,
            init_sd: 1.0,
            known_theta: None,
        }
    }
}

/// AR(1) state observed in Gaussian noise:
/// `x_t = θ x_{t-1} + v_t`, `y_t = x_t + w_t`, `θ ~ N(prior_mean, prior_sd²)`.
///
/// With θ fixed the model is linear-Gaussian, so the Kalman filter gives
/// exact state posteriors and marginal likelihoods for any θ.
#[derive(Clone, Debug)]
pub struct LinearGaussianModel {
    cfg: LinearGaussianConfig,
    space: ParamSpace,
}

impl LinearGaussianModel {
    pub fn new(cfg: LinearGaussianConfig) -> Self {
        let dim = if cfg.known_theta.is_some() { 0 } else { 1 };
        Self {
            cfg,
            space: ParamSpace::Continuous { dim },
        }
    }

    pub fn with_noise(trans_sd: f64, obs_sd: f64) -> Self {
        Self::new(LinearGaussianConfig {
            trans_sd,
            obs_sd,
            ..LinearGaussianConfig::default()
        })
    }

    /// The state-only variant with θ known.
    pub fn state_only(theta: f64, trans_sd: f64, obs_sd: f64) -> Self {
        Self::new(LinearGaussianConfig {
            trans_sd,
            obs_sd,
            known_theta: Some(theta),
            ..LinearGaussianConfig::default()
        })
    }

    pub fn config(&self) -> &LinearGaussianConfig {
        &self.cfg
    }

    #[inline]
    fn theta(&self, theta: &[f64]) -> f64 {
        self.cfg.known_theta.unwrap_or_else(|| theta[0])
    }
}

impl Default for LinearGaussianModel {
    fn default() -> Self {
        Self::new(LinearGaussianConfig::default())
    }
}

impl DynamicModel for LinearGaussianModel {
    fn name(&self) -> &str {
        "lg"
    }

    fn dims(&self) -> Dims {
        Dims {
            param: self.space.dim(),
            state: 1,
            obs: 1,
        }
    }

    fn param_space(&self) -> &ParamSpace {
        &self.space
    }

    fn sample_param_prior(&self, rng: &mut RngStream, out: &mut [f64]) {
        if self.cfg.known_theta.is_none() {
            let z: f64 = StandardNormal.sample(rng);
            out[0] = self.cfg.prior_mean + self.cfg.prior_sd * z;
        }
    }

    fn param_prior_logdensity(&self, theta: &[f64]) -> f64 {
        match self.cfg.known_theta {
            Some(_) => 0.0,
            None => normal_logpdf(theta[0], self.cfg.prior_mean, self.cfg.prior_sd),
        }
    }

    fn param_prior_gaussian(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self.cfg.known_theta {
            Some(_) => None,
            None => Some((vec![self.cfg.prior_mean], vec![self.cfg.prior_sd.powi(2)])),
        }
    }

    fn sample_initial_state(&self, rng: &mut RngStream, _theta: &[f64], out: &mut [f64]) {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = self.cfg.init_mean + self.cfg.init_sd * z;
    }

    fn initial_state_logdensity(&self, x: &[f64], _theta: &[f64]) -> f64 {
        normal_logpdf(x[0], self.cfg.init_mean, self.cfg.init_sd)
    }

    fn sample_transition(&self, rng: &mut RngStream, _t: usize, window: &[f64], theta: &[f64], out: &mut [f64]) {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = self.theta(theta) * window[0] + self.cfg.trans_sd * z;
    }

    fn transition_logdensity(&self, _t: usize, x_new: &[f64], window: &[f64], theta: &[f64]) -> f64 {
        normal_logpdf(x_new[0], self.theta(theta) * window[0], self.cfg.trans_sd)
    }

    fn sample_observation(&self, rng: &mut RngStream, _t: usize, x: &[f64], _theta: &[f64], out: &mut [f64]) {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = x[0] + self.cfg.obs_sd * z;
    }

    fn observation_logdensity(&self, _t: usize, y: &[f64], x: &[f64], _theta: &[f64]) -> f64 {
        normal_logpdf(y[0], x[0], self.cfg.obs_sd)
    }

    fn transition_depends_on_param(&self) -> bool {
        self.cfg.known_theta.is_none()
    }

    fn observation_depends_on_param(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, ParamVector};

    #[test]
    fn zero_process_noise_is_deterministic_ar1() {
        let m = LinearGaussianModel::new(LinearGaussianConfig {
            trans_sd: 0.0,
            init_mean: 2.0,
            init_sd: 0.0,
            ..LinearGaussianConfig::default()
        });
        let traj = simulate(&m, &ParamVector::continuous(vec![0.5]), 4, &mut RngStream::new(3, 0)).unwrap();
        let xs: Vec<f64> = traj.states.iter().map(|s| s[0]).collect();
        assert_eq!(xs, vec![2.0, 1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn zero_theta_gives_iid_states() {
        let m = LinearGaussianModel::with_noise(2.0, 0.5);
        let traj = simulate(&m, &ParamVector::continuous(vec![0.0]), 20_000, &mut RngStream::new(9, 0)).unwrap();
        let xs: Vec<f64> = traj.states[1..].iter().map(|s| s[0]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let lag1 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / n / var;
        assert!((var - 4.0).abs() < 0.15, "var {var}");
        assert!(lag1.abs() < 4.0 / n.sqrt(), "lag-1 autocorrelation {lag1}");
    }

    #[test]
    fn state_only_variant_has_no_parameters() {
        let m = LinearGaussianModel::state_only(0.7, 1.0, 0.5);
        assert_eq!(m.dims().param, 0);
        let traj = simulate(&m, &ParamVector::continuous(vec![]), 3, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(traj.len(), 4);
    }
}

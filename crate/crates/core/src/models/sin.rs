use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::{normal_logpdf, Dims, DynamicModel, ParamSpace, RngStream};

/// Which nonlinearity drives the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinVariant {
    /// x_t = sin(θ x_{t-1}) + v_t
    Plain,
    /// x_t = sin(θ² x_{t-1}) + v_t, whose posterior over θ is symmetric.
    Bimodal,
}

/// Noise and prior settings of the SIN model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinConfig {
    pub trans_sd: f64,
    pub obs_sd: f64,
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub init_mean: f64,
    pub init_sd: f64,
}

impl Default for SinConfig {
    fn default() -> Self {
        Self {
            trans_sd: 1.0,
            obs_sd: 0.5,
            prior_mean: 0.0,
            prior_sd: 1.0,
            init_mean: 0.0,
            init_sd: 1.0,
        }
    }
}

/// Scalar nonlinear model
///
/// ```text
/// θ   ~ N(0, 1),  x_0 ~ N(0, 1)
/// x_t = sin(θ x_{t-1}) + v_t,  v_t ~ N(0, 1)
/// y_t = x_t + w_t,             w_t ~ N(0, 0.5²)
/// ```
///
/// It has no sufficient statistics for θ.
#[derive(Clone, Debug)]
pub struct SinModel {
    variant: SinVariant,
    cfg: SinConfig,
    space: ParamSpace,
    name: &'static str,
}

impl SinModel {
    pub fn new(variant: SinVariant, cfg: SinConfig) -> Self {
        Self {
            variant,
            cfg,
            space: ParamSpace::Continuous { dim: 1 },
            name: match variant {
                SinVariant::Plain => "sin",
                SinVariant::Bimodal => "sin-bimodal",
            },
        }
    }

    pub fn plain() -> Self {
        Self::new(SinVariant::Plain, SinConfig::default())
    }

    pub fn bimodal() -> Self {
        Self::new(SinVariant::Bimodal, SinConfig::default())
    }

    pub fn variant(&self) -> SinVariant {
        self.variant
    }

    pub fn config(&self) -> &SinConfig {
        &self.cfg
    }

    #[inline]
    pub fn drift(&self, theta: f64, x_prev: f64) -> f64 {
        match self.variant {
            SinVariant::Plain => (theta * x_prev).sin(),
            SinVariant::Bimodal => (theta * theta * x_prev).sin(),
        }
    }
}

impl DynamicModel for SinModel {
    fn name(&self) -> &str {
        self.name
    }

    fn dims(&self) -> Dims {
        Dims {
            param: 1,
            state: 1,
            obs: 1,
        }
    }

    fn param_space(&self) -> &ParamSpace {
        &self.space
    }

    fn sample_param_prior(&self, rng: &mut RngStream, out: &mut [f64]) {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = self.cfg.prior_mean + self.cfg.prior_sd * z;
    }

    fn param_prior_logdensity(&self, theta: &[f64]) -> f64 {
        normal_logpdf(theta[0], self.cfg.prior_mean, self.cfg.prior_sd)
    }

    fn param_prior_gaussian(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((vec![self.cfg.prior_mean], vec![self.cfg.prior_sd * self.cfg.prior_sd]))
    }

    fn sample_initial_state(&self, rng: &mut RngStream, _theta: &[f64], out: &mut [f64]) {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = self.cfg.init_mean + self.cfg.init_sd * z;
    }

    fn initial_state_logdensity(&self, x: &[f64], _theta: &[f64]) -> f64 {
        normal_logpdf(x[0], self.cfg.init_mean, self.cfg.init_sd)
    }

    #[inline]
    fn sample_transition(&self, rng: &mut RngStream, _t: usize, window: &[f64], theta: &[f64], out: &mut [f64]) {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = self.drift(theta[0], window[0]) + self.cfg.trans_sd * z;
    }

    #[inline]
    fn transition_logdensity(&self, _t: usize, x_new: &[f64], window: &[f64], theta: &[f64]) -> f64 {
        normal_logpdf(x_new[0], self.drift(theta[0], window[0]), self.cfg.trans_sd)
    }

    fn sample_observation(&self, rng: &mut RngStream, _t: usize, x: &[f64], _theta: &[f64], out: &mut [f64]) {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = x[0] + self.cfg.obs_sd * z;
    }

    #[inline]
    fn observation_logdensity(&self, _t: usize, y: &[f64], x: &[f64], _theta: &[f64]) -> f64 {
        normal_logpdf(y[0], x[0], self.cfg.obs_sd)
    }

    fn observation_depends_on_param(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_param_likelihood, simulate, LogTarget, ParamVector};
    use rand::Rng;

    #[test]
    fn observation_density_peaks_at_state() {
        let m = SinModel::plain();
        let at = m.observation_logdensity(1, &[0.3], &[0.3], &[0.0]);
        for dy in [-0.2, -0.01, 0.01, 0.5] {
            assert!(m.observation_logdensity(1, &[0.3 + dy], &[0.3], &[0.0]) < at);
        }
    }

    #[test]
    fn bimodal_factor_is_even_in_theta() {
        let m = SinModel::bimodal();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..100 {
            let x_prev = [rng.random_range(-3.0..3.0)];
            let x = [rng.random_range(-3.0..3.0)];
            let y = [rng.random_range(-3.0..3.0)];
            let th: f64 = rng.random_range(-2.0..2.0);
            let t = make_param_likelihood(&m, 3, &x, &x_prev, &y).unwrap();
            assert!((t.log_eval(&[th]) - t.log_eval(&[-th])).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_recursion_is_deterministic() {
        let cfg = SinConfig {
            trans_sd: 0.0,
            obs_sd: 0.0,
            init_mean: 1.0,
            init_sd: 0.0,
            ..SinConfig::default()
        };
        let m = SinModel::new(SinVariant::Plain, cfg);
        let mut rng = RngStream::new(1, 0);
        let traj = simulate(&m, &ParamVector::continuous(vec![-0.5]), 1, &mut rng).unwrap();
        assert_eq!(traj.states[0].0, vec![1.0]);
        assert_eq!(traj.states[1].0, vec![(-0.5f64).sin()]);
    }
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ObsVector;
use crate::models::LinearGaussianModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KalmanResult {
    /// Filtering means `E[x_t | y_{0:t}]`.
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// `ln p(y_t | y_{0:t-1}, θ)` per step.
    pub step_log_likelihood: Vec<f64>,
    /// `ln p(y_{0:T} | θ)`.
    pub log_likelihood: f64,
}

/// Kalman filter for the linear-Gaussian model at a fixed θ. A model with a
/// known θ ignores the argument.
pub fn kalman_filter(model: &LinearGaussianModel, theta: f64, observations: &[ObsVector]) -> Result<KalmanResult> {
    let cfg = model.config();
    let a = cfg.known_theta.unwrap_or(theta);
    let q = cfg.trans_sd.powi(2);
    let r = cfg.obs_sd.powi(2);
    let (mut m, mut p) = (cfg.init_mean, cfg.init_sd.powi(2));
    let mut out = KalmanResult {
        means: Vec::with_capacity(observations.len()),
        variances: Vec::with_capacity(observations.len()),
        step_log_likelihood: Vec::with_capacity(observations.len()),
        log_likelihood: 0.0,
    };
    for (t, y) in observations.iter().enumerate() {
        if y.len() != 1 {
            return Err(Error::DimensionMismatch {
                what: "observation",
                expected: 1,
                got: y.len(),
            });
        }
        if t > 0 {
            m *= a;
            p = a * a * p + q;
        }
        let s = p + r;
        if !(s > 0.0) {
            return Err(Error::Model("Kalman innovation variance is zero".into()));
        }
        let e = y[0] - m;
        let ll = -0.5 * ((2.0 * PI * s).ln() + e * e / s);
        out.log_likelihood += ll;
        out.step_log_likelihood.push(ll);
        let k = p / s;
        m += k * e;
        p *= 1.0 - k;
        out.means.push(m);
        out.variances.push(p);
    }
    Ok(out)
}

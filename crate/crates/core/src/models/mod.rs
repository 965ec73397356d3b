//! Bundled benchmark models and the by-name registry.

mod linear_gaussian;
mod sin;
mod slam;

pub use linear_gaussian::{LinearGaussianConfig, LinearGaussianModel};
pub use sin::{SinConfig, SinModel, SinVariant};
pub use slam::{bundled_actions, bundled_map, parse_actions, Action, SlamConfig, SlamModel};

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Dims, DynamicModel, ParamSpace, ParamVector, RngStream};

/// True parameter of the SIN experiments.
pub const SIN_TRUE_THETA: f64 = -0.5;
/// True parameter of the bimodal SIN experiments; the posterior has modes
/// at ±0.7.
pub const SIN_BIMODAL_TRUE_THETA: f64 = 0.7;
/// True parameter used for linear-Gaussian validation data.
pub const LG_TRUE_THETA: f64 = 0.6;

/// Names accepted by [`load`].
pub const MODEL_NAMES: [&str; 5] = ["sin", "sin-bimodal", "slam-small", "slam-large", "lg"];

/// Any bundled model, built by name.
#[derive(Clone, Debug)]
pub enum BenchmarkModel {
    Sin(SinModel),
    Slam(SlamModel),
    LinearGaussian(LinearGaussianModel),
}

fn overrides<T: serde::de::DeserializeOwned + Default>(value: Option<&Value>) -> Result<T> {
    match value {
        None | Some(Value::Null) => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("model overrides: {e}"))),
    }
}

/// Builds a canned model by name, applying optional JSON overrides of its
/// configuration fields. Unknown names or keys are rejected.
pub fn load(name: &str, model_overrides: Option<&Value>) -> Result<BenchmarkModel> {
    Ok(match name {
        "sin" => BenchmarkModel::Sin(SinModel::new(SinVariant::Plain, overrides(model_overrides)?)),
        "sin-bimodal" => BenchmarkModel::Sin(SinModel::new(SinVariant::Bimodal, overrides(model_overrides)?)),
        "slam-small" | "slam-large" => {
            let base = if name == "slam-small" {
                SlamConfig::small()
            } else {
                SlamConfig::large()
            };
            let cfg = match model_overrides {
                None | Some(Value::Null) => base,
                Some(v) => {
                    let mut merged = serde_json::to_value(&base)?;
                    if let (Some(dst), Some(src)) = (merged.as_object_mut(), v.as_object()) {
                        for (k, val) in src {
                            dst.insert(k.clone(), val.clone());
                        }
                    } else {
                        return Err(Error::Config("model overrides must be an object".into()));
                    }
                    serde_json::from_value(merged).map_err(|e| Error::Config(format!("model overrides: {e}")))?
                }
            };
            BenchmarkModel::Slam(SlamModel::new(&cfg)?)
        }
        "lg" => BenchmarkModel::LinearGaussian(LinearGaussianModel::new(overrides(model_overrides)?)),
        other => {
            return Err(Error::Config(format!(
                "unknown model {other:?}; expected one of {MODEL_NAMES:?}"
            )))
        }
    })
}

impl BenchmarkModel {
    /// Ground-truth parameter used to simulate data for this model.
    pub fn default_truth(&self) -> ParamVector {
        match self {
            BenchmarkModel::Sin(m) => ParamVector::continuous(vec![match m.variant() {
                SinVariant::Plain => SIN_TRUE_THETA,
                SinVariant::Bimodal => SIN_BIMODAL_TRUE_THETA,
            }]),
            BenchmarkModel::Slam(m) => m.default_map(),
            BenchmarkModel::LinearGaussian(m) => match m.config().known_theta {
                Some(_) => ParamVector::continuous(vec![]),
                None => ParamVector::continuous(vec![LG_TRUE_THETA]),
            },
        }
    }

    /// Default number of transitions to simulate.
    pub fn default_steps(&self) -> usize {
        match self {
            BenchmarkModel::Sin(_) => 5000,
            BenchmarkModel::Slam(m) => m.steps(),
            BenchmarkModel::LinearGaussian(_) => 100,
        }
    }

    fn inner(&self) -> &dyn DynamicModel {
        match self {
            BenchmarkModel::Sin(m) => m,
            BenchmarkModel::Slam(m) => m,
            BenchmarkModel::LinearGaussian(m) => m,
        }
    }
}

// Explicit delegation keeps the per-call dispatch a single match.
macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            BenchmarkModel::Sin($m) => $e,
            BenchmarkModel::Slam($m) => $e,
            BenchmarkModel::LinearGaussian($m) => $e,
        }
    };
}

impl DynamicModel for BenchmarkModel {
    fn name(&self) -> &str {
        self.inner().name()
    }

    fn dims(&self) -> Dims {
        delegate!(self, m => m.dims())
    }

    fn param_space(&self) -> &ParamSpace {
        delegate!(self, m => m.param_space())
    }

    fn markov_order(&self) -> usize {
        delegate!(self, m => m.markov_order())
    }

    fn sample_param_prior(&self, rng: &mut RngStream, out: &mut [f64]) {
        delegate!(self, m => m.sample_param_prior(rng, out))
    }

    fn param_prior_logdensity(&self, theta: &[f64]) -> f64 {
        delegate!(self, m => m.param_prior_logdensity(theta))
    }

    fn param_prior_gaussian(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        delegate!(self, m => m.param_prior_gaussian())
    }

    fn param_prior_tables(&self) -> Option<Vec<Vec<f64>>> {
        delegate!(self, m => m.param_prior_tables())
    }

    fn sample_initial_state(&self, rng: &mut RngStream, theta: &[f64], out: &mut [f64]) {
        delegate!(self, m => m.sample_initial_state(rng, theta, out))
    }

    fn initial_state_logdensity(&self, x: &[f64], theta: &[f64]) -> f64 {
        delegate!(self, m => m.initial_state_logdensity(x, theta))
    }

    fn sample_transition(&self, rng: &mut RngStream, t: usize, window: &[f64], theta: &[f64], out: &mut [f64]) {
        delegate!(self, m => m.sample_transition(rng, t, window, theta, out))
    }

    fn transition_logdensity(&self, t: usize, x_new: &[f64], window: &[f64], theta: &[f64]) -> f64 {
        delegate!(self, m => m.transition_logdensity(t, x_new, window, theta))
    }

    fn sample_observation(&self, rng: &mut RngStream, t: usize, x: &[f64], theta: &[f64], out: &mut [f64]) {
        delegate!(self, m => m.sample_observation(rng, t, x, theta, out))
    }

    fn observation_logdensity(&self, t: usize, y: &[f64], x: &[f64], theta: &[f64]) -> f64 {
        delegate!(self, m => m.observation_logdensity(t, y, x, theta))
    }

    fn initial_state_depends_on_param(&self) -> bool {
        delegate!(self, m => m.initial_state_depends_on_param())
    }

    fn transition_depends_on_param(&self) -> bool {
        delegate!(self, m => m.transition_depends_on_param())
    }

    fn observation_depends_on_param(&self) -> bool {
        delegate!(self, m => m.observation_depends_on_param())
    }
}

//! State-space model abstraction.
//!
//! A model is a partially observed Markov process with static parameters:
//!
//! ```text
//! θ   ~ p(θ)
//! x_0 ~ p(x_0)
//! x_t ~ p(x_t | x_{t-D..t-1}, θ)
//! y_t ~ p(y_t | x_t, θ)
//! ```
//!
//! Models work on plain `f64` slices so the filters can call them from
//! pre-allocated storage. Discrete quantities (SLAM map labels, grid
//! locations) are carried as exactly representable integer codes.

mod likelihood;
mod rng;
mod simulate;

pub use likelihood::{make_param_likelihood, LogTarget, ParamLikelihood};
pub use rng::RngStream;
pub use simulate::{simulate, Trajectory};

use std::ops::Deref;

use crate::error::{Error, Result};

/// Whether the static parameters are real-valued or categorical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Continuous,
    Discrete,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::Continuous => "continuous",
            ParamKind::Discrete => "discrete",
        }
    }
}

/// Shape of the parameter space.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamSpace {
    Continuous { dim: usize },
    /// One categorical variable per entry, with values `0..cardinality`.
    Discrete { cardinalities: Vec<usize> },
}

impl ParamSpace {
    pub fn dim(&self) -> usize {
        match self {
            ParamSpace::Continuous { dim } => *dim,
            ParamSpace::Discrete { cardinalities } => cardinalities.len(),
        }
    }

    pub fn kind(&self) -> ParamKind {
        match self {
            ParamSpace::Continuous { .. } => ParamKind::Continuous,
            ParamSpace::Discrete { .. } => ParamKind::Discrete,
        }
    }

    pub fn cardinalities(&self) -> Option<&[usize]> {
        match self {
            ParamSpace::Continuous { .. } => None,
            ParamSpace::Discrete { cardinalities } => Some(cardinalities),
        }
    }

    /// Checks a raw parameter slice against this space.
    pub fn validate(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "parameter",
                expected: self.dim(),
                got: values.len(),
            });
        }
        match self {
            ParamSpace::Continuous { .. } => {
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::InvalidParam(format!("non-finite entry {v}")));
                }
            }
            ParamSpace::Discrete { cardinalities } => {
                for (i, (&v, &card)) in values.iter().zip(cardinalities).enumerate() {
                    if v.fract() != 0.0 || v < 0.0 || v >= card as f64 {
                        return Err(Error::InvalidParam(format!(
                            "entry {i} = {v} is not a code in 0..{card}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A static parameter value θ.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    kind: ParamKind,
}

impl ParamVector {
    pub fn continuous(values: Vec<f64>) -> Self {
        Self {
            values,
            kind: ParamKind::Continuous,
        }
    }

    pub fn discrete(codes: &[usize]) -> Self {
        Self {
            values: codes.iter().map(|&c| c as f64).collect(),
            kind: ParamKind::Discrete,
        }
    }

    /// Builds a vector for `space`, checking dimension and code ranges.
    pub fn in_space(space: &ParamSpace, values: Vec<f64>) -> Result<Self> {
        space.validate(&values)?;
        Ok(Self {
            values,
            kind: space.kind(),
        })
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    /// Integer codes of a discrete vector.
    pub fn codes(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().map(|&v| v as usize)
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

real_vector!(
    /// Latent state x_t.
    StateVector
);
real_vector!(
    /// Observation y_t.
    ObsVector
);

/// Parameter, state and observation dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub param: usize,
    pub state: usize,
    pub obs: usize,
}

/// A dynamic model with static parameters.
///
/// State windows are passed as one contiguous slice of `markov_order() *
/// dims().state` values, oldest state first. All log-densities return a
/// finite value or `f64::NEG_INFINITY`, never NaN.
///
/// The time index `t` is the index of the state being generated; models with
/// exogenous inputs (the SLAM action sequence) use it to look them up.
pub trait DynamicModel: Send + Sync {
    fn name(&self) -> &str;

    fn dims(&self) -> Dims;

    fn param_space(&self) -> &ParamSpace;

    fn markov_order(&self) -> usize {
        1
    }

    fn sample_param_prior(&self, rng: &mut RngStream, out: &mut [f64]);

    fn param_prior_logdensity(&self, theta: &[f64]) -> f64;

    /// Mean and row-major covariance of the parameter prior when it is
    /// Gaussian. Used to initialise Gaussian projections without sampling.
    fn param_prior_gaussian(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// Per-dimension prior tables when the prior is a product of
    /// categoricals.
    fn param_prior_tables(&self) -> Option<Vec<Vec<f64>>> {
        None
    }

    fn sample_initial_state(&self, rng: &mut RngStream, theta: &[f64], out: &mut [f64]);

    fn initial_state_logdensity(&self, x: &[f64], theta: &[f64]) -> f64;

    fn sample_transition(
        &self,
        rng: &mut RngStream,
        t: usize,
        window: &[f64],
        theta: &[f64],
        out: &mut [f64],
    );

    fn transition_logdensity(&self, t: usize, x_new: &[f64], window: &[f64], theta: &[f64]) -> f64;

    fn sample_observation(&self, rng: &mut RngStream, t: usize, x: &[f64], theta: &[f64], out: &mut [f64]);

    fn observation_logdensity(&self, t: usize, y: &[f64], x: &[f64], theta: &[f64]) -> f64;

    /// False when p(x_0) does not involve θ; then t_0 carries no initial
    /// state term.
    fn initial_state_depends_on_param(&self) -> bool {
        false
    }

    /// False when p(x_t | window, θ) is constant in θ.
    fn transition_depends_on_param(&self) -> bool {
        true
    }

    /// False when p(y_t | x_t, θ) is constant in θ.
    fn observation_depends_on_param(&self) -> bool {
        true
    }
}

/// Checks that `len` matches `expected`, reporting `what` otherwise.
pub(crate) fn check_len(what: &'static str, expected: usize, len: usize) -> Result<()> {
    if expected == len {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got: len,
        })
    }
}

/// log N(x; mean, sd²) for a scalar.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - HALF_LN_2PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_space_rejects_out_of_range_codes() {
        let space = ParamSpace::Discrete {
            cardinalities: vec![2, 3],
        };
        assert!(space.validate(&[1.0, 2.0]).is_ok());
        assert!(space.validate(&[2.0, 0.0]).is_err());
        assert!(space.validate(&[0.5, 0.0]).is_err());
        assert!(space.validate(&[0.0]).is_err());
    }

    #[test]
    fn continuous_space_rejects_nan() {
        let space = ParamSpace::Continuous { dim: 1 };
        assert!(space.validate(&[f64::NAN]).is_err());
        assert!(ParamVector::in_space(&space, vec![0.3]).is_ok());
    }

    #[test]
    fn normal_logpdf_matches_closed_form() {
        let v = normal_logpdf(0.2, 0.2, 0.5);
        let expected = -(0.5f64).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((v - expected).abs() < 1e-15);
    }
}

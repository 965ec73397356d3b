use super::{check_len, DynamicModel};
use crate::error::{Error, Result};

/// A log-density-like function of θ that projections can be fitted against.
pub trait LogTarget {
    fn log_eval(&self, theta: &[f64]) -> f64;
}

impl<F> LogTarget for F
where
    F: Fn(&[f64]) -> f64,
{
    fn log_eval(&self, theta: &[f64]) -> f64 {
        self(theta)
    }
}

/// The per-step parameter factor log t_k(θ) for fixed states and observation.
///
/// For k = 0 it is `log p(θ) + log p(y_0 | x_0, θ)` (plus `log p(x_0 | θ)` when
/// the state prior involves θ); for k ≥ 1 it is
/// `log p(y_k | x_k, θ) + log p(x_k | window, θ)`.
#[derive(Clone, Copy)]
pub struct ParamLikelihood<'a, M: DynamicModel + ?Sized> {
    model: &'a M,
    t: usize,
    x_new: &'a [f64],
    window: &'a [f64],
    y: &'a [f64],
    prior: bool,
    initial_state: bool,
    transition: bool,
    observation: bool,
}

/// Builds the parameter factor for step `k`.
///
/// The window must hold `markov_order()` states for k ≥ 1 and be empty for
/// k = 0.
pub fn make_param_likelihood<'a, M: DynamicModel + ?Sized>(
    model: &'a M,
    k: usize,
    x_new: &'a [f64],
    window: &'a [f64],
    y: &'a [f64],
) -> Result<ParamLikelihood<'a, M>> {
    let dims = model.dims();
    check_len("state", dims.state, x_new.len())?;
    check_len("observation", dims.obs, y.len())?;
    if k == 0 {
        if !window.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "state window at k=0",
                expected: 0,
                got: window.len(),
            });
        }
    } else {
        check_len("state window", model.markov_order() * dims.state, window.len())?;
    }
    Ok(ParamLikelihood {
        model,
        t: k,
        x_new,
        window,
        y,
        prior: k == 0,
        initial_state: k == 0 && model.initial_state_depends_on_param(),
        transition: k > 0,
        observation: true,
    })
}

impl<'a, M: DynamicModel + ?Sized> ParamLikelihood<'a, M> {
    /// Drops the prior term at k = 0, for approximations that already start
    /// from the prior.
    pub fn without_prior(mut self) -> Self {
        self.prior = false;
        self
    }

    /// Drops the factors the model declares constant in θ. The result differs
    /// from the full factor by a θ-independent shift, which cancels in every
    /// normalised moment and in mixture weight ratios.
    pub fn without_param_free_terms(mut self) -> Self {
        if !self.model.transition_depends_on_param() {
            self.transition = false;
        }
        if !self.model.observation_depends_on_param() {
            self.observation = false;
        }
        self
    }

    /// True when no term is left, so the factor is constant in θ.
    pub fn is_constant(&self) -> bool {
        !(self.prior || self.initial_state || self.transition || self.observation)
    }

    pub fn step(&self) -> usize {
        self.t
    }
}

impl<M: DynamicModel + ?Sized> LogTarget for ParamLikelihood<'_, M> {
    fn log_eval(&self, theta: &[f64]) -> f64 {
        let mut acc = 0.0;
        if self.prior {
            acc += self.model.param_prior_logdensity(theta);
        }
        if self.initial_state {
            acc += self.model.initial_state_logdensity(self.x_new, theta);
        }
        if self.transition {
            acc += self
                .model
                .transition_logdensity(self.t, self.x_new, self.window, theta);
        }
        if self.observation {
            acc += self.model.observation_logdensity(self.t, self.y, self.x_new, theta);
        }
        if acc.is_nan() {
            f64::NEG_INFINITY
        } else {
            acc
        }
    }
}

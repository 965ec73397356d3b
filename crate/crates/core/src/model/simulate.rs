use super::{DynamicModel, ObsVector, ParamVector, RngStream, StateVector};
use crate::error::Result;

/// A simulated state/observation path of length `T + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<StateVector>,
    pub observations: Vec<ObsVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Draws `x_{0:T}` and `y_{0:T}` from the model with θ held fixed.
///
/// For Markov order D > 1 the missing history before x_0 is filled with
/// copies of x_0.
pub fn simulate<M: DynamicModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    steps: usize,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    model.param_space().validate(theta)?;
    let dims = model.dims();
    let order = model.markov_order();
    let d = dims.state;

    let mut states = Vec::with_capacity(steps + 1);
    let mut observations = Vec::with_capacity(steps + 1);
    let mut window = vec![0.0; order * d];

    let mut x = vec![0.0; d];
    model.sample_initial_state(rng, theta, &mut x);
    for slot in window.chunks_exact_mut(d) {
        slot.copy_from_slice(&x);
    }
    let mut y = vec![0.0; dims.obs];
    model.sample_observation(rng, 0, &x, theta, &mut y);
    states.push(StateVector(x.clone()));
    observations.push(ObsVector(y.clone()));

    for t in 1..=steps {
        model.sample_transition(rng, t, &window, theta, &mut x);
        model.sample_observation(rng, t, &x, theta, &mut y);
        window.rotate_left(d);
        let last = window.len() - d;
        window[last..].copy_from_slice(&x);
        states.push(StateVector(x.clone()));
        observations.push(ObsVector(y.clone()));
    }

    Ok(Trajectory {
        states,
        observations,
    })
}

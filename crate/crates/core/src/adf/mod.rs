//! Assumed-density projections of the per-particle parameter posterior.
//!
//! Given the previous approximation `q_{k-1}(θ)` and the new factor
//! `t_k(θ)`, an update computes the member of the family closest in KL to
//! `t_k(θ) q_{k-1}(θ) / Z`. For the Gaussian families that is moment
//! matching, for the factorized discrete family it is marginal matching.
//! The integrals are replaced by weighted sums over a [`MomentScheme`].
//!
//! Filters keep approximations as flat `f64` slots inside pre-allocated slabs
//! and go through [`ApproxLayout`]; the value types ([`GaussianApprox`],
//! [`MixtureApprox`], [`FactorizedDiscreteApprox`]) and the free functions
//! below use the same kernels.

mod discrete;
mod gaussian;
pub(crate) mod linalg;
mod mixture;
mod quadrature;
mod scheme;

pub use discrete::FactorizedDiscreteApprox;
pub use gaussian::GaussianApprox;
pub use mixture::MixtureApprox;
pub use quadrature::{
    gauss_hermite_points, gauss_hermite_points_with_budget, unscented_points, GaussHermiteRule, SigmaPoints,
    DEFAULT_POINT_BUDGET,
};
pub use scheme::{MomentScheme, MAX_TENSOR_GRID_DIM};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LogTarget, ParamKind, ParamSpace, ParamVector, RngStream};

/// Updates whose normaliser falls below `exp(LOG_Z_FLOOR)` keep the previous
/// approximation.
pub const LOG_Z_FLOOR: f64 = -700.0;

/// Mixture components below this weight are dropped.
pub const MIXTURE_WEIGHT_FLOOR: f64 = 1e-12;

/// Whether an update produced a new approximation or kept the old one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateOutcome {
    Updated,
    /// The normaliser vanished (or the matched moments were unusable); the
    /// previous approximation was carried over unchanged.
    Degenerate,
}

/// An approximation together with how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Updated<Q> {
    pub approx: Q,
    pub outcome: UpdateOutcome,
}

/// The approximating family used for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproxFamily {
    Gaussian,
    Mixture { components: usize },
    FactorizedDiscrete,
}

impl ApproxFamily {
    pub fn supports(&self, kind: ParamKind) -> bool {
        matches!(
            (self, kind),
            (ApproxFamily::Gaussian | ApproxFamily::Mixture { .. }, ParamKind::Continuous)
                | (ApproxFamily::FactorizedDiscrete, ParamKind::Discrete)
        )
    }

    /// The natural family for a parameter space: Gaussian for continuous,
    /// factorized tables for discrete.
    pub fn default_for(space: &ParamSpace) -> Self {
        match space.kind() {
            ParamKind::Continuous => ApproxFamily::Gaussian,
            ParamKind::Discrete => ApproxFamily::FactorizedDiscrete,
        }
    }
}

/// A parameter posterior approximation q(θ).
#[derive(Clone, Debug, PartialEq)]
pub enum ParamApprox {
    Gaussian(GaussianApprox),
    Mixture(MixtureApprox),
    Discrete(FactorizedDiscreteApprox),
}

impl ParamApprox {
    pub fn dim(&self) -> usize {
        match self {
            ParamApprox::Gaussian(g) => g.dim(),
            ParamApprox::Mixture(m) => m.dim(),
            ParamApprox::Discrete(d) => d.dim(),
        }
    }

    pub fn family(&self) -> ApproxFamily {
        match self {
            ParamApprox::Gaussian(_) => ApproxFamily::Gaussian,
            ParamApprox::Mixture(m) => ApproxFamily::Mixture { components: m.len() },
            ParamApprox::Discrete(_) => ApproxFamily::FactorizedDiscrete,
        }
    }

    fn space(&self) -> ParamSpace {
        match self {
            ParamApprox::Discrete(d) => ParamSpace::Discrete {
                cardinalities: d.cardinalities(),
            },
            other => ParamSpace::Continuous { dim: other.dim() },
        }
    }

    /// Mean of a continuous approximation.
    pub fn mean(&self) -> Option<Vec<f64>> {
        match self {
            ParamApprox::Gaussian(g) => Some(g.mean().to_vec()),
            ParamApprox::Mixture(m) => Some(m.mean()),
            ParamApprox::Discrete(_) => None,
        }
    }
}

/// Flat-slot layout of one approximation family over one parameter space.
#[derive(Clone, Debug)]
pub struct ApproxLayout {
    family: ApproxFamily,
    dim: usize,
    cards: Vec<usize>,
    offsets: Vec<usize>,
    slot_len: usize,
}

impl ApproxLayout {
    pub fn new(family: ApproxFamily, space: &ParamSpace) -> Result<Self> {
        if !family.supports(space.kind()) {
            return Err(Error::UnsupportedParamKind {
                algorithm: match family {
                    ApproxFamily::Gaussian => "gaussian projection",
                    ApproxFamily::Mixture { .. } => "mixture projection",
                    ApproxFamily::FactorizedDiscrete => "factorized discrete projection",
                },
                kind: space.kind().as_str(),
            });
        }
        let dim = space.dim();
        if dim == 0 {
            return Err(Error::InvalidApprox("parameter dimension is zero".into()));
        }
        let (cards, offsets, slot_len) = match family {
            ApproxFamily::Gaussian => (vec![], vec![], gaussian::slot_len(dim)),
            ApproxFamily::Mixture { components } => {
                if components == 0 {
                    return Err(Error::Config("mixture needs at least one component".into()));
                }
                (vec![], vec![], mixture::slot_len(dim, components))
            }
            ApproxFamily::FactorizedDiscrete => {
                let cards = space.cardinalities().unwrap_or_default().to_vec();
                let mut offsets = Vec::with_capacity(cards.len());
                let mut at = 0;
                for &c in &cards {
                    offsets.push(at);
                    at += c;
                }
                (cards, offsets, at)
            }
        };
        Ok(Self {
            family,
            dim,
            cards,
            offsets,
            slot_len,
        })
    }

    pub fn family(&self) -> ApproxFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slot_len(&self) -> usize {
        self.slot_len
    }

    /// Writes `q` into `slot`, failing when it does not fit this layout.
    pub fn write(&self, q: &ParamApprox, slot: &mut [f64]) -> Result<()> {
        match (self.family, q) {
            (ApproxFamily::Gaussian, ParamApprox::Gaussian(g)) if g.dim() == self.dim => {
                if !gaussian::write_slot(g.mean(), g.cov(), slot, self.dim) {
                    return Err(Error::SingularCovariance);
                }
            }
            (ApproxFamily::Mixture { components }, ParamApprox::Mixture(m))
                if m.dim() == self.dim && m.len() == components =>
            {
                if !mixture::write_slot(m, slot, self.dim) {
                    return Err(Error::SingularCovariance);
                }
            }
            (ApproxFamily::FactorizedDiscrete, ParamApprox::Discrete(d)) if d.cardinalities() == self.cards => {
                discrete::write_slot(d, slot);
            }
            _ => {
                return Err(Error::InvalidApprox(format!(
                    "{:?} does not fit layout {:?}",
                    q.family(),
                    self.family
                )))
            }
        }
        Ok(())
    }

    pub fn read(&self, slot: &[f64]) -> ParamApprox {
        match self.family {
            ApproxFamily::Gaussian => ParamApprox::Gaussian(gaussian::read_slot(slot, self.dim)),
            ApproxFamily::Mixture { components } => {
                ParamApprox::Mixture(mixture::read_slot(slot, self.dim, components))
            }
            ApproxFamily::FactorizedDiscrete => {
                ParamApprox::Discrete(discrete::read_slot(slot, &self.cards, &self.offsets))
            }
        }
    }

    /// Draws θ ~ q into `out`.
    pub fn sample(&self, slot: &[f64], rng: &mut RngStream, ws: &mut UpdateWorkspace, out: &mut [f64]) {
        match self.family {
            ApproxFamily::Gaussian => gaussian::sample_slot(slot, self.dim, rng, &mut ws.z, out),
            ApproxFamily::Mixture { components } => {
                mixture::sample_slot(slot, self.dim, components, rng, &mut ws.z, out)
            }
            ApproxFamily::FactorizedDiscrete => discrete::sample_slot(slot, &self.cards, &self.offsets, rng, out),
        }
    }

    /// Projects `t(θ)·q_prev(θ)` back onto the family, writing into `next`.
    pub fn update<T: LogTarget + ?Sized>(
        &self,
        prev: &[f64],
        next: &mut [f64],
        target: &T,
        ws: &mut UpdateWorkspace,
        rng: &mut RngStream,
    ) -> UpdateOutcome {
        match self.family {
            ApproxFamily::Gaussian => match gaussian::update_slot(prev, next, self.dim, target, ws, rng) {
                gaussian::SlotUpdate::Updated(_) => UpdateOutcome::Updated,
                _ => UpdateOutcome::Degenerate,
            },
            ApproxFamily::Mixture { components } => {
                mixture::update_slot(prev, next, self.dim, components, target, ws, rng)
            }
            ApproxFamily::FactorizedDiscrete => {
                discrete::update_slot(prev, next, &self.cards, &self.offsets, target, ws, rng)
            }
        }
    }

    /// Mean and covariance (law of total variance for mixtures) of a
    /// continuous slot, accumulated as `acc_mean += w·μ`,
    /// `acc_second += w·(Σ + μμᵀ)`.
    pub fn accumulate_moments(&self, slot: &[f64], w: f64, acc_mean: &mut [f64], acc_second: &mut [f64]) {
        let p = self.dim;
        let mut add = |weight: f64, g: &[f64]| {
            let (mean, cov, _) = gaussian::slot_parts(g, p);
            for i in 0..p {
                acc_mean[i] += weight * mean[i];
                for j in 0..p {
                    acc_second[i * p + j] += weight * (cov[i * p + j] + mean[i] * mean[j]);
                }
            }
        };
        match self.family {
            ApproxFamily::Gaussian => add(w, slot),
            ApproxFamily::Mixture { components } => {
                let g = gaussian::slot_len(p);
                for m in 0..components {
                    let a = slot[m];
                    if a > 0.0 {
                        add(w * a, &slot[components + m * g..components + (m + 1) * g]);
                    }
                }
            }
            ApproxFamily::FactorizedDiscrete => {}
        }
    }

    /// Calls `f(weight, mean)` for every active Gaussian component.
    pub fn for_each_component(&self, slot: &[f64], mut f: impl FnMut(f64, &[f64])) {
        let p = self.dim;
        match self.family {
            ApproxFamily::Gaussian => f(1.0, &slot[..p]),
            ApproxFamily::Mixture { components } => {
                let g = gaussian::slot_len(p);
                for m in 0..components {
                    if slot[m] > 0.0 {
                        let at = components + m * g;
                        f(slot[m], &slot[at..at + p]);
                    }
                }
            }
            ApproxFamily::FactorizedDiscrete => {}
        }
    }

    /// Table `i` of a discrete slot.
    pub fn table<'s>(&self, slot: &'s [f64], i: usize) -> &'s [f64] {
        let o = self.offsets[i];
        &slot[o..o + self.cards[i]]
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    /// Scratch space sized for this layout and scheme.
    pub fn workspace(&self, scheme: MomentScheme, budget: usize) -> Result<UpdateWorkspace> {
        UpdateWorkspace::new(self, scheme, budget)
    }
}

/// Pre-sized scratch buffers for sampling and updating one approximation at
/// a time. Reusing one workspace keeps the update path allocation-free.
#[derive(Clone, Debug)]
pub struct UpdateWorkspace {
    scheme: MomentScheme,
    rule: Option<GaussHermiteRule>,
    points: SigmaPoints,
    log_t: Vec<f64>,
    z: Vec<f64>,
    mc_scratch: Vec<f64>,
    tilt: Vec<f64>,
    counter: Vec<usize>,
    theta: Vec<f64>,
    codes: Vec<usize>,
    log_alpha: Vec<f64>,
    discrete_samples: usize,
}

impl UpdateWorkspace {
    pub fn new(layout: &ApproxLayout, scheme: MomentScheme, budget: usize) -> Result<Self> {
        scheme.validate()?;
        let p = layout.dim;
        let (scheme, n_points, discrete_samples) = match layout.family {
            ApproxFamily::FactorizedDiscrete => (scheme, 0, scheme.samples()),
            _ => {
                let resolved = scheme.resolve(p, budget);
                let n = resolved.point_count(p).ok_or(Error::PointBudget {
                    points: usize::MAX,
                    budget,
                })?;
                (resolved, n, 0)
            }
        };
        let rule = match scheme {
            MomentScheme::GaussHermite { points } if layout.family != ApproxFamily::FactorizedDiscrete => {
                Some(GaussHermiteRule::new(points))
            }
            _ => None,
        };
        let components = match layout.family {
            ApproxFamily::Mixture { components } => components,
            _ => 1,
        };
        Ok(Self {
            scheme,
            rule,
            points: SigmaPoints::with_capacity(p, n_points),
            log_t: Vec::with_capacity(n_points.max(discrete_samples)),
            z: vec![0.0; p],
            mc_scratch: vec![0.0; p + 2 * p * p],
            tilt: Vec::with_capacity(n_points),
            counter: vec![0; p],
            theta: vec![0.0; p],
            codes: Vec::with_capacity(discrete_samples * p),
            log_alpha: Vec::with_capacity(components),
            discrete_samples,
        })
    }

    /// The scheme after dimension/budget fallback.
    pub fn scheme(&self) -> MomentScheme {
        self.scheme
    }

    /// The evaluation points used by the most recent Gaussian update.
    pub fn last_points(&self) -> &SigmaPoints {
        &self.points
    }

    fn fill_points(&mut self, mean: &[f64], chol: &[f64], rng: &mut RngStream) {
        match self.scheme {
            MomentScheme::Unscented => self.points.fill_unscented(mean, chol),
            MomentScheme::GaussHermite { .. } => {
                let rule = self.rule.as_ref().expect("rule built for gauss-hermite");
                self.points
                    .fill_gauss_hermite(mean, chol, rule, &mut self.counter, &mut self.z)
            }
            MomentScheme::MonteCarlo { samples } => {
                self.points.fill_monte_carlo(mean, chol, samples, rng, &mut self.z, &mut self.mc_scratch)
            }
        }
    }
}

fn slot_for(q: &ParamApprox) -> Result<(ApproxLayout, Vec<f64>)> {
    let layout = ApproxLayout::new(q.family(), &q.space())?;
    let mut slot = vec![0.0; layout.slot_len()];
    layout.write(q, &mut slot)?;
    Ok((layout, slot))
}

/// Draws θ ~ q. Mixtures pick a component by weight; discrete tables are
/// sampled independently per dimension.
pub fn approx_sample(q: &ParamApprox, rng: &mut RngStream) -> Result<ParamVector> {
    let (layout, slot) = slot_for(q)?;
    let mut ws = layout.workspace(MomentScheme::Unscented, DEFAULT_POINT_BUDGET)?;
    let mut out = vec![0.0; layout.dim()];
    layout.sample(&slot, rng, &mut ws, &mut out);
    Ok(match q {
        ParamApprox::Discrete(_) => ParamVector::discrete(&out.iter().map(|&v| v as usize).collect::<Vec<_>>()),
        _ => ParamVector::continuous(out),
    })
}

fn update_value<T: LogTarget + ?Sized>(
    q: &ParamApprox,
    target: &T,
    scheme: MomentScheme,
    rng: &mut RngStream,
) -> Result<Updated<ParamApprox>> {
    let (layout, prev) = slot_for(q)?;
    let mut ws = layout.workspace(scheme, DEFAULT_POINT_BUDGET)?;
    let mut next = vec![0.0; layout.slot_len()];
    let outcome = layout.update(&prev, &mut next, target, &mut ws, rng);
    Ok(Updated {
        approx: layout.read(&next),
        outcome,
    })
}

/// Moment-matched Gaussian projection of `t(θ)·N(θ; μ, Σ)`.
pub fn gaussian_update<T: LogTarget + ?Sized>(
    q_prev: &GaussianApprox,
    target: &T,
    scheme: MomentScheme,
    rng: &mut RngStream,
) -> Result<Updated<GaussianApprox>> {
    let up = update_value(&ParamApprox::Gaussian(q_prev.clone()), target, scheme, rng)?;
    match up.approx {
        ParamApprox::Gaussian(g) => Ok(Updated {
            approx: g,
            outcome: up.outcome,
        }),
        _ => unreachable!("gaussian layout reads back a gaussian"),
    }
}

/// Component-wise moment matching with weights re-scaled by how well each
/// component explains the new factor.
pub fn mixture_update<T: LogTarget + ?Sized>(
    q_prev: &MixtureApprox,
    target: &T,
    scheme: MomentScheme,
    rng: &mut RngStream,
) -> Result<Updated<MixtureApprox>> {
    let up = update_value(&ParamApprox::Mixture(q_prev.clone()), target, scheme, rng)?;
    match up.approx {
        ParamApprox::Mixture(m) => Ok(Updated {
            approx: m,
            outcome: up.outcome,
        }),
        _ => unreachable!("mixture layout reads back a mixture"),
    }
}

/// Marginal matching with `samples` joint draws, or exact enumeration when
/// the joint has at most `samples` configurations.
pub fn discrete_update<T: LogTarget + ?Sized>(
    q_prev: &FactorizedDiscreteApprox,
    target: &T,
    samples: usize,
    rng: &mut RngStream,
) -> Result<Updated<FactorizedDiscreteApprox>> {
    let up = update_value(
        &ParamApprox::Discrete(q_prev.clone()),
        target,
        MomentScheme::MonteCarlo { samples },
        rng,
    )?;
    match up.approx {
        ParamApprox::Discrete(d) => Ok(Updated {
            approx: d,
            outcome: up.outcome,
        }),
        _ => unreachable!("discrete layout reads back tables"),
    }
}

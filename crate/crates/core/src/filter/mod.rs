//! Particle filters over states with static parameters.
//!
//! [`Filter`] runs one of three algorithms over a shared, pre-allocated
//! [`ParticleStore`]:
//!
//! - [`Algorithm::Api`]: every particle carries an assumed-density
//!   approximation q(θ). Each step θ is drawn fresh from q, the state is
//!   propagated with the transition density, the particle is weighted by the
//!   observation density, and after resampling q is moment-matched against
//!   the new transition and observation factors, once per distinct ancestor.
//! - [`Algorithm::Pf`]: the bootstrap filter; θ is drawn from the prior once
//!   and only resampled afterwards.
//! - [`Algorithm::LiuWest`]: the bootstrap filter with kernel-shrinkage
//!   jitter on θ before every propagation.
//!
//! [`pmmh_run`] wraps the bootstrap filter as a likelihood estimator inside
//! Metropolis-Hastings.

mod pmmh;
mod resample;
mod store;
mod summary;

pub use pmmh::{pmmh_run, PmmhConfig, PmmhResult};
pub use resample::{ess, log_mean_exp, multinomial_resample, systematic_resample, ResampleScheme};
pub use store::{ParticleStore, StoreCounters};
pub use summary::{fuse_param_posterior, ParamSummary};

use std::time::{Duration, Instant};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::adf::{linalg, ApproxFamily, ApproxLayout, MixtureApprox, MomentScheme, ParamApprox, UpdateWorkspace, DEFAULT_POINT_BUDGET};
use crate::adf::{FactorizedDiscreteApprox, GaussianApprox};
use crate::error::{Error, Result};
use crate::model::{check_len, make_param_likelihood, DynamicModel, ObsVector, ParamKind, RngStream};
use resample::{resample_into, ResampleScratch};

const STREAM_INIT: u64 = 0;
const STREAM_PROPAGATE: u64 = 1;
const STREAM_UPDATE: u64 = 2;
const STREAM_RESAMPLE: u64 = 3;
const STREAM_PERTURB: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Api,
    Pf,
    LiuWest,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Api => "api",
            Algorithm::Pf => "pf",
            Algorithm::LiuWest => "liu-west",
        }
    }
}

/// Where the approximation update sits relative to resampling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    /// Resample first, then update once per distinct ancestor.
    #[default]
    ResampleFirst,
    /// Update every particle, then resample.
    UpdateFirst,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub particles: usize,
    pub scheme: MomentScheme,
    /// `None` picks Gaussian for continuous and tables for discrete θ.
    pub family: Option<ApproxFamily>,
    pub resample: ResampleScheme,
    pub update_order: UpdateOrder,
    /// Liu-West shrinkage `a`.
    pub shrinkage: f64,
    pub point_budget: usize,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            particles: 1000,
            scheme: MomentScheme::default(),
            family: None,
            resample: ResampleScheme::Multinomial,
            update_order: UpdateOrder::ResampleFirst,
            shrinkage: 0.98,
            point_budget: DEFAULT_POINT_BUDGET,
            seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn new(particles: usize, seed: u64) -> Self {
        Self {
            particles,
            seed,
            ..Self::default()
        }
    }

    pub fn with_scheme(mut self, scheme: MomentScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_family(mut self, family: ApproxFamily) -> Self {
        self.family = Some(family);
        self
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub t: usize,
    /// ESS of the weights before resampling.
    pub ess: f64,
    /// `log p̂(y_t | y_{0:t-1})`, the log mean weight.
    pub log_evidence: f64,
    pub distinct_ancestors: usize,
    pub adf_updates: usize,
    pub degenerate_updates: usize,
    pub payload_reallocs: u64,
}

/// A running filter. Construct once, call [`initialize`](Self::initialize)
/// with `y_0`, then [`step`](Self::step) with `y_1, y_2, …`.
pub struct Filter<'m, M: DynamicModel + ?Sized> {
    model: &'m M,
    algorithm: Algorithm,
    cfg: FilterConfig,
    n: usize,
    p: usize,
    store: ParticleStore,
    layout: Option<ApproxLayout>,
    ws: Option<UpdateWorkspace>,
    prior_slot: Vec<f64>,
    fixed_param: Option<Vec<f64>>,
    rng_init: RngStream,
    rng_prop: RngStream,
    rng_update: RngStream,
    rng_resample: RngStream,
    rng_perturb: RngStream,
    log_w: Vec<f64>,
    ancestors: Vec<usize>,
    scratch: ResampleScratch,
    theta: Vec<f64>,
    x_buf: Vec<f64>,
    window: Vec<f64>,
    lw_mean: Vec<f64>,
    lw_cov: Vec<f64>,
    lw_chol: Vec<f64>,
    z: Vec<f64>,
    state_mean: Vec<f64>,
    log_likelihood: f64,
    t: usize,
}

impl<'m, M: DynamicModel + ?Sized> Filter<'m, M> {
    pub fn new(model: &'m M, algorithm: Algorithm, cfg: FilterConfig) -> Result<Self> {
        if cfg.particles == 0 {
            return Err(Error::Config("particle count must be at least 1".into()));
        }
        let dims = model.dims();
        let space = model.param_space();
        let (p, d, order) = (dims.param, dims.state, model.markov_order());
        if order == 0 {
            return Err(Error::Model("Markov order must be at least 1".into()));
        }
        if algorithm == Algorithm::LiuWest {
            if space.kind() == ParamKind::Discrete {
                return Err(Error::UnsupportedParamKind {
                    algorithm: "liu-west",
                    kind: "discrete",
                });
            }
            if !(0.0..=1.0).contains(&cfg.shrinkage) {
                return Err(Error::Config(format!("shrinkage {} outside [0, 1]", cfg.shrinkage)));
            }
        }
        let (layout, ws, prior_slot) = if algorithm == Algorithm::Api && p > 0 {
            let family = cfg.family.unwrap_or_else(|| ApproxFamily::default_for(space));
            let layout = ApproxLayout::new(family, space)?;
            let ws = layout.workspace(cfg.scheme, cfg.point_budget)?;
            let mut slot = vec![0.0; layout.slot_len()];
            match family {
                ApproxFamily::Gaussian | ApproxFamily::Mixture { .. } => {
                    let (mean, cov) = model.param_prior_gaussian().ok_or_else(|| {
                        Error::Model(format!("{} has no Gaussian parameter prior", model.name()))
                    })?;
                    let g = GaussianApprox::new(mean, cov)?;
                    if family == ApproxFamily::Gaussian {
                        layout.write(&ParamApprox::Gaussian(g), &mut slot)?;
                    } else {
                        // only the template; components are redrawn per particle
                        layout.write(
                            &ParamApprox::Mixture(MixtureApprox::new(
                                vec![1.0 / layout_components(family) as f64; layout_components(family)],
                                vec![g; layout_components(family)],
                            )?),
                            &mut slot,
                        )?;
                    }
                }
                ApproxFamily::FactorizedDiscrete => {
                    let tables = model.param_prior_tables().ok_or_else(|| {
                        Error::Model(format!("{} has no factorized parameter prior", model.name()))
                    })?;
                    layout.write(&ParamApprox::Discrete(FactorizedDiscreteApprox::new(tables)?), &mut slot)?;
                }
            }
            (Some(layout), Some(ws), slot)
        } else {
            (None, None, vec![])
        };
        let n = cfg.particles;
        let approx_len = layout.as_ref().map_or(0, |l| l.slot_len());
        let param_slab = if algorithm == Algorithm::Api { 0 } else { p };
        let seed = cfg.seed;
        Ok(Self {
            model,
            algorithm,
            n,
            p,
            store: ParticleStore::new(n, order, d, param_slab, approx_len),
            layout,
            ws,
            prior_slot,
            fixed_param: None,
            rng_init: RngStream::new(seed, STREAM_INIT),
            rng_prop: RngStream::new(seed, STREAM_PROPAGATE),
            rng_update: RngStream::new(seed, STREAM_UPDATE),
            rng_resample: RngStream::new(seed, STREAM_RESAMPLE),
            rng_perturb: RngStream::new(seed, STREAM_PERTURB),
            log_w: vec![0.0; n],
            ancestors: vec![0; n],
            scratch: ResampleScratch::new(n),
            theta: vec![0.0; p],
            x_buf: vec![0.0; d],
            window: vec![0.0; order * d],
            lw_mean: vec![0.0; p],
            lw_cov: vec![0.0; p * p],
            lw_chol: vec![0.0; p * p],
            z: vec![0.0; p],
            state_mean: vec![0.0; d],
            log_likelihood: 0.0,
            t: 0,
            cfg,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Index of the next observation to assimilate.
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn store(&self) -> &ParticleStore {
        &self.store
    }

    /// The moment scheme actually used after dimension/budget fallback.
    pub fn effective_scheme(&self) -> Option<MomentScheme> {
        self.ws.as_ref().map(|w| w.scheme())
    }

    /// Running `log p̂(y_{0:t})`.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Weighted mean of the most recent states, before resampling.
    pub fn state_mean(&self) -> &[f64] {
        &self.state_mean
    }

    /// Holds θ fixed at `theta` for every particle (bootstrap/Liu-West), or
    /// returns to prior draws with `None`. Takes effect at the next
    /// [`initialize`](Self::initialize).
    pub fn set_fixed_param(&mut self, theta: Option<&[f64]>) -> Result<()> {
        match theta {
            Some(th) => {
                if self.algorithm == Algorithm::Api {
                    return Err(Error::Config("API draws θ from its approximations".into()));
                }
                check_len("parameter", self.p, th.len())?;
                match &mut self.fixed_param {
                    Some(buf) => buf.copy_from_slice(th),
                    None => self.fixed_param = Some(th.to_vec()),
                }
            }
            None => self.fixed_param = None,
        }
        Ok(())
    }

    /// Reorders the particles between steps; particle `k` becomes the
    /// former particle `perm[k]`.
    pub fn permute_particles(&mut self, perm: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n || !perm.iter().all(|&a| a < self.n && !std::mem::replace(&mut seen[a], true)) {
            return Err(Error::Config("not a permutation of the particle indices".into()));
        }
        self.store.permute(perm);
        Ok(())
    }

    /// Restarts every random stream from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.cfg.seed = seed;
        self.rng_init = RngStream::new(seed, STREAM_INIT);
        self.rng_prop = RngStream::new(seed, STREAM_PROPAGATE);
        self.rng_update = RngStream::new(seed, STREAM_UPDATE);
        self.rng_resample = RngStream::new(seed, STREAM_RESAMPLE);
        self.rng_perturb = RngStream::new(seed, STREAM_PERTURB);
    }

    /// Draws the initial particles and assimilates `y_0`.
    pub fn initialize(&mut self, y0: &[f64]) -> Result<StepStats> {
        check_len("observation", self.model.dims().obs, y0.len())?;
        self.store.reset();
        self.log_likelihood = 0.0;
        self.t = 0;
        let model = self.model;
        let p = self.p;
        for i in 0..self.n {
            match self.algorithm {
                Algorithm::Api => {
                    if let Some(layout) = &self.layout {
                        let slot = self.store.approx_init(i);
                        slot.copy_from_slice(&self.prior_slot);
                        if let ApproxFamily::Mixture { components } = layout.family() {
                            let (mean, cov) = model.param_prior_gaussian().expect("checked at construction");
                            let prior = GaussianApprox::new(mean, cov)?;
                            let mix = MixtureApprox::from_prior_draws(&prior, components, &mut self.rng_init);
                            layout.write(&ParamApprox::Mixture(mix), slot)?;
                        }
                        let ws = self.ws.as_mut().expect("workspace exists with layout");
                        layout.sample(slot, &mut self.rng_prop, ws, &mut self.theta);
                    }
                }
                Algorithm::Pf | Algorithm::LiuWest => {
                    let slot = self.store.param_init(i);
                    match &self.fixed_param {
                        Some(th) => slot.copy_from_slice(th),
                        None => model.sample_param_prior(&mut self.rng_init, slot),
                    }
                    self.theta[..p].copy_from_slice(slot);
                }
            }
            let h = self.store.state_handle(0, i);
            let x = self.store.state_mut(h);
            model.sample_initial_state(&mut self.rng_prop, &self.theta, x);
            self.log_w[i] = sanitize(model.observation_logdensity(0, y0, x, &self.theta));
        }
        self.store.fill_windows(0);
        let stats = self.finish(0, y0)?;
        self.t = 1;
        Ok(stats)
    }

    /// Assimilates observation `y_t` for the next `t`.
    pub fn step(&mut self, y: &[f64]) -> Result<StepStats> {
        if self.t == 0 {
            return Err(Error::Config("filter not initialized".into()));
        }
        check_len("observation", self.model.dims().obs, y.len())?;
        let t = self.t;
        if self.algorithm == Algorithm::LiuWest && self.p > 0 && self.cfg.shrinkage < 1.0 {
            self.perturb_params();
        }
        let model = self.model;
        for i in 0..self.n {
            match (&self.layout, self.algorithm) {
                (Some(layout), Algorithm::Api) => {
                    let ws = self.ws.as_mut().expect("workspace exists with layout");
                    layout.sample(self.store.approx(i), &mut self.rng_prop, ws, &mut self.theta);
                }
                (None, Algorithm::Api) => {}
                _ => self.theta.copy_from_slice(self.store.param(i)),
            }
            self.store.gather_window(i, &mut self.window);
            let h = self.store.state_handle(t, i);
            let x = self.store.state_mut(h);
            model.sample_transition(&mut self.rng_prop, t, &self.window, &self.theta, x);
            self.log_w[i] = sanitize(model.observation_logdensity(t, y, x, &self.theta));
        }
        let stats = self.finish(t, y)?;
        self.t += 1;
        Ok(stats)
    }

    /// Weighting diagnostics, resampling, approximation updates and handle
    /// bookkeeping shared by every step.
    fn finish(&mut self, t: usize, y: &[f64]) -> Result<StepStats> {
        let mut stats = StepStats {
            t,
            ess: ess(&self.log_w),
            log_evidence: log_mean_exp(&self.log_w),
            ..StepStats::default()
        };
        self.compute_state_mean(t);
        resample_into(
            self.cfg.resample,
            &self.log_w,
            &mut self.rng_resample,
            &mut self.scratch,
            &mut self.ancestors,
            t,
        )?;
        self.log_likelihood += stats.log_evidence;
        stats.distinct_ancestors = count_runs(&self.ancestors);

        let api = self.layout.is_some();
        if api {
            let (updates, degenerate) = match self.cfg.update_order {
                UpdateOrder::ResampleFirst => self.update_distinct(t, y)?,
                UpdateOrder::UpdateFirst => self.update_all(t, y)?,
            };
            stats.adf_updates = updates;
            stats.degenerate_updates = degenerate;
        }
        self.store.resample_windows(&self.ancestors, t);
        if self.algorithm != Algorithm::Api {
            self.store.resample_params(&self.ancestors);
        }
        self.store.advance(api);
        stats.payload_reallocs = self.store.check_payload();
        Ok(stats)
    }

    /// Loads ancestor `a`'s new state into `x_buf` and, for t ≥ 1, its
    /// window into `window`.
    fn load_history(&mut self, t: usize, a: usize) {
        let h = self.store.state_handle(t, a);
        self.x_buf.copy_from_slice(self.store.state(h));
        if t > 0 {
            self.store.gather_window(a, &mut self.window);
        }
    }

    /// Updates q once per run of equal ancestors; children share the slot.
    fn update_distinct(&mut self, t: usize, y: &[f64]) -> Result<(usize, usize)> {
        let (mut updates, mut degenerate) = (0, 0);
        let mut start = 0;
        while start < self.n {
            let a = self.ancestors[start];
            let mut end = start + 1;
            while end < self.n && self.ancestors[end] == a {
                end += 1;
            }
            self.load_history(t, a);
            if self.update_one(t, y, a, start)? {
                degenerate += 1;
            }
            updates += 1;
            for k in start..end {
                self.store.set_next_approx(k, start);
            }
            start = end;
        }
        Ok((updates, degenerate))
    }

    /// Updates every particle in place, then points children at their
    /// ancestor's result.
    fn update_all(&mut self, t: usize, y: &[f64]) -> Result<(usize, usize)> {
        let mut degenerate = 0;
        for i in 0..self.n {
            self.load_history(t, i);
            if self.update_one(t, y, i, i)? {
                degenerate += 1;
            }
        }
        for k in 0..self.n {
            let a = self.ancestors[k];
            self.store.set_next_approx(k, a);
        }
        Ok((self.n, degenerate))
    }

    /// Projects particle `i`'s q against the step-`t` factor into slot `j`
    /// of the other half. Returns whether the update was degenerate.
    fn update_one(&mut self, t: usize, y: &[f64], i: usize, j: usize) -> Result<bool> {
        let layout = self.layout.as_ref().expect("API layout");
        let ws = self.ws.as_mut().expect("API workspace");
        let window: &[f64] = if t == 0 { &[] } else { &self.window };
        let target = make_param_likelihood(self.model, t, &self.x_buf, window, y)?
            .without_prior()
            .without_param_free_terms();
        let (prev, next) = self.store.approx_pair(i, j);
        if target.is_constant() {
            next.copy_from_slice(prev);
            return Ok(false);
        }
        let outcome = layout.update(prev, next, &target, ws, &mut self.rng_update);
        Ok(outcome == crate::adf::UpdateOutcome::Degenerate)
    }

    fn compute_state_mean(&mut self, t: usize) {
        let max = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.state_mean.fill(0.0);
        if !max.is_finite() {
            return;
        }
        let mut total = 0.0;
        for i in 0..self.n {
            let w = (self.log_w[i] - max).exp();
            if w == 0.0 {
                continue;
            }
            total += w;
            let x = self.store.state(self.store.state_handle(t, i));
            for (m, v) in self.state_mean.iter_mut().zip(x) {
                *m += w * v;
            }
        }
        for m in self.state_mean.iter_mut() {
            *m /= total;
        }
    }

    /// θ ← aθ + (1−a)θ̄ + N(0, (1−a²)V̂) over the equally weighted cloud.
    fn perturb_params(&mut self) {
        let (n, p) = (self.n, self.p);
        let a = self.cfg.shrinkage;
        self.lw_mean.fill(0.0);
        self.lw_cov.fill(0.0);
        let w = 1.0 / n as f64;
        for i in 0..n {
            let th = self.store.param(i);
            for k in 0..p {
                self.lw_mean[k] += w * th[k];
            }
        }
        for i in 0..n {
            let th = self.store.param(i);
            for r in 0..p {
                let dr = th[r] - self.lw_mean[r];
                for c in 0..=r {
                    self.lw_cov[r * p + c] += w * dr * (th[c] - self.lw_mean[c]);
                }
            }
        }
        let scale = 1.0 - a * a;
        for r in 0..p {
            for c in 0..=r {
                let v = self.lw_cov[r * p + c] * scale;
                self.lw_cov[r * p + c] = v;
                self.lw_cov[c * p + r] = v;
            }
        }
        let noisy = linalg::stabilize(&mut self.lw_cov, &mut self.lw_chol, p);
        for i in 0..n {
            if noisy {
                for zk in self.z.iter_mut() {
                    *zk = StandardNormal.sample(&mut self.rng_perturb);
                }
            }
            let (old, new) = self.store.param_scratch(i);
            for r in 0..p {
                let mut v = a * old[r] + (1.0 - a) * self.lw_mean[r];
                if noisy {
                    for c in 0..=r {
                        v += self.lw_chol[r * p + c] * self.z[c];
                    }
                }
                new[r] = v;
            }
        }
        self.store.commit_params();
    }

    /// Pooled posterior over θ across the current particles.
    pub fn param_summary(&self) -> ParamSummary {
        let (n, p) = (self.n, self.p);
        if p == 0 {
            return ParamSummary::empty();
        }
        let w = 1.0 / n as f64;
        match (&self.layout, self.model.param_space().cardinalities()) {
            (Some(layout), Some(cards)) => {
                let mut marginals: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
                for i in 0..n {
                    let slot = self.store.approx(i);
                    for (k, acc) in marginals.iter_mut().enumerate() {
                        for (a, q) in acc.iter_mut().zip(layout.table(slot, k)) {
                            *a += w * q;
                        }
                    }
                }
                ParamSummary::Discrete { marginals }
            }
            (Some(layout), None) => {
                let mut mean = vec![0.0; p];
                let mut second = vec![0.0; p * p];
                for i in 0..n {
                    layout.accumulate_moments(self.store.approx(i), w, &mut mean, &mut second);
                }
                ParamSummary::Continuous {
                    cov: summary::central(&mean, second),
                    mean,
                }
            }
            (None, Some(cards)) => {
                let mut marginals: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
                for i in 0..n {
                    for (acc, &v) in marginals.iter_mut().zip(self.store.param(i)) {
                        acc[v as usize] += w;
                    }
                }
                ParamSummary::Discrete { marginals }
            }
            (None, None) => {
                let mut mean = vec![0.0; p];
                let mut second = vec![0.0; p * p];
                let zero = vec![0.0; p * p];
                for i in 0..n {
                    summary::accumulate(self.store.param(i), &zero, w, &mut mean, &mut second);
                }
                ParamSummary::Continuous {
                    cov: summary::central(&mean, second),
                    mean,
                }
            }
        }
    }

    /// Weighted point masses describing the pooled θ posterior: every
    /// Gaussian component of every particle (API), or every particle's θ.
    /// Empty for discrete parameters.
    pub fn param_atoms(&self) -> Vec<(f64, Vec<f64>)> {
        if self.model.param_space().kind() == ParamKind::Discrete || self.p == 0 {
            return vec![];
        }
        let w = 1.0 / self.n as f64;
        let mut out = Vec::new();
        for i in 0..self.n {
            match &self.layout {
                Some(layout) => layout.for_each_component(self.store.approx(i), |a, m| out.push((w * a, m.to_vec()))),
                None => out.push((w, self.store.param(i).to_vec())),
            }
        }
        out
    }

    /// Particle `i`'s current approximation (API only).
    pub fn particle_approx(&self, i: usize) -> Option<ParamApprox> {
        self.layout.as_ref().map(|l| l.read(self.store.approx(i)))
    }

    /// Particle `i`'s current θ (bootstrap/Liu-West only).
    pub fn particle_param(&self, i: usize) -> Option<&[f64]> {
        (self.algorithm != Algorithm::Api).then(|| self.store.param(i))
    }

    /// Particle `i`'s most recent state.
    pub fn particle_state(&self, i: usize) -> &[f64] {
        let w = self.store.window(i);
        self.store.state(w[w.len() - 1])
    }
}

fn layout_components(family: ApproxFamily) -> usize {
    match family {
        ApproxFamily::Mixture { components } => components,
        _ => 1,
    }
}

#[inline]
fn sanitize(lw: f64) -> f64 {
    if lw.is_nan() {
        f64::NEG_INFINITY
    } else {
        lw
    }
}

fn count_runs(sorted: &[usize]) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Diagnostics and estimates recorded after one assimilated observation.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub stats: StepStats,
    pub param: ParamSummary,
    pub state_mean: Vec<f64>,
    pub elapsed: Duration,
}

/// Everything a filter run produces.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub records: Vec<StepRecord>,
    pub final_param: ParamSummary,
    pub param_atoms: Vec<(f64, Vec<f64>)>,
    pub log_likelihood: f64,
    pub elapsed: Duration,
    pub adf_updates: usize,
    pub degenerate_updates: usize,
    pub counters: StoreCounters,
}

impl RunResult {
    /// Posterior mean of θ after the last observation.
    pub fn param_mean(&self) -> Vec<f64> {
        self.final_param.mean()
    }

    /// Total ancestor-run count over all steps.
    pub fn distinct_ancestors(&self) -> usize {
        self.records.iter().map(|r| r.stats.distinct_ancestors).sum()
    }
}

/// Runs `algorithm` over `observations`, recording one [`StepRecord`] per
/// observation.
pub fn run_filter<M: DynamicModel + ?Sized>(
    model: &M,
    observations: &[ObsVector],
    algorithm: Algorithm,
    cfg: &FilterConfig,
) -> Result<RunResult> {
    if observations.is_empty() {
        return Err(Error::Config("no observations".into()));
    }
    let mut f = Filter::new(model, algorithm, cfg.clone())?;
    let mut records = Vec::with_capacity(observations.len());
    let start = Instant::now();
    let (mut updates, mut degenerate) = (0, 0);
    for (t, y) in observations.iter().enumerate() {
        let step_start = Instant::now();
        let stats = if t == 0 { f.initialize(y)? } else { f.step(y)? };
        let param = f.param_summary();
        updates += stats.adf_updates;
        degenerate += stats.degenerate_updates;
        records.push(StepRecord {
            stats,
            param,
            state_mean: f.state_mean().to_vec(),
            elapsed: step_start.elapsed(),
        });
    }
    let elapsed = start.elapsed();
    Ok(RunResult {
        algorithm,
        final_param: f.param_summary(),
        param_atoms: f.param_atoms(),
        log_likelihood: f.log_likelihood(),
        records,
        elapsed,
        adf_updates: updates,
        degenerate_updates: degenerate,
        counters: f.store().counters(),
    })
}

/// Assumed Parameter Inference over the whole observation sequence.
pub fn api_run<M: DynamicModel + ?Sized>(model: &M, observations: &[ObsVector], cfg: &FilterConfig) -> Result<RunResult> {
    run_filter(model, observations, Algorithm::Api, cfg)
}

/// The bootstrap particle filter with θ drawn once from the prior.
pub fn bootstrap_pf_run<M: DynamicModel + ?Sized>(
    model: &M,
    observations: &[ObsVector],
    cfg: &FilterConfig,
) -> Result<RunResult> {
    run_filter(model, observations, Algorithm::Pf, cfg)
}

/// The Liu-West filter with shrinkage `cfg.shrinkage`.
pub fn liu_west_run<M: DynamicModel + ?Sized>(
    model: &M,
    observations: &[ObsVector],
    cfg: &FilterConfig,
) -> Result<RunResult> {
    run_filter(model, observations, Algorithm::LiuWest, cfg)
}

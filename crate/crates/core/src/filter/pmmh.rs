use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Algorithm, Filter, FilterConfig, ResampleScheme};
use crate::error::{Error, Result};
use crate::model::{DynamicModel, ObsVector, ParamKind, RngStream};

const STREAM_CHAIN: u64 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmmhConfig {
    /// Particles in the inner bootstrap filter.
    pub particles: usize,
    pub iterations: usize,
    /// Random-walk standard deviation (continuous θ).
    pub proposal_sd: f64,
    /// Per-coordinate support `[lo, hi]` of the truncated proposal.
    pub bounds: Option<(f64, f64)>,
    /// Stop early once this much wall-clock time has been spent.
    pub time_budget: Option<Duration>,
    pub resample: ResampleScheme,
    pub seed: u64,
}

impl Default for PmmhConfig {
    fn default() -> Self {
        Self {
            particles: 100,
            iterations: 1000,
            proposal_sd: 0.1,
            bounds: None,
            time_budget: None,
            resample: ResampleScheme::Multinomial,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PmmhResult {
    /// θ after every iteration, starting with the initial value.
    pub chain: Vec<Vec<f64>>,
    /// Mean over the second half of the chain.
    pub mean: Vec<f64>,
    pub accepted: usize,
    /// Iterations whose likelihood estimate was not finite.
    pub rejected_nonfinite: usize,
    pub iterations: usize,
    pub elapsed: Duration,
}

impl PmmhResult {
    pub fn acceptance_rate(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.accepted as f64 / self.iterations as f64
        }
    }

    /// The retained second half of the chain.
    pub fn kept(&self) -> &[Vec<f64>] {
        &self.chain[self.chain.len() / 2..]
    }

    /// Batch-means standard error of the retained mean, per coordinate.
    pub fn mean_standard_error(&self) -> Vec<f64> {
        let kept = self.kept();
        let n = kept.len();
        let p = self.mean.len();
        let batches = (n as f64).sqrt().floor().max(1.0) as usize;
        let size = n / batches;
        if size == 0 {
            return vec![f64::INFINITY; p];
        }
        (0..p)
            .map(|k| {
                let means: Vec<f64> = (0..batches)
                    .map(|b| kept[b * size..(b + 1) * size].iter().map(|th| th[k]).sum::<f64>() / size as f64)
                    .collect();
                let m = means.iter().sum::<f64>() / batches as f64;
                let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches.max(2) - 1) as f64;
                (var / batches as f64).sqrt()
            })
            .collect()
    }
}

/// Particle-marginal Metropolis-Hastings with a bootstrap-filter likelihood.
///
/// Continuous θ moves by a Gaussian random walk truncated to `bounds`, with
/// the truncation normalizers in the acceptance ratio. Discrete θ changes
/// one uniformly chosen coordinate to a uniformly chosen other value.
pub fn pmmh_run<M: DynamicModel + ?Sized>(model: &M, observations: &[ObsVector], cfg: &PmmhConfig) -> Result<PmmhResult> {
    if observations.is_empty() {
        return Err(Error::Config("no observations".into()));
    }
    let space = model.param_space().clone();
    let p = space.dim();
    if p == 0 {
        return Err(Error::Config("PMMH needs at least one parameter".into()));
    }
    if !(cfg.proposal_sd > 0.0) && space.kind() == ParamKind::Continuous {
        return Err(Error::Config("proposal_sd must be positive".into()));
    }
    if let Some((lo, hi)) = cfg.bounds {
        if !(lo < hi) {
            return Err(Error::Config(format!("empty bounds [{lo}, {hi}]")));
        }
    }
    let fcfg = FilterConfig {
        particles: cfg.particles,
        resample: cfg.resample,
        seed: cfg.seed,
        ..FilterConfig::default()
    };
    let mut filter = Filter::new(model, Algorithm::Pf, fcfg)?;
    let mut rng = RngStream::new(cfg.seed, STREAM_CHAIN);
    let std_normal = Normal::standard();

    let log_lik = |theta: &[f64], filter: &mut Filter<'_, M>| -> Result<f64> {
        filter.set_fixed_param(Some(theta))?;
        let mut total = 0.0;
        for (t, y) in observations.iter().enumerate() {
            let r = if t == 0 { filter.initialize(y) } else { filter.step(y) };
            match r {
                Ok(s) => total += s.log_evidence,
                Err(e) if e.is_degeneracy() => return Ok(f64::NEG_INFINITY),
                Err(e) => return Err(e),
            }
        }
        Ok(total)
    };

    // start from a prior draw inside the bounds
    let mut current = vec![0.0; p];
    for _ in 0..1000 {
        model.sample_param_prior(&mut rng, &mut current);
        if in_bounds(&current, cfg.bounds) {
            break;
        }
    }
    if !in_bounds(&current, cfg.bounds) {
        let (lo, hi) = cfg.bounds.expect("only bounds can reject");
        current.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    }
    let mut cur_ll = log_lik(&current, &mut filter)?;
    let mut cur_lp = model.param_prior_logdensity(&current);

    let start = Instant::now();
    let mut chain = Vec::with_capacity(cfg.iterations.saturating_add(1).min(1 << 16));
    chain.push(current.clone());
    let mut proposal = vec![0.0; p];
    let (mut accepted, mut nonfinite, mut done) = (0, 0, 0);
    for _ in 0..cfg.iterations {
        if cfg.time_budget.is_some_and(|b| start.elapsed() >= b) {
            break;
        }
        done += 1;
        let mut log_q_ratio = 0.0;
        match space.kind() {
            ParamKind::Continuous => {
                for k in 0..p {
                    let (v, lz_fwd, lz_back) =
                        truncated_step(current[k], cfg.proposal_sd, cfg.bounds, &std_normal, &mut rng);
                    proposal[k] = v;
                    // q(θ|θ')/q(θ'|θ) reduces to the ratio of truncation masses
                    log_q_ratio += lz_fwd - lz_back;
                }
            }
            ParamKind::Discrete => {
                proposal.copy_from_slice(&current);
                let cards = space.cardinalities().expect("discrete space has cardinalities");
                let k = rng.random_range(0..p);
                if cards[k] > 1 {
                    let other = rng.random_range(0..cards[k] - 1);
                    let old = current[k] as usize;
                    proposal[k] = if other >= old { other + 1 } else { other } as f64;
                }
            }
        }
        let prop_lp = model.param_prior_logdensity(&proposal);
        if prop_lp == f64::NEG_INFINITY {
            chain.push(current.clone());
            continue;
        }
        let prop_ll = log_lik(&proposal, &mut filter)?;
        if !prop_ll.is_finite() {
            nonfinite += 1;
            chain.push(current.clone());
            continue;
        }
        let log_alpha = prop_ll + prop_lp - cur_ll - cur_lp + log_q_ratio;
        let u: f64 = rng.random();
        if !cur_ll.is_finite() || u.ln() < log_alpha {
            current.copy_from_slice(&proposal);
            cur_ll = prop_ll;
            cur_lp = prop_lp;
            accepted += 1;
        }
        chain.push(current.clone());
    }
    let kept = &chain[chain.len() / 2..];
    let mean = (0..p)
        .map(|k| kept.iter().map(|th| th[k]).sum::<f64>() / kept.len() as f64)
        .collect();
    Ok(PmmhResult {
        chain,
        mean,
        accepted,
        rejected_nonfinite: nonfinite,
        iterations: done,
        elapsed: start.elapsed(),
    })
}

fn in_bounds(theta: &[f64], bounds: Option<(f64, f64)>) -> bool {
    match bounds {
        None => true,
        Some((lo, hi)) => theta.iter().all(|v| (lo..=hi).contains(v)),
    }
}

/// Draws from N(mu, sd²) truncated to `bounds`. Returns the draw and the log
/// truncation masses around `mu` and around the draw.
fn truncated_step(mu: f64, sd: f64, bounds: Option<(f64, f64)>, n: &Normal, rng: &mut RngStream) -> (f64, f64, f64) {
    let Some((lo, hi)) = bounds else {
        let z: f64 = StandardNormal.sample(rng);
        return (mu + sd * z, 0.0, 0.0);
    };
    let mass = |m: f64| (n.cdf((hi - m) / sd) - n.cdf((lo - m) / sd)).max(f64::MIN_POSITIVE).ln();
    let (a, b) = (n.cdf((lo - mu) / sd), n.cdf((hi - mu) / sd));
    let v = if b - a > 1e-12 {
        let u: f64 = rng.random();
        (mu + sd * n.inverse_cdf(a + u * (b - a))).clamp(lo, hi)
    } else {
        // the whole support is in a far tail; fall back to uniform
        rng.random_range(lo..=hi)
    };
    (v, mass(mu), mass(v))
}

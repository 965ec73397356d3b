use rand::Rng;

use super::gaussian::{self, GaussianApprox, SlotUpdate};
use super::{UpdateOutcome, UpdateWorkspace, MIXTURE_WEIGHT_FLOOR};
use crate::error::{Error, Result};
use crate::model::{LogTarget, RngStream};

/// Weighted sum of L Gaussians over a continuous parameter.
///
/// Components whose weight dropped to zero stay in place (L is fixed for a
/// run) but are never sampled or updated again.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureApprox {
    weights: Vec<f64>,
    components: Vec<GaussianApprox>,
}

impl MixtureApprox {
    pub fn new(weights: Vec<f64>, components: Vec<GaussianApprox>) -> Result<Self> {
        if components.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidApprox(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        let p = components[0].dim();
        if components.iter().any(|c| c.dim() != p) {
            return Err(Error::InvalidApprox("components differ in dimension".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidApprox("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidApprox(format!("weights sum to {total}")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            weights,
            components,
        })
    }

    /// L components with means drawn independently from `prior`, each with
    /// the prior covariance and weight 1/L.
    pub fn from_prior_draws(prior: &GaussianApprox, components: usize, rng: &mut RngStream) -> Self {
        let comps = (0..components)
            .map(|_| {
                GaussianApprox::new(prior.sample(rng).into_inner(), prior.cov().to_vec())
                    .expect("prior covariance already validated")
            })
            .collect();
        Self {
            weights: vec![1.0 / components as f64; components],
            components: comps,
        }
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianApprox] {
        &self.components
    }

    /// Components with nonzero weight.
    pub fn active(&self) -> impl Iterator<Item = (f64, &GaussianApprox)> {
        self.weights
            .iter()
            .copied()
            .zip(&self.components)
            .filter(|(w, _)| *w > 0.0)
    }

    pub fn mean(&self) -> Vec<f64> {
        let p = self.dim();
        let mut m = vec![0.0; p];
        for (w, c) in self.active() {
            for i in 0..p {
                m[i] += w * c.mean()[i];
            }
        }
        m
    }

    /// Covariance by the law of total variance.
    pub fn cov(&self) -> Vec<f64> {
        let p = self.dim();
        let m = self.mean();
        let mut s = vec![0.0; p * p];
        for (w, c) in self.active() {
            for i in 0..p {
                for j in 0..p {
                    let di = c.mean()[i] - m[i];
                    let dj = c.mean()[j] - m[j];
                    s[i * p + j] += w * (c.cov()[i * p + j] + di * dj);
                }
            }
        }
        s
    }

    pub fn logpdf(&self, theta: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .active()
            .map(|(w, c)| w.ln() + c.logpdf(theta))
            .collect();
        log_sum_exp(&terms)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

// Slot layout: [weights (L) | L Gaussian slots].

pub(crate) fn slot_len(p: usize, l: usize) -> usize {
    l + l * gaussian::slot_len(p)
}

pub(crate) fn write_slot(mix: &MixtureApprox, slot: &mut [f64], p: usize) -> bool {
    let l = mix.len();
    slot[..l].copy_from_slice(&mix.weights);
    let g = gaussian::slot_len(p);
    let mut ok = true;
    for (c, dst) in mix.components.iter().zip(slot[l..].chunks_exact_mut(g)) {
        ok &= gaussian::write_slot(c.mean(), c.cov(), dst, p);
    }
    ok
}

pub(crate) fn read_slot(slot: &[f64], p: usize, l: usize) -> MixtureApprox {
    let g = gaussian::slot_len(p);
    MixtureApprox {
        weights: slot[..l].to_vec(),
        components: slot[l..l + l * g]
            .chunks_exact(g)
            .map(|c| gaussian::read_slot(c, p))
            .collect(),
    }
}

pub(crate) fn sample_slot(slot: &[f64], p: usize, l: usize, rng: &mut RngStream, z: &mut [f64], out: &mut [f64]) {
    let g = gaussian::slot_len(p);
    let weights = &slot[..l];
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut pick = None;
    for (m, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            pick = Some(m);
            if u < acc {
                break;
            }
        }
    }
    let m = pick.expect("mixture has at least one active component");
    let comp = &slot[l + m * g..l + (m + 1) * g];
    gaussian::sample_slot(comp, p, rng, z, out);
}

/// Per-component moment matching with weights α_m ∝ α_m β_m.
pub(crate) fn update_slot<T: LogTarget + ?Sized>(
    prev: &[f64],
    next: &mut [f64],
    p: usize,
    l: usize,
    target: &T,
    ws: &mut UpdateWorkspace,
    rng: &mut RngStream,
) -> UpdateOutcome {
    let g = gaussian::slot_len(p);
    let mut log_alpha = std::mem::take(&mut ws.log_alpha);
    log_alpha.clear();
    for m in 0..l {
        let alpha = prev[m];
        let src = &prev[l + m * g..l + (m + 1) * g];
        let dst = &mut next[l + m * g..l + (m + 1) * g];
        if alpha <= 0.0 {
            dst.copy_from_slice(src);
            log_alpha.push(f64::NEG_INFINITY);
            continue;
        }
        let log_beta = match gaussian::update_slot(src, dst, p, target, ws, rng) {
            SlotUpdate::Updated(lz) | SlotUpdate::Collapsed(lz) => lz,
            SlotUpdate::Vanished => f64::NEG_INFINITY,
        };
        log_alpha.push(alpha.ln() + log_beta);
    }
    let max = log_alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let outcome = if max == f64::NEG_INFINITY {
        next.copy_from_slice(prev);
        UpdateOutcome::Degenerate
    } else {
        let weights = &mut next[..l];
        for (w, la) in weights.iter_mut().zip(&log_alpha) {
            *w = (la - max).exp();
        }
        normalize_with_floor(weights);
        UpdateOutcome::Updated
    };
    ws.log_alpha = log_alpha;
    outcome
}

/// Normalises, zeroes weights under [`MIXTURE_WEIGHT_FLOOR`] and
/// renormalises the survivors.
pub(crate) fn normalize_with_floor(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
        if *w < MIXTURE_WEIGHT_FLOOR {
            *w = 0.0;
        }
    }
    let kept: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= kept;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_variance_of_two_components() {
        let mix = MixtureApprox::new(
            vec![0.5, 0.5],
            vec![
                GaussianApprox::scalar(0.0, 1.0).unwrap(),
                GaussianApprox::scalar(2.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        assert!((mix.mean()[0] - 1.0).abs() < 1e-15);
        assert!((mix.cov()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn floor_drops_tiny_weights_and_keeps_ratios() {
        let mut w = [0.6, 0.3, 1e-14, 0.1];
        normalize_with_floor(&mut w);
        assert_eq!(w[2], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w[0] / w[1] - 2.0).abs() < 1e-12);
        assert!((w[0] / w[3] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_weights() {
        let c = GaussianApprox::standard(1);
        assert!(MixtureApprox::new(vec![0.7, 0.7], vec![c.clone(), c.clone()]).is_err());
        assert!(MixtureApprox::new(vec![-0.5, 1.5], vec![c.clone(), c]).is_err());
    }
}

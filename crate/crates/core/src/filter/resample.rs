use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RngStream;

/// How ancestors are drawn from the normalized weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleScheme {
    #[default]
    Multinomial,
    /// One uniform offset, N evenly spaced points. Lower variance, but the
    /// draws are not independent.
    Systematic,
}

/// Effective sample size `(Σw)² / Σw²` of unnormalized log-weights.
///
/// Returns 0 when every weight is zero.
pub fn ess(log_weights: &[f64]) -> f64 {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return 0.0;
    }
    let (mut s, mut s2) = (0.0, 0.0);
    for &lw in log_weights {
        let w = (lw - max).exp();
        s += w;
        s2 += w * w;
    }
    s * s / s2
}

/// `log (1/N Σ exp(lw))`, the log of the mean weight.
pub fn log_mean_exp(log_weights: &[f64]) -> f64 {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = log_weights.iter().map(|&lw| (lw - max).exp()).sum();
    max + (s / log_weights.len() as f64).ln()
}

/// Draws N ancestors i.i.d. from the normalized weights, returned sorted.
pub fn multinomial_resample(log_weights: &[f64], rng: &mut RngStream) -> Result<Vec<usize>> {
    let mut out = vec![0; log_weights.len()];
    let mut scratch = ResampleScratch::new(log_weights.len());
    resample_into(ResampleScheme::Multinomial, log_weights, rng, &mut scratch, &mut out, 0)?;
    Ok(out)
}

/// Systematic resampling; output sorted.
pub fn systematic_resample(log_weights: &[f64], rng: &mut RngStream) -> Result<Vec<usize>> {
    let mut out = vec![0; log_weights.len()];
    let mut scratch = ResampleScratch::new(log_weights.len());
    resample_into(ResampleScheme::Systematic, log_weights, rng, &mut scratch, &mut out, 0)?;
    Ok(out)
}

/// Buffers reused across resampling calls.
#[derive(Clone, Debug)]
pub(crate) struct ResampleScratch {
    cdf: Vec<f64>,
    spacings: Vec<f64>,
}

impl ResampleScratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            cdf: vec![0.0; n],
            spacings: vec![0.0; n],
        }
    }
}

/// Allocation-free resampling of `out.len()` ancestors. `t` only labels a
/// degeneracy error.
pub(crate) fn resample_into(
    scheme: ResampleScheme,
    log_weights: &[f64],
    rng: &mut RngStream,
    scratch: &mut ResampleScratch,
    out: &mut [usize],
    t: usize,
) -> Result<()> {
    let n = log_weights.len();
    let cdf = &mut scratch.cdf[..n];
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 || !max.is_finite() {
        return Err(Error::TotalDegeneracy { t });
    }
    let mut acc = 0.0;
    for (c, &lw) in cdf.iter_mut().zip(log_weights) {
        acc += (lw - max).exp();
        *c = acc;
    }
    let total = acc;
    let m = out.len();
    match scheme {
        ResampleScheme::Multinomial => {
            // Sorted uniforms from normalized exponential spacings, merged
            // against the cumulative weights in one pass.
            let spacings = &mut scratch.spacings[..m];
            let mut e_total = 0.0;
            for s in spacings.iter_mut() {
                e_total += exp1(rng);
                *s = e_total;
            }
            e_total += exp1(rng);
            let scale = total / e_total;
            let mut j = 0;
            for (o, &s) in out.iter_mut().zip(spacings.iter()) {
                let u = s * scale;
                while j + 1 < n && cdf[j] <= u {
                    j += 1;
                }
                *o = j;
            }
        }
        ResampleScheme::Systematic => {
            let step = total / m as f64;
            let mut u = rng.random::<f64>() * step;
            let mut j = 0;
            for o in out.iter_mut() {
                while j + 1 < n && cdf[j] <= u {
                    j += 1;
                }
                *o = j;
                u += step;
            }
        }
    }
    Ok(())
}

#[inline]
fn exp1(rng: &mut RngStream) -> f64 {
    // 1 - u lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln()
}

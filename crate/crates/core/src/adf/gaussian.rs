use rand_distr::{Distribution, StandardNormal};

use super::{linalg, quadrature::SigmaPoints, UpdateWorkspace, LOG_Z_FLOOR};
use crate::error::{Error, Result};
use crate::model::{LogTarget, ParamVector, RngStream};

/// Multivariate normal N(μ, Σ) over a continuous parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianApprox {
    mean: Vec<f64>,
    cov: Vec<f64>,
}

impl GaussianApprox {
    /// Builds N(mean, cov) from a row-major covariance. The covariance must be
    /// symmetric and positive definite.
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let p = mean.len();
        if p == 0 {
            return Err(Error::InvalidApprox("gaussian over zero dimensions".into()));
        }
        if cov.len() != p * p {
            return Err(Error::DimensionMismatch {
                what: "covariance",
                expected: p * p,
                got: cov.len(),
            });
        }
        for i in 0..p {
            for j in 0..i {
                let (a, b) = (cov[i * p + j], cov[j * p + i]);
                if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1.0) {
                    return Err(Error::InvalidApprox("covariance is not symmetric".into()));
                }
            }
        }
        let mut chol = vec![0.0; p * p];
        if !linalg::cholesky(&cov, &mut chol, p) || mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        Ok(Self { mean, cov })
    }

    /// N(0, I_p).
    pub fn standard(p: usize) -> Self {
        let mut cov = vec![0.0; p * p];
        for i in 0..p {
            cov[i * p + i] = 1.0;
        }
        Self {
            mean: vec![0.0; p],
            cov,
        }
    }

    pub fn scalar(mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![mean], vec![variance])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major covariance.
    pub fn cov(&self) -> &[f64] {
        &self.cov
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.cov[i * self.dim() + i]
    }

    pub fn sample(&self, rng: &mut RngStream) -> ParamVector {
        let p = self.dim();
        let mut slot = vec![0.0; slot_len(p)];
        write_slot(&self.mean, &self.cov, &mut slot, p);
        let mut z = vec![0.0; p];
        let mut out = vec![0.0; p];
        sample_slot(&slot, p, rng, &mut z, &mut out);
        ParamVector::continuous(out)
    }

    pub fn logpdf(&self, theta: &[f64]) -> f64 {
        let p = self.dim();
        let mut chol = vec![0.0; p * p];
        linalg::cholesky(&self.cov, &mut chol, p);
        linalg::gaussian_logpdf_chol(theta, &self.mean, &chol, p)
    }
}

// Slot layout: [mean (p) | cov (p*p) | lower Cholesky factor (p*p)].

pub(crate) fn slot_len(p: usize) -> usize {
    p + 2 * p * p
}

/// Writes N(mean, cov) into a slot. Returns false when the covariance cannot
/// be factored even with jitter.
pub(crate) fn write_slot(mean: &[f64], cov: &[f64], slot: &mut [f64], p: usize) -> bool {
    slot[..p].copy_from_slice(mean);
    let (cov_dst, chol) = slot[p..].split_at_mut(p * p);
    cov_dst.copy_from_slice(cov);
    linalg::stabilize(cov_dst, chol, p)
}

pub(crate) fn read_slot(slot: &[f64], p: usize) -> GaussianApprox {
    GaussianApprox {
        mean: slot[..p].to_vec(),
        cov: slot[p..p + p * p].to_vec(),
    }
}

#[inline]
pub(crate) fn slot_parts(slot: &[f64], p: usize) -> (&[f64], &[f64], &[f64]) {
    let (mean, rest) = slot.split_at(p);
    let (cov, chol) = rest.split_at(p * p);
    (mean, cov, &chol[..p * p])
}

pub(crate) fn sample_slot(slot: &[f64], p: usize, rng: &mut RngStream, z: &mut [f64], out: &mut [f64]) {
    let (mean, _, chol) = slot_parts(slot, p);
    for zi in z[..p].iter_mut() {
        *zi = StandardNormal.sample(rng);
    }
    linalg::lower_mul(chol, &z[..p], out, p);
    for i in 0..p {
        out[i] += mean[i];
    }
}

/// Result of moment matching one Gaussian against a target factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum SlotUpdate {
    /// New moments written; carries log Z.
    Updated(f64),
    /// Z is fine but the matched covariance could not be made positive
    /// definite; the previous moments were kept. Carries log Z.
    Collapsed(f64),
    /// Z fell below the floor; the previous moments were kept.
    Vanished,
}

/// Moment matching of `t(θ)·N(θ; prev)` into `next`.
pub(crate) fn update_slot<T: LogTarget + ?Sized>(
    prev: &[f64],
    next: &mut [f64],
    p: usize,
    target: &T,
    ws: &mut UpdateWorkspace,
    rng: &mut RngStream,
) -> SlotUpdate {
    let (mean, _, chol) = slot_parts(prev, p);
    ws.fill_points(mean, chol, rng);
    let UpdateWorkspace {
        points, log_t, tilt, ..
    } = ws;
    let (next_mean, rest) = next.split_at_mut(p);
    let (next_cov, next_chol) = rest.split_at_mut(p * p);
    let Some(log_z) = moment_match(points, target, log_t, tilt, next_mean, next_cov) else {
        next.copy_from_slice(prev);
        return SlotUpdate::Vanished;
    };
    if linalg::stabilize(next_cov, next_chol, p) {
        SlotUpdate::Updated(log_z)
    } else {
        next.copy_from_slice(prev);
        SlotUpdate::Collapsed(log_z)
    }
}

/// Evaluates the target at every point and writes the normalised first and
/// second moments of `t·q`. Raw `log t` values are left in `log_t`. Returns
/// `log Σ_j w_j t(θ_j)`, or `None` when it is below [`LOG_Z_FLOOR`].
pub(crate) fn moment_match<T: LogTarget + ?Sized>(
    points: &SigmaPoints,
    target: &T,
    log_t: &mut Vec<f64>,
    tilt: &mut Vec<f64>,
    mean_out: &mut [f64],
    cov_out: &mut [f64],
) -> Option<f64> {
    let p = points.dim();
    let n = points.len();
    log_t.clear();
    let mut max = f64::NEG_INFINITY;
    for (x, w) in points.iter() {
        let lt = target.log_eval(x);
        let lt = if lt.is_nan() { f64::NEG_INFINITY } else { lt };
        if w > 0.0 && lt > max {
            max = lt;
        }
        log_t.push(lt);
    }
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return None;
    }
    tilt.clear();
    let mut total = 0.0;
    for (lt, &w) in log_t.iter().zip(points.weights()) {
        let a = w * (*lt - max).exp();
        tilt.push(a);
        total += a;
    }
    let log_z = max + total.ln();
    if !(log_z >= LOG_Z_FLOOR) {
        return None;
    }
    mean_out.fill(0.0);
    for j in 0..n {
        let a = tilt[j] / total;
        let x = points.point(j);
        for i in 0..p {
            mean_out[i] += a * x[i];
        }
    }
    cov_out.fill(0.0);
    for j in 0..n {
        let a = tilt[j] / total;
        if a == 0.0 {
            continue;
        }
        let x = points.point(j);
        for i in 0..p {
            let di = x[i] - mean_out[i];
            for k in 0..=i {
                cov_out[i * p + k] += a * di * (x[k] - mean_out[k]);
            }
        }
    }
    for i in 0..p {
        for k in 0..i {
            cov_out[k * p + i] = cov_out[i * p + k];
        }
    }
    Some(log_z)
}


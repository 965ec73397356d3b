//! Deterministic and random point sets for Gaussian expectations.
//!
//! Every point set approximates `E[f(θ)]` for `θ ~ N(μ, Σ)` by a weighted sum
//! `Σ_j w_j f(θ_j)` with weights summing to one.

use rand_distr::{Distribution, StandardNormal};

use super::linalg;
use crate::error::{Error, Result};
use crate::model::RngStream;

/// Largest tensor grid built by default.
pub const DEFAULT_POINT_BUDGET: usize = 4096;

/// One-dimensional Gauss-Hermite rule for the standard normal weight.
///
/// `Σ_j w_j f(z_j)` equals `E[f(Z)]`, `Z ~ N(0, 1)`, exactly for polynomials
/// of degree up to `2M - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussHermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermiteRule {
    pub fn new(points: usize) -> Self {
        assert!(points >= 1, "Gauss-Hermite rule needs at least one point");
        let (x, w) = physicists_rule(points);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let mut pairs: Vec<(f64, f64)> = x
            .into_iter()
            .zip(w)
            .map(|(x, w)| (std::f64::consts::SQRT_2 * x, w / sqrt_pi))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Nodes and weights for the weight function `exp(-x²)` by Newton iteration
/// on the orthonormal Hermite recurrence.
fn physicists_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let half = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        // the middle root is exactly zero
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// A weighted point set in parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaPoints {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl SigmaPoints {
    pub fn with_capacity(dim: usize, capacity: usize) -> Self {
        Self {
            dim,
            points: Vec::with_capacity(dim * capacity),
            weights: Vec::with_capacity(capacity),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim.max(1))
            .zip(self.weights.iter().copied())
    }

    /// Weighted mean and covariance of the point set.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let p = self.dim;
        let mut mean = vec![0.0; p];
        for (x, w) in self.iter() {
            for i in 0..p {
                mean[i] += w * x[i];
            }
        }
        let mut cov = vec![0.0; p * p];
        for (x, w) in self.iter() {
            for i in 0..p {
                for j in 0..p {
                    cov[i * p + j] += w * (x[i] - mean[i]) * (x[j] - mean[j]);
                }
            }
        }
        (mean, cov)
    }

    fn reset(&mut self, dim: usize) {
        self.dim = dim;
        self.points.clear();
        self.weights.clear();
    }

    /// μ ± columns of √p·L for the Cholesky factor L of Σ.
    pub(crate) fn fill_unscented(&mut self, mean: &[f64], chol: &[f64]) {
        let p = mean.len();
        self.reset(p);
        let scale = (p as f64).sqrt();
        let w = 1.0 / (2 * p) as f64;
        for sign in [1.0, -1.0] {
            for j in 0..p {
                for i in 0..p {
                    self.points.push(mean[i] + sign * scale * chol[i * p + j]);
                }
                self.weights.push(w);
            }
        }
    }

    /// Tensor grid of the 1-d rule mapped through μ + L z.
    pub(crate) fn fill_gauss_hermite(
        &mut self,
        mean: &[f64],
        chol: &[f64],
        rule: &GaussHermiteRule,
        counter: &mut [usize],
        z: &mut [f64],
    ) {
        let p = mean.len();
        self.reset(p);
        let m = rule.len();
        counter[..p].fill(0);
        loop {
            let mut w = 1.0;
            for i in 0..p {
                z[i] = rule.nodes[counter[i]];
                w *= rule.weights[counter[i]];
            }
            for i in 0..p {
                let mut s = mean[i];
                for k in 0..=i {
                    s += chol[i * p + k] * z[k];
                }
                self.points.push(s);
            }
            self.weights.push(w);
            // odometer increment
            let mut d = 0;
            loop {
                if d == p {
                    return;
                }
                counter[d] += 1;
                if counter[d] < m {
                    break;
                }
                counter[d] = 0;
                d += 1;
            }
        }
    }

    /// `samples` draws from N(μ, L Lᵀ) with equal weights, standardized so
    /// the point set reproduces μ and L Lᵀ exactly.
    ///
    /// `scratch` holds at least `p + 2p²` values.
    pub(crate) fn fill_monte_carlo(
        &mut self,
        mean: &[f64],
        chol: &[f64],
        samples: usize,
        rng: &mut RngStream,
        z: &mut [f64],
        scratch: &mut [f64],
    ) {
        let p = mean.len();
        self.reset(p);
        let w = 1.0 / samples as f64;
        for _ in 0..samples {
            for _ in 0..p {
                self.points.push(StandardNormal.sample(rng));
            }
            self.weights.push(w);
        }
        let (zbar, rest) = scratch.split_at_mut(p);
        let (s, rest) = rest.split_at_mut(p * p);
        let ls = &mut rest[..p * p];
        zbar.fill(0.0);
        for x in self.points.chunks_exact(p.max(1)) {
            for i in 0..p {
                zbar[i] += w * x[i];
            }
        }
        s.fill(0.0);
        for x in self.points.chunks_exact(p.max(1)) {
            for i in 0..p {
                for j in 0..=i {
                    s[i * p + j] += w * (x[i] - zbar[i]) * (x[j] - zbar[j]);
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                s[j * p + i] = s[i * p + j];
            }
        }
        let whiten = samples > p && linalg::cholesky(s, ls, p);
        for x in self.points.chunks_exact_mut(p.max(1)) {
            if whiten {
                // forward solve Ls·u = x − z̄
                for i in 0..p {
                    let mut v = x[i] - zbar[i];
                    for k in 0..i {
                        v -= ls[i * p + k] * z[k];
                    }
                    z[i] = v / ls[i * p + i];
                }
            } else {
                z[..p].copy_from_slice(x);
            }
            for i in 0..p {
                let mut v = mean[i];
                for k in 0..=i {
                    v += chol[i * p + k] * z[k];
                }
                x[i] = v;
            }
        }
    }
}

fn factor(mean: &[f64], cov: &[f64]) -> Result<Vec<f64>> {
    let p = mean.len();
    if cov.len() != p * p {
        return Err(Error::DimensionMismatch {
            what: "covariance",
            expected: p * p,
            got: cov.len(),
        });
    }
    let mut sym = cov.to_vec();
    let mut chol = vec![0.0; p * p];
    if !linalg::stabilize(&mut sym, &mut chol, p) {
        return Err(Error::SingularCovariance);
    }
    Ok(chol)
}

/// The 2p unscented points μ ± (√(pΣ))_j with uniform weights 1/(2p).
pub fn unscented_points(mean: &[f64], cov: &[f64]) -> Result<SigmaPoints> {
    let chol = factor(mean, cov)?;
    let mut pts = SigmaPoints::with_capacity(mean.len(), 2 * mean.len());
    pts.fill_unscented(mean, &chol);
    Ok(pts)
}

/// Tensor-grid Gauss-Hermite points with `points` nodes per dimension.
pub fn gauss_hermite_points(mean: &[f64], cov: &[f64], points: usize) -> Result<SigmaPoints> {
    gauss_hermite_points_with_budget(mean, cov, points, DEFAULT_POINT_BUDGET)
}

pub fn gauss_hermite_points_with_budget(
    mean: &[f64],
    cov: &[f64],
    points: usize,
    budget: usize,
) -> Result<SigmaPoints> {
    let p = mean.len();
    let total = grid_size(points, p).filter(|&n| n <= budget).ok_or(Error::PointBudget {
        points: grid_size(points, p).unwrap_or(usize::MAX),
        budget,
    })?;
    let chol = factor(mean, cov)?;
    let rule = GaussHermiteRule::new(points);
    let mut pts = SigmaPoints::with_capacity(p, total);
    let mut counter = vec![0; p];
    let mut z = vec![0.0; p];
    pts.fill_gauss_hermite(mean, &chol, &rule, &mut counter, &mut z);
    Ok(pts)
}

pub(crate) fn grid_size(points: usize, dim: usize) -> Option<usize> {
    points.checked_pow(u32::try_from(dim).ok()?)
}

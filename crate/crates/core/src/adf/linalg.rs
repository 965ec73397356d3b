//! Small dense row-major helpers for p×p parameter covariances.

/// Lower Cholesky factor of `a` written into `l`. Returns false when `a` is
/// not numerically positive definite.
pub(crate) fn cholesky(a: &[f64], l: &mut [f64], p: usize) -> bool {
    debug_assert_eq!(a.len(), p * p);
    debug_assert_eq!(l.len(), p * p);
    l.fill(0.0);
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return false;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    true
}

pub(crate) fn symmetrize(a: &mut [f64], p: usize) {
    for i in 0..p {
        for j in 0..i {
            let v = 0.5 * (a[i * p + j] + a[j * p + i]);
            a[i * p + j] = v;
            a[j * p + i] = v;
        }
    }
}

pub(crate) fn trace(a: &[f64], p: usize) -> f64 {
    (0..p).map(|i| a[i * p + i]).sum()
}

/// Symmetrizes `cov` and factors it into `chol`, adding diagonal jitter
/// ε = 1e-9·trace/p (growing tenfold per retry) only when the plain factor
/// fails. Returns false when no jitter level makes it positive definite.
pub(crate) fn stabilize(cov: &mut [f64], chol: &mut [f64], p: usize) -> bool {
    symmetrize(cov, p);
    if cholesky(cov, chol, p) {
        return true;
    }
    let tr = trace(cov, p);
    if !(tr > 0.0) || !tr.is_finite() {
        return false;
    }
    let mut eps = 1e-9 * tr / p as f64;
    for _ in 0..8 {
        for i in 0..p {
            cov[i * p + i] += eps;
        }
        if cholesky(cov, chol, p) {
            return true;
        }
        eps *= 10.0;
    }
    false
}

/// out = l · z for lower-triangular `l`.
#[inline]
pub(crate) fn lower_mul(l: &[f64], z: &[f64], out: &mut [f64], p: usize) {
    for i in 0..p {
        let mut s = 0.0;
        for k in 0..=i {
            s += l[i * p + k] * z[k];
        }
        out[i] = s;
    }
}

/// log N(x; mean, L Lᵀ) given the lower Cholesky factor.
pub(crate) fn gaussian_logpdf_chol(x: &[f64], mean: &[f64], l: &[f64], p: usize) -> f64 {
    const LN_2PI: f64 = 1.837_877_066_409_345_5;
    // forward substitution, accumulated without a scratch buffer
    let mut quad = 0.0;
    let mut log_det = 0.0;
    let mut z = [0.0f64; 16];
    let mut heap;
    let z: &mut [f64] = if p <= 16 {
        &mut z[..p]
    } else {
        heap = vec![0.0; p];
        &mut heap
    };
    for i in 0..p {
        let mut s = x[i] - mean[i];
        for k in 0..i {
            s -= l[i * p + k] * z[k];
        }
        z[i] = s / l[i * p + i];
        quad += z[i] * z[i];
        log_det += l[i * p + i].ln();
    }
    -0.5 * quad - log_det - 0.5 * p as f64 * LN_2PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let mut l = [0.0; 9];
        assert!(cholesky(&a, &mut l, 3));
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((v - a[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        let mut l = [0.0; 4];
        assert!(!cholesky(&a, &mut l, 2));
    }

    #[test]
    fn stabilize_leaves_pd_matrix_untouched() {
        let mut a = [2.0, 0.5, 0.5, 1.0];
        let mut l = [0.0; 4];
        assert!(stabilize(&mut a, &mut l, 2));
        assert_eq!(a, [2.0, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn stabilize_repairs_semidefinite() {
        let mut a = [1.0, 1.0, 1.0, 1.0];
        let mut l = [0.0; 4];
        assert!(stabilize(&mut a, &mut l, 2));
        assert!(a[0] > 1.0);
    }

    #[test]
    fn stabilize_gives_up_on_zero() {
        let mut a = [0.0; 4];
        let mut l = [0.0; 4];
        assert!(!stabilize(&mut a, &mut l, 2));
    }

    #[test]
    fn logpdf_matches_scalar_formula() {
        let l = [2.0];
        let v = gaussian_logpdf_chol(&[1.0], &[0.0], &l, 1);
        let expected = crate::model::normal_logpdf(1.0, 0.0, 2.0);
        assert!((v - expected).abs() < 1e-14);
    }
}

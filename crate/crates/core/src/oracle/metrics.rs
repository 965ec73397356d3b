use crate::error::{Error, Result};

/// Lower bound applied to estimate entries before renormalizing.
pub const KL_FLOOR: f64 = 1e-12;

/// `Σ_i KL(exact_i ‖ estimate_i)` over per-cell tables, in nats.
pub fn kl_factorized(estimate: &[Vec<f64>], exact: &[Vec<f64>]) -> Result<f64> {
    if estimate.len() != exact.len() {
        return Err(Error::DimensionMismatch {
            what: "KL tables",
            expected: exact.len(),
            got: estimate.len(),
        });
    }
    let mut total = 0.0;
    for (q, p) in estimate.iter().zip(exact) {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                what: "KL table",
                expected: p.len(),
                got: q.len(),
            });
        }
        let z: f64 = q.iter().map(|v| v.max(KL_FLOOR)).sum();
        for (&pi, &qi) in p.iter().zip(q) {
            if pi > 0.0 {
                total += pi * (pi / (qi.max(KL_FLOOR) / z)).ln();
            }
        }
    }
    Ok(total.max(0.0))
}

/// Mean squared error of scalar estimates against `truth`.
pub fn mse(estimates: &[f64], truth: f64) -> f64 {
    if estimates.is_empty() {
        return f64::NAN;
    }
    estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64
}

/// Largest per-table total-variation distance.
pub fn total_variation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| 0.5 * p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_tables_have_zero_kl() {
        let t = vec![vec![0.3, 0.7], vec![0.5, 0.5]];
        assert_eq!(kl_factorized(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_against_uniform_is_ln2_per_cell() {
        let exact = vec![vec![1.0, 0.0]; 3];
        let est = vec![vec![0.5, 0.5]; 3];
        assert!((kl_factorized(&est, &exact).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn floor_keeps_kl_finite() {
        let kl = kl_factorized(&[vec![1.0, 0.0]], &[vec![0.5, 0.5]]).unwrap();
        assert!(kl.is_finite() && kl > 10.0);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[-0.5, -0.5], -0.5), 0.0);
        assert_eq!(mse(&[0.5, -1.5], -0.5), 1.0);
        assert!(mse(&[], 0.0).is_nan());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ObsVector;
use crate::models::SlamModel;

/// Largest joint (map, location) space the exact recursion accepts by default.
pub const DEFAULT_SLAM_BUDGET: usize = 1 << 20;

/// Exact posterior of a discrete-parameter model after the last observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactDiscretePosterior {
    /// One label distribution per cell.
    pub marginals: Vec<Vec<f64>>,
    /// Location distribution at the final step.
    pub location: Vec<f64>,
    /// `ln p(y_{0:T})`.
    pub log_evidence: f64,
    /// Joint masses indexed `map_index * cells + location`, where the map
    /// index reads cell 0 as the least significant base-`labels` digit.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub joint: Option<Vec<f64>>,
}

/// HMM forward recursion over the joint (map, location) chain.
///
/// Fails with [`Error::OracleBudget`] when `labels^cells · cells` exceeds
/// `budget`.
pub fn slam_exact_forward(
    model: &SlamModel,
    observations: &[ObsVector],
    budget: usize,
    keep_joint: bool,
) -> Result<ExactDiscretePosterior> {
    let (nl, no) = (model.cells(), model.labels());
    let maps = u32::try_from(nl)
        .ok()
        .and_then(|e| no.checked_pow(e))
        .filter(|m| m.checked_mul(nl).is_some_and(|s| s <= budget));
    let Some(maps) = maps else {
        let states = u32::try_from(nl)
            .ok()
            .and_then(|e| no.checked_pow(e))
            .and_then(|m| m.checked_mul(nl))
            .unwrap_or(usize::MAX);
        return Err(Error::OracleBudget { states, budget });
    };
    for y in observations {
        if y.len() != 1 || !(y[0] >= 0.0 && (y[0] as usize) < no) {
            return Err(Error::Model(format!("SLAM observation {:?} is not a label", &y[..])));
        }
    }

    // labels of every map, decoded once
    let mut labels = vec![0.0; maps * nl];
    for m in 0..maps {
        let mut r = m;
        for c in 0..nl {
            labels[m * nl + c] = (r % no) as f64;
            r /= no;
        }
    }

    let mut alpha = vec![1.0 / (maps * nl) as f64; maps * nl];
    let mut next = vec![0.0; maps * nl];
    let mut log_evidence = 0.0;
    for (t, y) in observations.iter().enumerate() {
        if t > 0 {
            let action = model.action_at(t);
            next.fill(0.0);
            for m in 0..maps {
                for l in 0..nl {
                    let a = alpha[m * nl + l];
                    if a == 0.0 {
                        continue;
                    }
                    for (to, p) in model.transition(l, action) {
                        next[m * nl + to] += a * p;
                    }
                }
            }
            std::mem::swap(&mut alpha, &mut next);
        }
        let label = y[0] as usize;
        let mut z = 0.0;
        for m in 0..maps {
            let map = &labels[m * nl..(m + 1) * nl];
            for l in 0..nl {
                let v = &mut alpha[m * nl + l];
                *v *= model.observation_prob(l, label, map);
                z += *v;
            }
        }
        if !(z > 0.0) {
            return Err(Error::TotalDegeneracy { t });
        }
        log_evidence += z.ln();
        alpha.iter_mut().for_each(|v| *v /= z);
    }

    let mut marginals = vec![vec![0.0; no]; nl];
    let mut location = vec![0.0; nl];
    for m in 0..maps {
        for l in 0..nl {
            let a = alpha[m * nl + l];
            location[l] += a;
            for c in 0..nl {
                marginals[c][labels[m * nl + c] as usize] += a;
            }
        }
    }
    Ok(ExactDiscretePosterior {
        marginals,
        location,
        log_evidence,
        joint: keep_joint.then_some(alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, RngStream};
    use crate::models::SlamConfig;

    #[test]
    fn no_observations_leave_the_prior() {
        let m = SlamModel::small();
        let post = slam_exact_forward(&m, &[], DEFAULT_SLAM_BUDGET, false).unwrap();
        for t in &post.marginals {
            assert_eq!(t, &vec![0.5, 0.5]);
        }
        assert_eq!(post.log_evidence, 0.0);
    }

    #[test]
    fn noiseless_sweep_identifies_the_map() {
        let cfg = SlamConfig {
            cells: 4,
            p_move: 1.0,
            p_obs: 1.0,
            actions: Some("L L L R R R".into()),
            ..SlamConfig::small()
        };
        let m = SlamModel::new(&cfg).unwrap();
        let truth = crate::model::ParamVector::discrete(&[1, 0, 0, 1]);
        let traj = simulate(&m, &truth, m.steps(), &mut RngStream::new(5, 0)).unwrap();
        let post = slam_exact_forward(&m, &traj.observations, DEFAULT_SLAM_BUDGET, false).unwrap();
        for (c, t) in post.marginals.iter().enumerate() {
            assert!((t[truth[c] as usize] - 1.0).abs() < 1e-12, "cell {c}: {t:?}");
        }
    }

    #[test]
    fn joint_stays_normalized_and_large_instance_is_refused() {
        let m = SlamModel::small();
        let traj = simulate(&m, &m.default_map(), m.steps(), &mut RngStream::new(1, 0)).unwrap();
        let post = slam_exact_forward(&m, &traj.observations, DEFAULT_SLAM_BUDGET, true).unwrap();
        let total: f64 = post.joint.unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for t in &post.marginals {
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let big = SlamModel::large();
        assert!(matches!(
            slam_exact_forward(&big, &traj.observations, DEFAULT_SLAM_BUDGET, false),
            Err(Error::OracleBudget { .. })
        ));
    }
}

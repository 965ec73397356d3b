use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::rows::{ResultRow, SCHEMA_VERSION};
use super::run::{load_model, Dataset};
use crate::error::{Error, Result};
use crate::models::BenchmarkModel;
use crate::model::DynamicModel;
use crate::oracle::{
    grid_posterior_pf, kalman_filter, linspace, slam_exact_forward, ExactDiscretePosterior, GridPosterior,
    KalmanResult, PfLikelihood,
};

/// Output of the `oracle` verb.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema: u32,
    pub model: String,
    /// `exact`, `grid-kalman`, `kalman` or `grid-pf`.
    pub kind: String,
    pub data_seed: Option<u64>,
    pub truth: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<ExactDiscretePosterior>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<GridPosterior>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kalman: Option<KalmanResult>,
}

fn row(cfg: &ExperimentConfig, kind: &str, data: &Dataset, t: usize) -> ResultRow {
    ResultRow {
        schema: SCHEMA_VERSION,
        run_id: format!("{kind}-s{}", data.seed.map_or_else(|| "file".into(), |s| s.to_string())),
        seed: data.seed.unwrap_or(0),
        algorithm: kind.into(),
        model: cfg.model.clone(),
        n: 0,
        m: 0,
        l: 0,
        t,
        theta_mean: vec![],
        theta_sd: vec![],
        state_mean: vec![],
        ess: None,
        log_evidence: None,
        mse: None,
        kl: None,
        wall_ms: 0.0,
        allocs: 0,
        adf_updates: 0,
    }
}

fn table_moments(tables: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    tables
        .iter()
        .map(|t| {
            let m: f64 = t.iter().enumerate().map(|(v, q)| v as f64 * q).sum();
            let var: f64 = t.iter().enumerate().map(|(v, q)| q * (v as f64 - m).powi(2)).sum();
            (m, var.sqrt())
        })
        .unzip()
}

/// Runs the reference computation that applies to the configured model on
/// the dataset of the first seed: the exact forward recursion (SLAM), a
/// Kalman grid posterior (linear-Gaussian) or a PF-likelihood grid (SIN).
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<(Vec<ResultRow>, OracleReport)> {
    cfg.validate()?;
    let model = load_model(cfg)?;
    let data = Dataset::build(cfg, &model, cfg.seeds[0])?;
    let obs = &data.trajectory.observations;
    let o = &cfg.oracle;
    let mut report = OracleReport {
        schema: SCHEMA_VERSION,
        model: cfg.model.clone(),
        kind: String::new(),
        data_seed: data.seed,
        truth: data.truth.clone(),
        exact: None,
        grid: None,
        kalman: None,
    };
    let mut rows = vec![];
    match &model {
        BenchmarkModel::Slam(m) => {
            report.kind = "exact".into();
            let exact = slam_exact_forward(m, obs, o.budget, false)?;
            let mut prev = 0.0;
            for t in 0..obs.len() {
                let e = slam_exact_forward(m, &obs[..=t], o.budget, false)?;
                let (mean, sd) = table_moments(&e.marginals);
                let mut r = row(cfg, "exact", &data, t);
                r.theta_mean = mean;
                r.theta_sd = sd;
                r.state_mean = vec![e.location.iter().enumerate().map(|(l, p)| l as f64 * p).sum()];
                r.log_evidence = Some(e.log_evidence - prev);
                r.kl = Some(0.0);
                prev = e.log_evidence;
                rows.push(r);
            }
            report.exact = Some(exact);
        }
        BenchmarkModel::LinearGaussian(m) if m.config().known_theta.is_some() => {
            report.kind = "kalman".into();
            let k = kalman_filter(m, 0.0, obs)?;
            for t in 0..obs.len() {
                let mut r = row(cfg, "kalman", &data, t);
                r.state_mean = vec![k.means[t]];
                r.log_evidence = Some(k.step_log_likelihood[t]);
                rows.push(r);
            }
            report.kalman = Some(k);
        }
        BenchmarkModel::LinearGaussian(m) => {
            report.kind = "grid-kalman".into();
            let grid = linspace(o.grid.0, o.grid.1, o.grid_points);
            let runs = grid
                .par_iter()
                .map(|&g| kalman_filter(m, g, obs))
                .collect::<Result<Vec<_>>>()?;
            let mut cum: Vec<f64> = grid.iter().map(|&g| m.param_prior_logdensity(&[g])).collect();
            let mut final_grid = None;
            for t in 0..obs.len() {
                for (c, k) in cum.iter_mut().zip(&runs) {
                    *c += k.step_log_likelihood[t];
                }
                let max = cum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut w: Vec<f64> = cum.iter().map(|c| (c - max).exp()).collect();
                let z: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= z);
                let mean: f64 = grid.iter().zip(&w).map(|(g, w)| g * w).sum();
                let var: f64 = grid.iter().zip(&w).map(|(g, w)| w * (g - mean).powi(2)).sum();
                let mut r = row(cfg, "grid-kalman", &data, t);
                r.theta_mean = vec![mean];
                r.theta_sd = vec![var.sqrt()];
                r.state_mean = vec![runs.iter().zip(&w).map(|(k, w)| w * k.means[t]).sum()];
                rows.push(r);
                if t + 1 == obs.len() {
                    final_grid = Some(GridPosterior {
                        grid: grid.clone(),
                        masses: w,
                        log_likelihood: runs.iter().map(|k| k.log_likelihood).collect(),
                        log_likelihood_se: None,
                    });
                }
            }
            report.grid = final_grid;
        }
        BenchmarkModel::Sin(m) => {
            report.kind = "grid-pf".into();
            let pf = PfLikelihood {
                particles: o.particles,
                replications: o.replications,
                seed: cfg.seeds[0],
            };
            let post = grid_posterior_pf(m, obs, &linspace(o.grid.0, o.grid.1, o.grid_points), &pf)?;
            let mut r = row(cfg, "grid-pf", &data, obs.len() - 1);
            r.theta_mean = vec![post.mean()];
            r.theta_sd = vec![post.variance().sqrt()];
            r.mse = data.truth.as_ref().map(|t| (post.mean() - t[0]).powi(2));
            rows.push(r);
            report.grid = Some(post);
        }
    }
    if rows.is_empty() {
        return Err(Error::Config("no oracle applies".into()));
    }
    Ok((rows, report))
}

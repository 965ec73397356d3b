//! Filters checked against exact references.

use apinfer::adf::{ApproxFamily, MomentScheme, ParamApprox};
use apinfer::filter::{bootstrap_pf_run, liu_west_run, Algorithm, Filter, FilterConfig};
use apinfer::model::{simulate, Dims, DynamicModel, ObsVector, ParamSpace, ParamVector, RngStream};
use apinfer::models::{LinearGaussianConfig, LinearGaussianModel, LG_TRUE_THETA};
use apinfer::oracle::{grid_posterior_lg, kalman_filter, linspace, total_variation};
use rand::Rng;

fn lg_data(model: &LinearGaussianModel, steps: usize, seed: u64) -> Vec<ObsVector> {
    let truth = match model.config().known_theta {
        Some(_) => ParamVector::continuous(vec![]),
        None => ParamVector::continuous(vec![LG_TRUE_THETA]),
    };
    simulate(model, &truth, steps, &mut RngStream::new(seed, 7)).unwrap().observations
}

#[test]
fn one_api_step_is_the_conjugate_posterior_along_the_sampled_path() {
    let (sv, prior_sd) = (2.0, 1.0);
    let m = LinearGaussianModel::new(LinearGaussianConfig {
        trans_sd: sv,
        prior_sd,
        prior_mean: 0.2,
        ..LinearGaussianConfig::default()
    });
    let obs = lg_data(&m, 1, 3);
    for seed in 0..5 {
        let cfg = FilterConfig::new(1, seed).with_scheme(MomentScheme::GaussHermite { points: 60 });
        let mut f = Filter::new(&m, Algorithm::Api, cfg).unwrap();
        f.initialize(&obs[0]).unwrap();
        let x0 = f.particle_state(0)[0];
        f.step(&obs[1]).unwrap();
        let x1 = f.particle_state(0)[0];
        let Some(ParamApprox::Gaussian(q)) = f.particle_approx(0) else { panic!("expected a Gaussian") };
        // N(θ; 0.2, 1) · N(x1; θ x0, 2²)
        let prec = 1.0 / prior_sd.powi(2) + x0 * x0 / (sv * sv);
        let mean = (0.2 / prior_sd.powi(2) + x0 * x1 / (sv * sv)) / prec;
        assert!((q.mean()[0] - mean).abs() < 1e-6, "{} vs {mean}", q.mean()[0]);
        assert!((q.cov()[0] - 1.0 / prec).abs() < 1e-6);
    }
}

#[test]
fn bootstrap_state_means_track_the_kalman_filter() {
    let m = LinearGaussianModel::state_only(0.8, 1.0, 0.5);
    let obs = lg_data(&m, 50, 1);
    let k = kalman_filter(&m, 0.0, &obs).unwrap();
    let n = 20_000;
    let r = bootstrap_pf_run(&m, &obs, &FilterConfig::new(n, 9)).unwrap();
    // The weighted mean has the variance of roughly ESS independent draws.
    let z: Vec<f64> = r
        .records
        .iter()
        .enumerate()
        .map(|(t, rec)| (rec.state_mean[0] - k.means[t]).abs() / (k.variances[t] / rec.stats.ess).sqrt())
        .collect();
    let worst = z.iter().cloned().fold(0.0, f64::max);
    assert!(worst <= 3.0, "largest deviation {worst:.2} standard errors");
}

#[test]
fn liu_west_without_shrinkage_is_the_bootstrap_filter() {
    let m = LinearGaussianModel::default();
    let obs = lg_data(&m, 60, 2);
    let cfg = FilterConfig {
        shrinkage: 1.0,
        ..FilterConfig::new(300, 4)
    };
    let lw = liu_west_run(&m, &obs, &cfg).unwrap();
    let pf = bootstrap_pf_run(&m, &obs, &cfg).unwrap();
    assert_eq!(lw.final_param, pf.final_param);
    for (a, b) in lw.records.iter().zip(&pf.records) {
        assert_eq!(a.state_mean, b.state_mean);
    }
}

#[test]
fn liu_west_is_close_to_the_grid_posterior_at_scale() {
    let m = LinearGaussianModel::default();
    let obs = lg_data(&m, 100, 5);
    let grid = grid_posterior_lg(&m, &obs, &linspace(-1.5, 1.5, 601)).unwrap();
    let r = liu_west_run(&m, &obs, &FilterConfig::new(10_000, 1)).unwrap();
    let est = r.param_mean()[0];
    assert!((est - grid.mean()).abs() < 0.1, "{est} vs {}", grid.mean());
}

#[test]
fn api_matches_the_grid_posterior_on_the_linear_gaussian_model() {
    let m = LinearGaussianModel::default();
    let obs = lg_data(&m, 200, 6);
    let grid = grid_posterior_lg(&m, &obs, &linspace(-1.5, 1.5, 601)).unwrap();
    let r = apinfer::filter::api_run(&m, &obs, &FilterConfig::new(2000, 2)).unwrap();
    let (est, sd) = (r.param_mean()[0], r.final_param.variances()[0].sqrt());
    let (gm, gsd) = (grid.mean(), grid.variance().sqrt());
    assert!((est - gm).abs() < gsd, "mean {est} vs {gm} (posterior sd {gsd})");
    assert!((sd / gsd - 1.0).abs() < 0.5, "sd {sd} vs {gsd}");
}

/// Three-state cycle whose stay probability is chosen by a discrete θ.
struct Cycle {
    space: ParamSpace,
    stay: [f64; 3],
}

const STAY: [f64; 3] = [0.9, 0.5, 0.1];
const HIT: f64 = 0.8;

impl Cycle {
    fn new(stay: [f64; 3]) -> Self {
        Self {
            space: ParamSpace::Discrete { cardinalities: vec![3] },
            stay,
        }
    }
    fn trans(&self, from: usize, to: usize, theta: usize) -> f64 {
        if to == from {
            self.stay[theta]
        } else if to == (from + 1) % 3 {
            1.0 - self.stay[theta]
        } else {
            0.0
        }
    }
    fn obs(&self, x: usize, y: usize) -> f64 {
        if x == y {
            HIT
        } else {
            (1.0 - HIT) / 2.0
        }
    }
}

impl DynamicModel for Cycle {
    fn name(&self) -> &str {
        "cycle"
    }
    fn dims(&self) -> Dims {
        Dims { param: 1, state: 1, obs: 1 }
    }
    fn param_space(&self) -> &ParamSpace {
        &self.space
    }
    fn sample_param_prior(&self, rng: &mut RngStream, out: &mut [f64]) {
        out[0] = rng.random_range(0..3) as f64;
    }
    fn param_prior_logdensity(&self, _: &[f64]) -> f64 {
        -(3f64.ln())
    }
    fn param_prior_tables(&self) -> Option<Vec<Vec<f64>>> {
        Some(vec![vec![1.0 / 3.0; 3]])
    }
    fn sample_initial_state(&self, rng: &mut RngStream, _: &[f64], out: &mut [f64]) {
        out[0] = rng.random_range(0..3) as f64;
    }
    fn initial_state_logdensity(&self, _: &[f64], _: &[f64]) -> f64 {
        -(3f64.ln())
    }
    fn sample_transition(&self, rng: &mut RngStream, _: usize, w: &[f64], th: &[f64], out: &mut [f64]) {
        let from = w[0] as usize;
        out[0] = if rng.random::<f64>() < self.stay[th[0] as usize] { from } else { (from + 1) % 3 } as f64;
    }
    fn transition_logdensity(&self, _: usize, x: &[f64], w: &[f64], th: &[f64]) -> f64 {
        self.trans(w[0] as usize, x[0] as usize, th[0] as usize).ln()
    }
    fn sample_observation(&self, rng: &mut RngStream, _: usize, x: &[f64], _: &[f64], out: &mut [f64]) {
        let x = x[0] as usize;
        out[0] = if rng.random::<f64>() < HIT { x } else { (x + 1 + rng.random_range(0..2)) % 3 } as f64;
    }
    fn observation_logdensity(&self, _: usize, y: &[f64], x: &[f64], _: &[f64]) -> f64 {
        self.obs(x[0] as usize, y[0] as usize).ln()
    }
    fn observation_depends_on_param(&self) -> bool {
        false
    }
}

/// Forward recursion over the 9 joint (θ, x) states.
fn cycle_posterior(m: &Cycle, obs: &[ObsVector]) -> Vec<f64> {
    let mut a = [[1.0 / 9.0; 3]; 3];
    for (t, y) in obs.iter().enumerate() {
        if t > 0 {
            let mut b = [[0.0; 3]; 3];
            for th in 0..3 {
                for from in 0..3 {
                    for to in 0..3 {
                        b[th][to] += a[th][from] * m.trans(from, to, th);
                    }
                }
            }
            a = b;
        }
        let mut z = 0.0;
        for row in a.iter_mut() {
            for (x, v) in row.iter_mut().enumerate() {
                *v *= m.obs(x, y[0] as usize);
                z += *v;
            }
        }
        a.iter_mut().flatten().for_each(|v| *v /= z);
    }
    a.iter().map(|r| r.iter().sum()).collect()
}

#[test]
fn exhaustive_discrete_api_converges_to_the_exact_posterior() {
    let m = Cycle::new(STAY);
    let obs = simulate(&m, &ParamVector::discrete(&[1]), 60, &mut RngStream::new(4, 0))
        .unwrap()
        .observations;
    let exact = cycle_posterior(&m, &obs);
    let cfg = FilterConfig::new(10_000, 3)
        .with_scheme(MomentScheme::MonteCarlo { samples: 3 })
        .with_family(ApproxFamily::FactorizedDiscrete);
    let r = apinfer::filter::api_run(&m, &obs, &cfg).unwrap();
    let est = r.final_param.marginals().unwrap().to_vec();
    let tv = total_variation(&est, &[exact.clone()]);
    assert!(tv < 0.05, "TV {tv}: {est:?} vs {exact:?}");
}

#[test]
fn factors_constant_in_theta_leave_the_prior_in_place() {
    let m = Cycle::new([0.6; 3]);
    let obs = simulate(&m, &ParamVector::discrete(&[1]), 30, &mut RngStream::new(4, 0)).unwrap().observations;
    let mut f = Filter::new(&m, Algorithm::Api, FilterConfig::new(200, 3)).unwrap();
    f.initialize(&obs[0]).unwrap();
    for y in &obs[1..] {
        f.step(y).unwrap();
    }
    for i in 0..200 {
        let Some(ParamApprox::Discrete(q)) = f.particle_approx(i) else { panic!("expected tables") };
        for v in q.marginal(0) {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}

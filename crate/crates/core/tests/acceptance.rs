//! Acceptance run. Prints one `criterion N: PASS|FAIL` line per criterion.
//!
//! Failures are reported, not raised, so the rest of the suite still runs;
//! set `APINFER_ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use apinfer::adf::{
    discrete_update, gauss_hermite_points, gaussian_update, mixture_update, unscented_points, ApproxFamily,
    FactorizedDiscreteApprox, GaussianApprox, MixtureApprox, MomentScheme,
};
use apinfer::filter::{
    api_run, bootstrap_pf_run, liu_west_run, pmmh_run, Algorithm, Filter, FilterConfig, PmmhConfig, RunResult,
};
use apinfer::model::{simulate, DynamicModel, ObsVector, ParamVector, RngStream};
use apinfer::models::{
    LinearGaussianModel, SinConfig, SinModel, SinVariant, SlamModel, LG_TRUE_THETA, SIN_BIMODAL_TRUE_THETA,
    SIN_TRUE_THETA,
};
use apinfer::oracle::{grid_posterior_lg, kalman_filter, kl_factorized, linspace, slam_exact_forward, DEFAULT_SLAM_BUDGET};
use rand::Rng;

struct Counting;

static ALLOCS: AtomicU64 = AtomicU64::new(0);

thread_local! {
    static COUNTING: Cell<bool> = const { Cell::new(false) };
}

fn note() {
    if COUNTING.try_with(Cell::get).unwrap_or(false) {
        ALLOCS.fetch_add(1, Ordering::Relaxed);
    }
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        note();
        System.alloc(layout)
    }
    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        note();
        System.alloc_zeroed(layout)
    }
    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        note();
        System.realloc(ptr, layout, new_size)
    }
    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn counted<R>(f: impl FnOnce() -> R) -> (R, u64) {
    COUNTING.with(|c| c.set(true));
    let before = ALLOCS.load(Ordering::Relaxed);
    let r = f();
    let after = ALLOCS.load(Ordering::Relaxed);
    COUNTING.with(|c| c.set(false));
    (r, after - before)
}

const STREAM_DATA: u64 = 32;
const SEEDS: u64 = 10;
const SLAM_SEEDS: u64 = 20;
const GH7: MomentScheme = MomentScheme::GaussHermite { points: 7 };

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, n: usize, pass: bool, detail: String) {
        println!("criterion {n}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(n);
        }
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn data<M: DynamicModel>(model: &M, truth: &ParamVector, steps: usize, seed: u64) -> Vec<ObsVector> {
    simulate(model, truth, steps, &mut RngStream::new(seed, STREAM_DATA)).unwrap().observations
}

fn ln_normal(x: f64, m: f64, var: f64) -> f64 {
    -0.5 * (x - m).powi(2) / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
}

fn conjugate(m0: f64, v0: f64, a: f64, s2: f64) -> (f64, f64) {
    let prec = 1.0 / v0 + 1.0 / s2;
    ((m0 / v0 + a / s2) / prec, 1.0 / prec)
}

/// Per-seed SIN runs shared by criteria 1, 2 and 9.
struct SinRuns {
    data: Vec<Vec<ObsVector>>,
    api: Vec<RunResult>,
    pf_elapsed: Vec<Duration>,
}

fn sin_runs() -> SinRuns {
    let model = SinModel::plain();
    let truth = ParamVector::continuous(vec![SIN_TRUE_THETA]);
    let mut out = SinRuns {
        data: vec![],
        api: vec![],
        pf_elapsed: vec![],
    };
    for s in 0..SEEDS {
        let obs = data(&model, &truth, 5000, s);
        let cfg = FilterConfig::new(1000, s).with_scheme(GH7);
        out.api.push(api_run(&model, &obs, &cfg).unwrap());
        out.pf_elapsed.push(bootstrap_pf_run(&model, &obs, &cfg).unwrap().elapsed);
        out.data.push(obs);
    }
    out
}

fn criterion_1(r: &mut Report, runs: &SinRuns) {
    let se: Vec<f64> = runs.api.iter().map(|a| (a.param_mean()[0] - SIN_TRUE_THETA).powi(2)).collect();
    let mse = se.iter().sum::<f64>() / se.len() as f64;
    let secs: f64 = runs.api.iter().map(|a| a.elapsed.as_secs_f64()).sum();
    r.line(1, mse <= 1e-3, format!("SIN api N=1000 GH7 T=5000, 10 seeds: MSE {mse:.3e} (<= 1e-3), {secs:.1} s total"));
}

fn criterion_2(r: &mut Report, runs: &SinRuns) {
    let model = SinModel::plain();
    let sq = |x: f64| (x - SIN_TRUE_THETA).powi(2);
    let (mut api, mut lw, mut pmmh) = (vec![], vec![], vec![]);
    let mut iters = vec![];
    for (s, obs) in runs.data.iter().enumerate() {
        let a = &runs.api[s];
        api.push(sq(a.param_mean()[0]));
        lw.push(sq(liu_west_run(&model, obs, &FilterConfig::new(1000, s as u64)).unwrap().param_mean()[0]));
        let p = pmmh_run(
            &model,
            obs,
            &PmmhConfig {
                particles: 1000,
                iterations: usize::MAX,
                time_budget: Some(a.elapsed),
                seed: s as u64,
                ..PmmhConfig::default()
            },
        )
        .unwrap();
        iters.push(p.iterations);
        pmmh.push(sq(p.mean[0]));
    }
    let wins = (0..api.len()).filter(|&i| api[i] < lw[i] && api[i] < pmmh[i]).count();
    let (ma, ml, mp) = (median(&api), median(&lw), median(&pmmh));
    let pass = wins >= 8 && ml >= 10.0 * ma && mp >= 10.0 * ma;
    r.line(
        2,
        pass,
        format!(
            "api beats both in {wins}/10 seeds (>= 8); median sq.err api {ma:.2e}, lw {ml:.2e} ({:.1}x), pmmh {mp:.2e} ({:.1}x) (>= 10x); pmmh ran {:?} iterations",
            ml / ma,
            mp / ma,
            iters
        ),
    );
}

/// Total mixture weight within 0.15 of `+target` and of `-target`.
fn mode_masses(atoms: &[(f64, Vec<f64>)], target: f64) -> (f64, f64) {
    let total: f64 = atoms.iter().map(|a| a.0).sum();
    let near = |c: f64| atoms.iter().filter(|a| (a.1[0] - c).abs() <= 0.15).map(|a| a.0).sum::<f64>() / total;
    (near(target), near(-target))
}

fn two_modes(atoms: &[(f64, Vec<f64>)]) -> bool {
    let (p, n) = mode_masses(atoms, SIN_BIMODAL_TRUE_THETA);
    p >= 0.2 && n >= 0.2
}

fn criterion_3(r: &mut Report) {
    let model = SinModel::bimodal();
    let truth = ParamVector::continuous(vec![SIN_BIMODAL_TRUE_THETA]);
    let steps = 1000;
    let (mut ten, mut two) = (0, 0);
    let mut masses = vec![];
    for s in 0..SEEDS {
        let obs = data(&model, &truth, steps, s);
        for (l, hits) in [(10, &mut ten), (2, &mut two)] {
            let cfg = FilterConfig::new(1000, s).with_scheme(GH7).with_family(ApproxFamily::Mixture { components: l });
            let res = api_run(&model, &obs, &cfg).unwrap();
            if two_modes(&res.param_atoms) {
                *hits += 1;
            }
            if l == 10 {
                let (p, n) = mode_masses(&res.param_atoms, SIN_BIMODAL_TRUE_THETA);
                masses.push(format!("{p:.2}/{n:.2}"));
            }
        }
    }
    let lw_seeds = 3;
    let lw_two = (0..lw_seeds)
        .filter(|&s| {
            let obs = data(&model, &truth, steps, s);
            two_modes(&liu_west_run(&model, &obs, &FilterConfig::new(100_000, s)).unwrap().param_atoms)
        })
        .count();
    let pass = ten >= 8 && lw_two == 0;
    r.line(
        3,
        pass,
        format!(
            "bimodal T={steps}: L=10 two modes in {ten}/10 (>= 8), masses +/- {masses:?}; L=2 in {two}/10 (may fail); liu-west N=1e5 two modes in {lw_two}/{lw_seeds} (expected 0)"
        ),
    );
}

fn slam_kl(exact: &[Vec<f64>], r: &RunResult) -> f64 {
    kl_factorized(r.final_param.marginals().unwrap(), exact).unwrap()
}

fn criteria_4_and_5(r: &mut Report) {
    let model = SlamModel::small();
    let truth = model.default_map();
    let configs: [(&str, usize, usize); 6] = [
        ("api", 100, 50),
        ("api", 500, 50),
        ("api", 1500, 50),
        ("api", 1500, 5),
        ("api", 1500, 200),
        ("pf", 1500, 0),
    ];
    let mut kl = vec![vec![]; configs.len()];
    for s in 0..SLAM_SEEDS {
        let obs = data(&model, &truth, model.steps(), s);
        let exact = slam_exact_forward(&model, &obs, DEFAULT_SLAM_BUDGET, false).unwrap().marginals;
        for (k, &(alg, n, m)) in configs.iter().enumerate() {
            let res = if alg == "pf" {
                bootstrap_pf_run(&model, &obs, &FilterConfig::new(n, s)).unwrap()
            } else {
                api_run(&model, &obs, &FilterConfig::new(n, s).with_scheme(MomentScheme::MonteCarlo { samples: m })).unwrap()
            };
            kl[k].push(slam_kl(&exact, &res));
        }
    }
    let med: Vec<f64> = kl.iter().map(|v| median(v)).collect();
    let (n100, n500, n1500, m5, m200, pf) = (med[0], med[1], med[2], med[3], med[4], med[5]);
    let monotone = n100 > n500 && n500 > n1500;
    let pass4 = n1500 <= 0.1 && monotone && pf >= 5.0 * n1500;
    r.line(
        4,
        pass4,
        format!(
            "SLAM small, 20 seeds, median KL: api N=100/500/1500 (M=50) {n100:.3}/{n500:.3}/{n1500:.3} (<= 0.1, decreasing); pf N=1500 {pf:.3} = {:.1}x api (>= 5x)",
            pf / n1500
        ),
    );
    let early = m5 - n1500;
    let late = n1500 - m200;
    let pass5 = n100 >= n500 && n500 >= n1500 && late < 0.2 * early;
    r.line(
        5,
        pass5,
        format!(
            "non-increasing in N: {}; N=1500 median KL M=5 {m5:.3}, M=50 {n1500:.3}, M=200 {m200:.3}; gain 50->200 {late:.3} vs 0.2 x gain 5->50 {:.3}",
            n100 >= n500 && n500 >= n1500,
            0.2 * early
        ),
    );
}

/// Self-normalised importance-sampling standard errors of the tilted mean
/// and variance for q = N(0, 1), t = N(θ; a, s²), by quadrature on a grid.
fn is_standard_errors(a: f64, s2: f64, samples: usize) -> (f64, f64) {
    let (m, v) = conjugate(0.0, 1.0, a, s2);
    let (lo, hi, n) = (-12.0, 12.0, 200_001);
    let h = (hi - lo) / (n - 1) as f64;
    let (mut z, mut e_mean, mut e_var) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let th = lo + k as f64 * h;
        let q = ln_normal(th, 0.0, 1.0).exp();
        let t = ln_normal(th, a, s2).exp();
        z += q * t * h;
        e_mean += q * t * t * (th - m).powi(2) * h;
        e_var += q * t * t * ((th - m).powi(2) - v).powi(2) * h;
    }
    let n = samples as f64;
    ((e_mean / (z * z) / n).sqrt(), (e_var / (z * z) / n).sqrt())
}

fn criterion_6(r: &mut Report) {
    let mut rng = RngStream::new(0, 0);
    let q = GaussianApprox::scalar(0.0, 1.0).unwrap();
    let t = |th: &[f64]| ln_normal(th[0], 1.0, 1.0);
    let (m, v) = conjugate(0.0, 1.0, 1.0, 1.0);

    let gh = gaussian_update(&q, &t, GH7, &mut rng).unwrap().approx;
    let gh_err = (gh.mean()[0] - m).abs().max((gh.cov()[0] - v).abs());

    let samples = 100_000;
    let (se_m, se_v) = is_standard_errors(1.0, 1.0, samples);
    let mc = gaussian_update(&q, &t, MomentScheme::MonteCarlo { samples }, &mut rng).unwrap().approx;
    let mc_z = ((mc.mean()[0] - m).abs() / se_m).max((mc.cov()[0] - v).abs() / se_v);

    let cards = [2usize, 3, 2, 4];
    let mut g = RngStream::new(11, 0);
    let tables: Vec<Vec<f64>> = cards
        .iter()
        .map(|&k| {
            let raw: Vec<f64> = (0..k).map(|_| g.random_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        })
        .collect();
    let joint: usize = cards.iter().product();
    let log_t: Vec<f64> = (0..joint).map(|_| g.random_range(-4.0..2.0)).collect();
    let index = |th: &[f64]| th.iter().zip(cards).fold(0, |idx, (v, k)| idx * k + *v as usize);
    let mut brute: Vec<Vec<f64>> = cards.iter().map(|&k| vec![0.0; k]).collect();
    let mut total = 0.0;
    for code in 0..joint {
        let mut rest = code;
        let mut vals = [0usize; 4];
        for i in (0..4).rev() {
            vals[i] = rest % cards[i];
            rest /= cards[i];
        }
        let w = vals.iter().enumerate().map(|(i, &v)| tables[i][v]).product::<f64>() * log_t[code].exp();
        total += w;
        for (i, &v) in vals.iter().enumerate() {
            brute[i][v] += w;
        }
    }
    let dq = FactorizedDiscreteApprox::new(tables).unwrap();
    let up = discrete_update(&dq, &|th: &[f64]| log_t[index(th)], joint, &mut rng).unwrap().approx;
    let disc_err = up
        .tables()
        .iter()
        .zip(&brute)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y / total).abs()))
        .fold(0.0, f64::max);

    let f = |th: &[f64]| (2.0 * th[0]).sin() - 0.5 * th[0] * th[0];
    let gq = GaussianApprox::scalar(0.4, 0.8).unwrap();
    let mix = MixtureApprox::new(vec![1.0], vec![gq.clone()]).unwrap();
    let a = gaussian_update(&gq, &f, GH7, &mut RngStream::new(3, 1)).unwrap().approx;
    let b = mixture_update(&mix, &f, GH7, &mut RngStream::new(3, 1)).unwrap().approx;
    let mix_err = (a.mean()[0] - b.components()[0].mean()[0]).abs().max((a.cov()[0] - b.components()[0].cov()[0]).abs());

    let pass = gh_err <= 1e-6 && mc_z <= 3.0 && disc_err <= 1e-12 && mix_err <= 1e-10;
    r.line(
        6,
        pass,
        format!(
            "GH7 vs conjugate (q=N(0,1), t=N(θ;1,1)) max err {gh_err:.2e} (<= 1e-6); MC 1e5 {mc_z:.2} SE (<= 3); discrete vs brute force {disc_err:.1e} (<= 1e-12); L=1 mixture vs gaussian {mix_err:.1e} (<= 1e-10)"
        ),
    );
}

fn normal_moment(m: f64, s: f64, k: u32) -> f64 {
    let df = |n: i64| (1..=n).rev().step_by(2).map(|x| x as f64).product::<f64>();
    let binom = |n: u32, j: u32| (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    (0..=k)
        .step_by(2)
        .map(|j| binom(k, j) * m.powi((k - j) as i32) * s.powi(j as i32) * df(j as i64 - 1))
        .sum()
}

fn criterion_7(r: &mut Report) {
    let (m, s) = (0.7, 1.3);
    let mut worst: f64 = 0.0;
    for points in [2usize, 4, 7] {
        let pts = gauss_hermite_points(&[m], &[s * s], points).unwrap();
        for k in 0..=(2 * points as u32 - 1) {
            let got: f64 = pts.iter().map(|(x, w)| w * x[0].powi(k as i32)).sum();
            let want = normal_moment(m, s, k);
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    let mean = [1.0, -2.0, 0.5];
    let cov = [2.0, 0.3, -0.4, 0.3, 1.0, 0.2, -0.4, 0.2, 0.7];
    let (um, uc) = unscented_points(&mean, &cov).unwrap().moments();
    let ut = um.iter().zip(mean).chain(uc.iter().zip(cov)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.line(
        7,
        worst <= 1e-9 && ut <= 1e-12,
        format!("GH M in {{2,4,7}} max relative moment error {worst:.1e} (<= 1e-9); unscented mean/cov error {ut:.1e} (<= 1e-12)"),
    );
}

fn criterion_8(r: &mut Report) {
    let model = LinearGaussianModel::default();
    let truth = ParamVector::continuous(vec![LG_TRUE_THETA]);
    let obs = data(&model, &truth, 100, 0);
    let grid = grid_posterior_lg(&model, &obs, &linspace(-1.5, 1.5, 601)).unwrap();
    let chain = pmmh_run(
        &model,
        &obs,
        &PmmhConfig {
            particles: 50,
            iterations: 5000,
            ..PmmhConfig::default()
        },
    )
    .unwrap();
    let se = chain.mean_standard_error()[0];
    let pmmh_z = (chain.mean[0] - grid.mean()).abs() / se;

    let lg = LinearGaussianModel::state_only(0.8, 1.0, 0.5);
    let obs = data(&lg, &ParamVector::continuous(vec![]), 50, 1);
    let k = kalman_filter(&lg, 0.0, &obs).unwrap();
    let n = 20_000;
    let pf = bootstrap_pf_run(&lg, &obs, &FilterConfig::new(n, 9)).unwrap();
    let (mut naive, mut by_ess): (f64, f64) = (0.0, 0.0);
    for (t, rec) in pf.records.iter().enumerate() {
        let d = (rec.state_mean[0] - k.means[t]).abs();
        naive = naive.max(d / (k.variances[t] / n as f64).sqrt());
        by_ess = by_ess.max(d / (k.variances[t] / rec.stats.ess).sqrt());
    }
    r.line(
        8,
        pmmh_z <= 3.0 && naive <= 3.0,
        format!(
            "pmmh LG N=50 x 5000: mean {:.4} vs grid {:.4}, {pmmh_z:.2} batch-means SE (<= 3); pf N=20000 vs kalman worst {naive:.2} sigma/sqrt(N) (<= 3), {by_ess:.2} sigma/sqrt(ESS)",
            chain.mean[0],
            grid.mean()
        ),
    );
}

fn steady_allocations<M: DynamicModel>(model: &M, obs: &[ObsVector], algorithm: Algorithm) -> (u64, u64) {
    let mut f = Filter::new(model, algorithm, FilterConfig::new(1000, 0).with_scheme(GH7)).unwrap();
    f.initialize(&obs[0]).unwrap();
    f.step(&obs[1]).unwrap();
    let (mut heap, mut payload) = (0, 0);
    for y in &obs[2..] {
        let (stats, n) = counted(|| f.step(y).unwrap());
        heap = heap.max(n);
        payload = payload.max(stats.payload_reallocs);
    }
    (heap, payload)
}

fn criterion_9(r: &mut Report, runs: &SinRuns) {
    let model = SinModel::plain();
    let (api_heap, api_payload) = steady_allocations(&model, &runs.data[0][..200], Algorithm::Api);
    let (pf_heap, pf_payload) = steady_allocations(&model, &runs.data[0][..200], Algorithm::Pf);
    let allocs_ok = api_heap == 0 && api_payload == 0 && pf_heap == 0 && pf_payload == 0;

    let api: f64 = runs.api.iter().map(|a| a.elapsed.as_secs_f64()).sum();
    let pf: f64 = runs.pf_elapsed.iter().map(Duration::as_secs_f64).sum();
    let ratio = api / pf;

    let skewed = SinModel::new(
        SinVariant::Plain,
        SinConfig {
            obs_sd: 0.05,
            ..SinConfig::default()
        },
    );
    let obs = data(&skewed, &ParamVector::continuous(vec![SIN_TRUE_THETA]), 100, 1);
    let n = 1000;
    let res = api_run(&skewed, &obs, &FilterConfig::new(n, 0).with_scheme(GH7)).unwrap();
    let steps = &res.records[1..];
    let max_updates = steps.iter().map(|s| s.stats.adf_updates).max().unwrap();
    let mean_updates = steps.iter().map(|s| s.stats.adf_updates).sum::<usize>() as f64 / steps.len() as f64;

    r.line(
        9,
        allocs_ok && ratio <= 4.0 && max_updates < n,
        format!(
            "steady-state heap allocations per step api {api_heap}, pf {pf_heap}, payload reallocs api {api_payload}, pf {pf_payload} (all 0); api/pf wall-clock {ratio:.2} (<= 4); skewed SIN ADF updates per step mean {mean_updates:.0}, max {max_updates} (< N={n})"
        ),
    );
}

fn main() {
    let start = Instant::now();
    let mut r = Report { failed: vec![] };
    let runs = sin_runs();
    criterion_1(&mut r, &runs);
    criterion_2(&mut r, &runs);
    criterion_3(&mut r);
    criteria_4_and_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r, &runs);
    println!(
        "acceptance: {}/9 passed in {:.0} s; failed {:?}",
        9 - r.failed.len(),
        start.elapsed().as_secs_f64(),
        r.failed
    );
    if !r.failed.is_empty() && std::env::var_os("APINFER_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, RunAlgorithm};
use super::rows::{read_trajectory, ResultRow, RowWriter, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::filter::{pmmh_run, Algorithm, Filter, FilterConfig, ParamSummary, PmmhConfig};
use crate::model::{simulate, DynamicModel, ParamKind, ParamVector, RngStream, Trajectory};
use crate::models::{load, BenchmarkModel};
use crate::oracle::{kl_factorized, slam_exact_forward, ExactDiscretePosterior};

/// RNG stream used for simulating datasets, disjoint from the filter streams.
pub const STREAM_DATA: u64 = 32;

pub fn load_model(cfg: &ExperimentConfig) -> Result<BenchmarkModel> {
    load(&cfg.model, cfg.model_overrides.as_ref())
}

/// Simulates `steps` transitions under `truth` (model default when `None`).
pub fn simulate_data(
    model: &BenchmarkModel,
    truth: Option<&[f64]>,
    steps: Option<usize>,
    seed: u64,
) -> Result<(Trajectory, ParamVector)> {
    let truth = match truth {
        Some(v) => ParamVector::in_space(model.param_space(), v.to_vec())?,
        None => model.default_truth(),
    };
    let steps = steps.unwrap_or_else(|| model.default_steps());
    let traj = simulate(model, &truth, steps, &mut RngStream::new(seed, STREAM_DATA))?;
    Ok((traj, truth))
}

/// Observations plus whatever references exist for scoring them.
#[derive(Clone, Debug)]
pub struct Dataset {
    /// Simulation seed; `None` for data read from a file.
    pub seed: Option<u64>,
    pub truth: Option<Vec<f64>>,
    pub trajectory: Trajectory,
    /// Exact posterior after each prefix `y_{0:t}` (small SLAM only).
    pub exact_path: Option<Vec<ExactDiscretePosterior>>,
}

impl Dataset {
    pub fn build(cfg: &ExperimentConfig, model: &BenchmarkModel, run_seed: u64) -> Result<Self> {
        let (seed, truth, trajectory) = match &cfg.data.path {
            Some(path) => {
                let file = std::fs::File::open(path)
                    .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
                (None, cfg.data.truth.clone(), read_trajectory(file)?)
            }
            None => {
                let seed = cfg.data.seed.unwrap_or(run_seed);
                let (traj, truth) = simulate_data(model, cfg.data.truth.as_deref(), cfg.data.steps, seed)?;
                (Some(seed), Some(truth.into_inner()), traj)
            }
        };
        if trajectory.observations.is_empty() {
            return Err(Error::Config("dataset has no observations".into()));
        }
        let exact_path = match model {
            BenchmarkModel::Slam(m) => {
                let obs = &trajectory.observations;
                let path: Result<Vec<_>> = (0..obs.len())
                    .map(|t| slam_exact_forward(m, &obs[..=t], cfg.oracle.budget, false))
                    .collect();
                match path {
                    Ok(p) => Some(p),
                    Err(Error::OracleBudget { .. }) => None,
                    Err(e) => return Err(e),
                }
            }
            _ => None,
        };
        Ok(Self {
            seed,
            truth,
            trajectory,
            exact_path,
        })
    }

    fn steps(&self) -> usize {
        self.trajectory.observations.len() - 1
    }
}

/// One point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub seed: u64,
}

impl Cell {
    pub fn run_id(&self, algorithm: RunAlgorithm) -> String {
        format!("{}-n{}-m{}-l{}-s{}", algorithm.as_str(), self.n, self.m, self.l, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmmhStats {
    pub iterations: usize,
    pub acceptance_rate: f64,
    pub mean_standard_error: Vec<f64>,
}

/// Final outcome of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub seed: u64,
    pub data_seed: Option<u64>,
    pub algorithm: RunAlgorithm,
    pub model: String,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub steps: usize,
    pub estimate: Vec<f64>,
    pub sd: Vec<f64>,
    pub truth: Option<Vec<f64>>,
    pub mse: Option<f64>,
    pub kl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub marginals: Option<Vec<Vec<f64>>>,
    pub log_likelihood: Option<f64>,
    pub adf_updates: usize,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pmmh: Option<PmmhStats>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub summary: RunSummary,
}

/// Per-(algorithm, N, M, L) statistics across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub algorithm: RunAlgorithm,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub runs: usize,
    /// Mean over runs of the final squared error.
    pub mse: Option<f64>,
    pub median_kl: Option<f64>,
    pub mean_wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub runs: Vec<RunSummary>,
    pub groups: Vec<GroupSummary>,
}

fn sq_error(estimate: &[f64], truth: Option<&[f64]>, kind: ParamKind) -> Option<f64> {
    let truth = truth?;
    if kind != ParamKind::Continuous || truth.is_empty() || truth.len() != estimate.len() {
        return None;
    }
    Some(estimate.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum::<f64>() / truth.len() as f64)
}

fn ms(d: Duration, deterministic: bool) -> f64 {
    if deterministic {
        0.0
    } else {
        d.as_secs_f64() * 1e3
    }
}

fn filter_config(cfg: &ExperimentConfig, cell: &Cell) -> FilterConfig {
    FilterConfig {
        particles: cell.n,
        scheme: cfg.scheme.with_samples(cell.m),
        family: ExperimentConfig::family(cell.l),
        resample: cfg.resample,
        update_order: cfg.update_order,
        shrinkage: cfg.shrinkage,
        seed: cell.seed,
        ..FilterConfig::default()
    }
}

/// Runs one cell on one dataset.
pub fn run_cell(cfg: &ExperimentConfig, model: &BenchmarkModel, data: &Dataset, cell: &Cell) -> Result<RunOutput> {
    match cfg.algorithm {
        RunAlgorithm::Pmmh => run_pmmh_cell(cfg, model, data, cell),
        a => {
            let alg = match a {
                RunAlgorithm::Api => Algorithm::Api,
                RunAlgorithm::Pf => Algorithm::Pf,
                _ => Algorithm::LiuWest,
            };
            run_filter_cell(cfg, model, data, cell, alg)
        }
    }
}

fn run_filter_cell(
    cfg: &ExperimentConfig,
    model: &BenchmarkModel,
    data: &Dataset,
    cell: &Cell,
    algorithm: Algorithm,
) -> Result<RunOutput> {
    let kind = model.param_space().kind();
    let run_id = cell.run_id(cfg.algorithm);
    let obs = &data.trajectory.observations;
    let last = obs.len() - 1;
    let mut filter = Filter::new(model, algorithm, filter_config(cfg, cell))?;
    let mut rows = Vec::with_capacity(obs.len() / cfg.record_every + 1);
    let mut busy = Duration::ZERO;
    let mut updates = 0;
    let mut summary = ParamSummary::empty();
    for (t, y) in obs.iter().enumerate() {
        let start = Instant::now();
        let stats = if t == 0 { filter.initialize(y)? } else { filter.step(y)? };
        busy += start.elapsed();
        updates += stats.adf_updates;
        if t % cfg.record_every != 0 && t != last {
            continue;
        }
        summary = filter.param_summary();
        let theta_mean = summary.mean();
        let kl = match (&data.exact_path, summary.marginals()) {
            (Some(path), Some(est)) => Some(kl_factorized(est, &path[t].marginals)?),
            _ => None,
        };
        rows.push(ResultRow {
            schema: SCHEMA_VERSION,
            run_id: run_id.clone(),
            seed: cell.seed,
            algorithm: cfg.algorithm.as_str().into(),
            model: cfg.model.clone(),
            n: cell.n,
            m: cell.m,
            l: cell.l,
            t,
            mse: sq_error(&theta_mean, data.truth.as_deref(), kind),
            theta_sd: summary.variances().iter().map(|v| v.sqrt()).collect(),
            theta_mean,
            state_mean: filter.state_mean().to_vec(),
            ess: Some(stats.ess),
            log_evidence: Some(stats.log_evidence),
            kl,
            wall_ms: ms(busy, cfg.deterministic_output),
            allocs: stats.payload_reallocs,
            adf_updates: stats.adf_updates,
        });
    }
    let final_row = rows.last().expect("the last step is always recorded");
    let summary = RunSummary {
        run_id,
        seed: cell.seed,
        data_seed: data.seed,
        algorithm: cfg.algorithm,
        model: cfg.model.clone(),
        n: cell.n,
        m: cell.m,
        l: cell.l,
        steps: data.steps(),
        estimate: final_row.theta_mean.clone(),
        sd: final_row.theta_sd.clone(),
        truth: data.truth.clone(),
        mse: final_row.mse,
        kl: final_row.kl,
        marginals: summary.marginals().map(<[_]>::to_vec),
        log_likelihood: Some(filter.log_likelihood()),
        adf_updates: updates,
        wall_ms: ms(busy, cfg.deterministic_output),
        pmmh: None,
    };
    Ok(RunOutput { rows, summary })
}

fn run_pmmh_cell(cfg: &ExperimentConfig, model: &BenchmarkModel, data: &Dataset, cell: &Cell) -> Result<RunOutput> {
    let space = model.param_space();
    let pcfg = PmmhConfig {
        particles: cell.n,
        iterations: cfg.pmmh.iterations,
        proposal_sd: cfg.pmmh.proposal_sd,
        bounds: cfg.pmmh.bounds,
        time_budget: cfg.time_budget_secs.map(Duration::from_secs_f64),
        resample: cfg.resample,
        seed: cell.seed,
    };
    let res = pmmh_run(model, &data.trajectory.observations, &pcfg)?;
    let kept = res.kept();
    let p = res.mean.len();
    let sd: Vec<f64> = (0..p)
        .map(|k| {
            let m = res.mean[k];
            (kept.iter().map(|th| (th[k] - m).powi(2)).sum::<f64>() / kept.len() as f64).sqrt()
        })
        .collect();
    let marginals = space.cardinalities().map(|cards| {
        let w = 1.0 / kept.len() as f64;
        let mut tables: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
        for th in kept {
            for (tab, &v) in tables.iter_mut().zip(th) {
                tab[v as usize] += w;
            }
        }
        tables
    });
    let t = data.steps();
    let kl = match (&data.exact_path, &marginals) {
        (Some(path), Some(est)) => Some(kl_factorized(est, &path[t].marginals)?),
        _ => None,
    };
    let run_id = cell.run_id(cfg.algorithm);
    let wall_ms = ms(res.elapsed, cfg.deterministic_output);
    let mse = sq_error(&res.mean, data.truth.as_deref(), space.kind());
    let row = ResultRow {
        schema: SCHEMA_VERSION,
        run_id: run_id.clone(),
        seed: cell.seed,
        algorithm: cfg.algorithm.as_str().into(),
        model: cfg.model.clone(),
        n: cell.n,
        m: cell.m,
        l: cell.l,
        t,
        theta_mean: res.mean.clone(),
        theta_sd: sd.clone(),
        state_mean: vec![],
        ess: None,
        log_evidence: None,
        mse,
        kl,
        wall_ms,
        allocs: 0,
        adf_updates: 0,
    };
    let summary = RunSummary {
        run_id,
        seed: cell.seed,
        data_seed: data.seed,
        algorithm: cfg.algorithm,
        model: cfg.model.clone(),
        n: cell.n,
        m: cell.m,
        l: cell.l,
        steps: t,
        estimate: res.mean.clone(),
        sd,
        truth: data.truth.clone(),
        mse,
        kl,
        marginals,
        log_likelihood: None,
        adf_updates: 0,
        wall_ms,
        pmmh: Some(PmmhStats {
            iterations: res.iterations,
            acceptance_rate: res.acceptance_rate(),
            mean_standard_error: res.mean_standard_error(),
        }),
    };
    Ok(RunOutput { rows: vec![row], summary })
}

/// The sweep cells in emission order: N, then M, then L, then seed.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::with_capacity(cfg.cell_count());
    for &n in &cfg.particles {
        for &m in &cfg.approx_samples {
            for &l in &cfg.mixtures {
                for &seed in &cfg.seeds {
                    out.push(Cell { n, m, l, seed });
                }
            }
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(0.5 * (v[(n - 1) / 2] + v[n / 2]))
}

fn group(runs: &[RunSummary]) -> Vec<GroupSummary> {
    let mut order: Vec<(RunAlgorithm, usize, usize, usize)> = vec![];
    let mut by_key: HashMap<(RunAlgorithm, usize, usize, usize), Vec<&RunSummary>> = HashMap::new();
    for r in runs {
        let key = (r.algorithm, r.n, r.m, r.l);
        by_key.entry(key).or_insert_with(|| {
            order.push(key);
            vec![]
        });
        by_key.get_mut(&key).expect("just inserted").push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &by_key[&key];
            let mses: Vec<f64> = rs.iter().filter_map(|r| r.mse).collect();
            let kls: Vec<f64> = rs.iter().filter_map(|r| r.kl).collect();
            GroupSummary {
                algorithm: key.0,
                n: key.1,
                m: key.2,
                l: key.3,
                runs: rs.len(),
                mse: (!mses.is_empty()).then(|| mses.iter().sum::<f64>() / mses.len() as f64),
                median_kl: median(kls),
                mean_wall_ms: rs.iter().map(|r| r.wall_ms).sum::<f64>() / rs.len() as f64,
            }
        })
        .collect()
}

/// Runs every cell of the configuration on the worker pool. Rows go to
/// `sink` through a single writer in cell order, so the output does not
/// depend on scheduling.
pub fn run_experiment<W: Write + Send>(cfg: &ExperimentConfig, sink: Option<W>) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let model = load_model(cfg)?;
    let cells = cells(cfg);

    let mut data_seeds: Vec<u64> = cells.iter().map(|c| cfg.data.seed.unwrap_or(c.seed)).collect();
    data_seeds.sort_unstable();
    data_seeds.dedup();
    let datasets: HashMap<u64, Dataset> = data_seeds
        .par_iter()
        .map(|&s| Dataset::build(cfg, &model, s).map(|d| (s, d)))
        .collect::<Result<_>>()?;

    let (tx, rx) = mpsc::channel::<(usize, Result<RunOutput>)>();
    let total = cells.len();
    let (summaries, write_result) = std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> (Vec<Option<Result<RunSummary>>>, Result<()>) {
            let mut out = sink.map(RowWriter::new);
            let mut pending = BTreeMap::new();
            let mut next = 0;
            let mut results: Vec<Option<Result<RunSummary>>> = (0..total).map(|_| None).collect();
            let mut status = Ok(());
            for (i, r) in rx {
                pending.insert(i, r);
                while let Some(r) = pending.remove(&next) {
                    match r {
                        Ok(o) => {
                            if let (Some(w), Ok(())) = (out.as_mut(), &status) {
                                status = o.rows.iter().try_for_each(|row| w.write(row)).and_then(|_| w.flush());
                            }
                            results[next] = Some(Ok(o.summary));
                        }
                        Err(e) => results[next] = Some(Err(e)),
                    }
                    next += 1;
                }
            }
            (results, status)
        });
        cells.par_iter().enumerate().for_each_with(tx, |tx, (i, cell)| {
            let data = &datasets[&cfg.data.seed.unwrap_or(cell.seed)];
            // the receiver outlives every sender
            let _ = tx.send((i, run_cell(cfg, &model, data, cell)));
        });
        writer.join().expect("writer thread panicked")
    });
    write_result?;
    let runs = summaries
        .into_iter()
        .map(|r| r.expect("every cell reports"))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentSummary {
        schema: SCHEMA_VERSION,
        config: cfg.clone(),
        groups: group(&runs),
        runs,
    })
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use apinfer::harness::{self, ExperimentConfig, RunAlgorithm, SchemeName};
use apinfer::{Error, Result};

/// Joint state and parameter estimation experiments.
#[derive(Parser)]
#[command(name = "apictl", version, about)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Simulate a trajectory file (t, x.., y..).
    Simulate {
        #[command(flatten)]
        opts: Opts,
        /// Trajectory CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one algorithm setting over the configured seeds.
    Run(RunArgs),
    /// Run the Cartesian product of N, M, L and seeds.
    Sweep(RunArgs),
    /// Run the exact or grid reference for the configured model.
    Oracle(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    opts: Opts,
    /// Output directory for results.csv and summary.json; the summary goes
    /// to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flags override values from the config file.
#[derive(Args)]
struct Opts {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<RunAlgorithm>,
    /// N, comma-separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    particles: Option<Vec<usize>>,
    /// M, comma-separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    approx_samples: Option<Vec<usize>>,
    /// L (0 = single Gaussian or tables), comma-separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    mixtures: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeName>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Number of transitions to simulate.
    #[arg(long)]
    steps: Option<usize>,
    /// Generating parameter, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    truth: Option<Vec<f64>>,
    /// Trajectory CSV to filter instead of simulating.
    #[arg(long)]
    data: Option<PathBuf>,
    /// One simulation seed for every run (simulate: the seed).
    #[arg(long)]
    data_seed: Option<u64>,
    /// PMMH wall-clock budget in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// PMMH iterations.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    proposal_sd: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Zero timing columns for byte-identical output.
    #[arg(long)]
    deterministic: bool,
}

fn parse_algorithm(s: &str) -> std::result::Result<RunAlgorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeName, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown scheme {s:?}; expected gauss-hermite | monte-carlo | unscented"))
}

impl Opts {
    fn config(self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag { $field = v; })*
            };
        }
        set!(
            model => c.model,
            algorithm => c.algorithm,
            particles => c.particles,
            approx_samples => c.approx_samples,
            mixtures => c.mixtures,
            scheme => c.scheme,
            seeds => c.seeds,
            iterations => c.pmmh.iterations,
            proposal_sd => c.pmmh.proposal_sd,
            record_every => c.record_every,
        );
        if self.steps.is_some() {
            c.data.steps = self.steps;
        }
        if self.truth.is_some() {
            c.data.truth = self.truth;
        }
        if self.data.is_some() {
            c.data.path = self.data;
        }
        if self.data_seed.is_some() {
            c.data.seed = self.data_seed;
        }
        if self.time_budget.is_some() {
            c.time_budget_secs = self.time_budget;
        }
        c.deterministic_output |= self.deterministic;
        c.validate()?;
        Ok(c)
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.verb {
        Verb::Simulate { opts, out } => {
            let cfg = opts.config()?;
            let seed = cfg.data.seed.unwrap_or(cfg.seeds[0]);
            let traj = harness::cmd_simulate(&cfg, seed, out.as_deref())?;
            if out.is_none() {
                harness::write_trajectory(std::io::stdout().lock(), &traj)?;
            }
        }
        Verb::Run(a) => report(harness::cmd_run(&with_out(a)?)?)?,
        Verb::Sweep(a) => report(harness::cmd_sweep(&with_out(a)?)?)?,
        Verb::Oracle(a) => {
            let cfg = with_out(a)?;
            let (_, rep) = harness::cmd_oracle(&cfg)?;
            if cfg.output.is_none() {
                print_json(&rep)?;
            }
        }
    }
    Ok(())
}

fn with_out(a: RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = a.opts.config()?;
    if a.out.is_some() {
        cfg.output = a.out;
    }
    Ok(cfg)
}

fn report(s: harness::ExperimentSummary) -> Result<()> {
    for r in &s.runs {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{x:.3e}"));
        eprintln!(
            "{}: estimate {:?} mse {} kl {} {:.0} ms",
            r.run_id,
            r.estimate.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            fmt(r.mse),
            fmt(r.kl),
            r.wall_ms
        );
    }
    if s.config.output.is_none() {
        print_json(&s)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("apictl: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}

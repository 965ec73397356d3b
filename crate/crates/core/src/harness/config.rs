use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::adf::{ApproxFamily, MomentScheme};
use crate::error::{Error, Result};
use crate::filter::{ResampleScheme, UpdateOrder};
use crate::models::MODEL_NAMES;

/// Algorithms the harness can run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunAlgorithm {
    #[default]
    Api,
    Pf,
    LiuWest,
    Pmmh,
}

impl RunAlgorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            RunAlgorithm::Api => "api",
            RunAlgorithm::Pf => "pf",
            RunAlgorithm::LiuWest => "liu-west",
            RunAlgorithm::Pmmh => "pmmh",
        }
    }
}

impl std::str::FromStr for RunAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_owned()))
            .map_err(|_| Error::Config(format!("unknown algorithm {s:?}; expected api | pf | liu-west | pmmh")))
    }
}

/// Moment rule, with M taken from `approx_samples`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    GaussHermite,
    MonteCarlo,
    Unscented,
}

impl SchemeName {
    pub fn with_samples(self, m: usize) -> MomentScheme {
        match self {
            SchemeName::GaussHermite => MomentScheme::GaussHermite { points: m },
            SchemeName::MonteCarlo => MomentScheme::MonteCarlo { samples: m },
            SchemeName::Unscented => MomentScheme::Unscented,
        }
    }
}

/// Where observations come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    /// A trajectory CSV; when absent data are simulated.
    pub path: Option<PathBuf>,
    /// Simulation seed shared by every run; `None` simulates a fresh
    /// dataset from each run's own seed.
    pub seed: Option<u64>,
    /// Number of transitions; `None` uses the model default.
    pub steps: Option<usize>,
    /// Generating parameter; `None` uses the model default.
    pub truth: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmmhSettings {
    pub iterations: usize,
    pub proposal_sd: f64,
    pub bounds: Option<(f64, f64)>,
}

impl Default for PmmhSettings {
    fn default() -> Self {
        Self {
            iterations: 1000,
            proposal_sd: 0.1,
            bounds: None,
        }
    }
}

/// Settings of the `oracle` verb.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    pub grid: (f64, f64),
    pub grid_points: usize,
    /// Particles and replications of the PF likelihood (SIN).
    pub particles: usize,
    pub replications: usize,
    /// Joint-state budget of the exact SLAM recursion.
    pub budget: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            grid: (-1.5, 1.5),
            grid_points: 301,
            particles: 10_000,
            replications: 20,
            budget: crate::oracle::DEFAULT_SLAM_BUDGET,
        }
    }
}

/// One experiment or sweep. List-valued fields are swept as a Cartesian
/// product; a scalar is accepted wherever a list is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    /// Field overrides of the model configuration.
    pub model_overrides: Option<Value>,
    pub algorithm: RunAlgorithm,
    /// N.
    #[serde(deserialize_with = "one_or_many")]
    pub particles: Vec<usize>,
    /// M.
    #[serde(deserialize_with = "one_or_many")]
    pub approx_samples: Vec<usize>,
    /// L; 0 selects the family's default (Gaussian or tables).
    #[serde(deserialize_with = "one_or_many")]
    pub mixtures: Vec<usize>,
    pub scheme: SchemeName,
    #[serde(deserialize_with = "one_or_many")]
    pub seeds: Vec<u64>,
    pub data: DataSpec,
    /// Wall-clock limit on the PMMH iteration loop, in seconds.
    pub time_budget_secs: Option<f64>,
    pub pmmh: PmmhSettings,
    pub oracle: OracleSettings,
    /// Liu-West shrinkage a.
    pub shrinkage: f64,
    pub resample: ResampleScheme,
    pub update_order: UpdateOrder,
    /// Emit a row every this many steps (the last step is always kept).
    pub record_every: usize,
    /// Zero every timing column so output files are byte-reproducible.
    pub deterministic_output: bool,
    /// Output directory for `results.csv` and `summary.json`.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: "sin".into(),
            model_overrides: None,
            algorithm: RunAlgorithm::Api,
            particles: vec![1000],
            approx_samples: vec![7],
            mixtures: vec![0],
            scheme: SchemeName::GaussHermite,
            seeds: vec![0],
            data: DataSpec::default(),
            time_budget_secs: None,
            pmmh: PmmhSettings::default(),
            oracle: OracleSettings::default(),
            shrinkage: 0.98,
            resample: ResampleScheme::Multinomial,
            update_order: UpdateOrder::ResampleFirst,
            record_every: 1,
            deterministic_output: false,
            output: None,
        }
    }
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !MODEL_NAMES.contains(&self.model.as_str()) {
            return Err(Error::Config(format!(
                "unknown model {:?}; expected one of {MODEL_NAMES:?}",
                self.model
            )));
        }
        for (name, empty) in [
            ("particles", self.particles.is_empty()),
            ("approx_samples", self.approx_samples.is_empty()),
            ("mixtures", self.mixtures.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        if self.particles.contains(&0) {
            return Err(Error::Config("particles must be positive".into()));
        }
        if self.algorithm == RunAlgorithm::Api && self.scheme != SchemeName::Unscented && self.approx_samples.contains(&0) {
            return Err(Error::Config("approx_samples must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.shrinkage) {
            return Err(Error::Config(format!("shrinkage {} is outside [0, 1]", self.shrinkage)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be positive".into()));
        }
        if let Some(b) = self.time_budget_secs {
            if !(b > 0.0) {
                return Err(Error::Config("time_budget_secs must be positive".into()));
            }
        }
        if self.algorithm == RunAlgorithm::Pmmh && !(self.pmmh.proposal_sd > 0.0) {
            return Err(Error::Config("pmmh.proposal_sd must be positive".into()));
        }
        if self.oracle.grid_points == 0 || !(self.oracle.grid.0 < self.oracle.grid.1) {
            return Err(Error::Config("oracle grid must be a non-empty interval with points".into()));
        }
        Ok(())
    }

    /// The approximation family for a mixture size.
    pub fn family(l: usize) -> Option<ApproxFamily> {
        match l {
            0 => None,
            1 => Some(ApproxFamily::Gaussian),
            k => Some(ApproxFamily::Mixture { components: k }),
        }
    }

    /// Number of (N, M, L, seed) cells.
    pub fn cell_count(&self) -> usize {
        self.particles.len() * self.approx_samples.len() * self.mixtures.len() * self.seeds.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_and_lists_are_both_accepted() {
        let c = ExperimentConfig::from_json(r#"{"particles": 50, "seeds": [1, 2, 3]}"#).unwrap();
        assert_eq!(c.particles, vec![50]);
        assert_eq!(c.seeds, vec![1, 2, 3]);
        assert_eq!(c.cell_count(), 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::from_json(r#"{"particle": 50}"#).unwrap_err();
        assert!(matches!(e, Error::Config(_)), "{e}");
        let e = ExperimentConfig::from_json(r#"{"data": {"seeds": 1}}"#).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn bad_values_are_rejected() {
        for bad in [
            r#"{"model": "bird"}"#,
            r#"{"particles": []}"#,
            r#"{"particles": 0}"#,
            r#"{"algorithm": "smc"}"#,
            r#"{"shrinkage": 1.5}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn algorithm_names_parse() {
        assert_eq!("liu-west".parse::<RunAlgorithm>().unwrap(), RunAlgorithm::LiuWest);
        assert!("liu_west".parse::<RunAlgorithm>().is_err());
    }
}

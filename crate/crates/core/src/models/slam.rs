use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dims, DynamicModel, ParamSpace, ParamVector, RngStream};

const ACTIONS_FILE: &str = include_str!("../../data/slam_actions.txt");
const MAP_FILE: &str = include_str!("../../data/slam_map.txt");

/// Robot move command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Left,
    Right,
}

impl Action {
    fn parse(tok: &str) -> Result<Self> {
        match tok {
            "L" | "l" | "left" => Ok(Action::Left),
            "R" | "r" | "right" => Ok(Action::Right),
            other => Err(Error::Model(format!("unknown SLAM action {other:?}"))),
        }
    }
}

fn data_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
}

/// Parses a whitespace-separated L/R list, ignoring `#` comment lines.
pub fn parse_actions(text: &str) -> Result<Vec<Action>> {
    data_tokens(text).map(Action::parse).collect()
}

/// The bundled 16-move sequence.
pub fn bundled_actions() -> Vec<Action> {
    parse_actions(ACTIONS_FILE).expect("bundled action file parses")
}

/// The bundled 8-cell ground-truth map.
pub fn bundled_map() -> Vec<usize> {
    data_tokens(MAP_FILE)
        .map(|t| t.parse().expect("bundled map file parses"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlamConfig {
    pub cells: usize,
    pub labels: usize,
    /// Probability the robot moves in the commanded direction.
    pub p_move: f64,
    /// Probability the robot reads its cell label correctly.
    pub p_obs: f64,
    /// Action list as L/R tokens; `None` uses the bundled sequence.
    pub actions: Option<String>,
    /// Length the action list is tiled/truncated to; `None` keeps it.
    pub steps: Option<usize>,
}

impl Default for SlamConfig {
    fn default() -> Self {
        Self {
            cells: 8,
            labels: 2,
            p_move: 0.8,
            p_obs: 0.9,
            actions: None,
            steps: None,
        }
    }
}

impl SlamConfig {
    /// 8 cells, 16 actions.
    pub fn small() -> Self {
        Self::default()
    }

    /// 20 cells, the 16-action sequence repeated and truncated to 164.
    pub fn large() -> Self {
        Self {
            cells: 20,
            steps: Some(164),
            ..Self::default()
        }
    }
}

/// One-dimensional grid world with unknown static cell labels.
///
/// The parameters are the `cells` labels (each in `0..labels`, uniform
/// prior); the state is the robot location in `0..cells`, uniform at t = 0.
/// A move succeeds with probability `p_move` and otherwise the robot stays;
/// moving into a wall leaves it in place. The robot reads its cell label
/// correctly with probability `p_obs`, otherwise one of the other labels
/// uniformly.
#[derive(Clone, Debug)]
pub struct SlamModel {
    cells: usize,
    labels: usize,
    p_move: f64,
    p_obs: f64,
    actions: Vec<Action>,
    space: ParamSpace,
    ln_correct: f64,
    ln_wrong: f64,
}

impl SlamModel {
    pub fn new(cfg: &SlamConfig) -> Result<Self> {
        if cfg.cells == 0 || cfg.labels == 0 {
            return Err(Error::Model("SLAM needs at least one cell and one label".into()));
        }
        for (name, v) in [("p_move", cfg.p_move), ("p_obs", cfg.p_obs)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Model(format!("{name} = {v} is not a probability")));
            }
        }
        let base = match &cfg.actions {
            Some(text) => parse_actions(text)?,
            None => bundled_actions(),
        };
        if base.is_empty() {
            return Err(Error::Model("SLAM action list is empty".into()));
        }
        let actions = match cfg.steps {
            Some(n) => base.iter().copied().cycle().take(n).collect(),
            None => base,
        };
        let wrong = if cfg.labels > 1 {
            (1.0 - cfg.p_obs) / (cfg.labels - 1) as f64
        } else {
            0.0
        };
        let ln_correct = if cfg.labels > 1 { cfg.p_obs.ln() } else { 0.0 };
        Ok(Self {
            cells: cfg.cells,
            labels: cfg.labels,
            p_move: cfg.p_move,
            p_obs: cfg.p_obs,
            actions,
            space: ParamSpace::Discrete {
                cardinalities: vec![cfg.labels; cfg.cells],
            },
            ln_correct,
            ln_wrong: wrong.ln(),
        })
    }

    pub fn small() -> Self {
        Self::new(&SlamConfig::small()).expect("canned config is valid")
    }

    pub fn large() -> Self {
        Self::new(&SlamConfig::large()).expect("canned config is valid")
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn p_move(&self) -> f64 {
        self.p_move
    }

    pub fn p_obs(&self) -> f64 {
        self.p_obs
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// Number of transitions (observations are one more).
    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    /// The action applied when moving to the state at time `t` (t ≥ 1).
    pub fn action_at(&self, t: usize) -> Option<Action> {
        t.checked_sub(1).and_then(|i| self.actions.get(i).copied())
    }

    /// The bundled ground-truth map tiled over the grid.
    pub fn default_map(&self) -> ParamVector {
        let base = bundled_map();
        let codes: Vec<usize> = base.iter().cycle().take(self.cells).map(|&c| c % self.labels).collect();
        ParamVector::discrete(&codes)
    }

    /// Next-location distribution as at most two (location, probability)
    /// pairs. Moves into a wall keep the robot in place.
    pub fn transition(&self, loc: usize, action: Option<Action>) -> [(usize, f64); 2] {
        let moved = match action {
            Some(Action::Left) => loc.saturating_sub(1),
            Some(Action::Right) => (loc + 1).min(self.cells - 1),
            None => loc,
        };
        if moved == loc {
            [(loc, 1.0), (loc, 0.0)]
        } else {
            [(moved, self.p_move), (loc, 1.0 - self.p_move)]
        }
    }

    /// Probability of reading `label` at `loc` under `map`.
    pub fn observation_prob(&self, loc: usize, label: usize, map: &[f64]) -> f64 {
        if self.labels == 1 {
            return 1.0;
        }
        if map[loc] as usize == label {
            self.p_obs
        } else {
            (1.0 - self.p_obs) / (self.labels - 1) as f64
        }
    }

    /// Full label distribution at `loc`.
    pub fn observation_distribution(&self, loc: usize, map: &[f64]) -> Vec<f64> {
        (0..self.labels).map(|v| self.observation_prob(loc, v, map)).collect()
    }
}

impl DynamicModel for SlamModel {
    fn name(&self) -> &str {
        "slam"
    }

    fn dims(&self) -> Dims {
        Dims {
            param: self.cells,
            state: 1,
            obs: 1,
        }
    }

    fn param_space(&self) -> &ParamSpace {
        &self.space
    }

    fn sample_param_prior(&self, rng: &mut RngStream, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = rng.random_range(0..self.labels) as f64;
        }
    }

    fn param_prior_logdensity(&self, theta: &[f64]) -> f64 {
        if self.space.validate(theta).is_err() {
            return f64::NEG_INFINITY;
        }
        -(self.cells as f64) * (self.labels as f64).ln()
    }

    fn param_prior_tables(&self) -> Option<Vec<Vec<f64>>> {
        Some(vec![vec![1.0 / self.labels as f64; self.labels]; self.cells])
    }

    fn sample_initial_state(&self, rng: &mut RngStream, _theta: &[f64], out: &mut [f64]) {
        out[0] = rng.random_range(0..self.cells) as f64;
    }

    fn initial_state_logdensity(&self, x: &[f64], _theta: &[f64]) -> f64 {
        if (x[0] as usize) < self.cells && x[0] >= 0.0 {
            -(self.cells as f64).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample_transition(&self, rng: &mut RngStream, t: usize, window: &[f64], _theta: &[f64], out: &mut [f64]) {
        let [(a, pa), (b, _)] = self.transition(window[0] as usize, self.action_at(t));
        let u: f64 = rng.random();
        out[0] = if u < pa { a } else { b } as f64;
    }

    fn transition_logdensity(&self, t: usize, x_new: &[f64], window: &[f64], _theta: &[f64]) -> f64 {
        let target = x_new[0] as usize;
        let p: f64 = self
            .transition(window[0] as usize, self.action_at(t))
            .iter()
            .filter(|(loc, _)| *loc == target)
            .map(|(_, p)| p)
            .sum();
        p.ln()
    }

    fn sample_observation(&self, rng: &mut RngStream, _t: usize, x: &[f64], theta: &[f64], out: &mut [f64]) {
        let truth = theta[x[0] as usize] as usize;
        let u: f64 = rng.random();
        out[0] = if self.labels == 1 || u < self.p_obs {
            truth
        } else {
            // uniform over the other labels
            let k = rng.random_range(0..self.labels - 1);
            if k >= truth {
                k + 1
            } else {
                k
            }
        } as f64;
    }

    #[inline]
    fn observation_logdensity(&self, _t: usize, y: &[f64], x: &[f64], theta: &[f64]) -> f64 {
        if theta[x[0] as usize] == y[0] {
            self.ln_correct
        } else {
            self.ln_wrong
        }
    }

    fn transition_depends_on_param(&self) -> bool {
        false
    }
}

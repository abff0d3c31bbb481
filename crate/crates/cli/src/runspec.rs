//! Run and sweep parameters, loadable from TOML.
//!
//! ```toml
//! algorithm = "SS"                 # SS, SD or AD
//! phi = "pi/6"                     # radians or a multiple of pi
//! allow_out_of_range = false
//! terminate_variant = false
//! scheduler = "semi-synchronous"   # or "asynchronous"
//! compass = "static"               # or "dynamic"
//! # compass_bound = "pi/6"         # defaults to phi
//! delta = 0.01
//! fairness_bound = 4
//! max_cycle_ticks = 8
//! horizon = 100000
//! trials = 500
//! seed = 1
//! max_initial_distance = 10.0
//! adversary = "random"             # random, greedy, mirror or search
//! search_budget = 1000
//! # initial = [[0.0, 0.0], [2.0, 0.0]]
//! ```
//!
//! A sweep file holds the same keys as shared defaults plus a list of cells:
//!
//! ```toml
//! trials = 500
//!
//! [[cell]]
//! algorithm = "SS"
//! scheduler = "semi-synchronous"
//! compass = "static"
//! phis = [0.0, "pi/6", "pi/3", "0.49pi"]
//! ```

use std::path::Path;

use gathering::adversary::{
    greedy, random_fair, sample_initial, symmetric_mirror, Adversary, MirrorError, SearchConfig,
};
use gathering::algorithms::{region_table, AlgorithmError, AlgorithmId, AlgorithmSpec};
use gathering::engine::{Configuration, EngineConfig, EngineError, SchedulerMode};
use gathering::frames::{CompassMode, CompassSpec, FrameError};
use gathering::geometry::{AngleExpr, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Compass(#[from] FrameError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryChoice {
    Random,
    Greedy,
    Mirror,
    Search,
}

impl std::fmt::Display for AdversaryChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdversaryChoice::Random => "random",
            AdversaryChoice::Greedy => "greedy",
            AdversaryChoice::Mirror => "mirror",
            AdversaryChoice::Search => "search",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub algorithm: AlgorithmId,
    pub phi: AngleExpr,
    pub allow_out_of_range: bool,
    pub terminate_variant: bool,
    pub scheduler: SchedulerMode,
    pub compass: CompassMode,
    /// Compass bound; the algorithm's φ when absent.
    pub compass_bound: Option<AngleExpr>,
    pub delta: f64,
    pub fairness_bound: u64,
    pub max_cycle_ticks: u64,
    pub horizon: u64,
    pub post_gather_ticks: u64,
    pub trials: usize,
    pub seed: u64,
    pub max_initial_distance: f64,
    pub adversary: AdversaryChoice,
    pub search_budget: usize,
    /// Fixed start instead of a sampled one.
    pub initial: Option<[Point; 2]>,
}

impl Default for RunSpec {
    fn default() -> Self {
        let engine = EngineConfig::default();
        RunSpec {
            algorithm: AlgorithmId::SS,
            phi: AngleExpr(0.0),
            allow_out_of_range: false,
            terminate_variant: false,
            scheduler: engine.mode,
            compass: CompassMode::Static,
            compass_bound: None,
            delta: engine.delta,
            fairness_bound: engine.fairness_bound,
            max_cycle_ticks: engine.max_cycle_ticks,
            horizon: engine.horizon,
            post_gather_ticks: engine.post_gather_ticks,
            trials: 500,
            seed: 1,
            max_initial_distance: 10.0,
            adversary: AdversaryChoice::Random,
            search_budget: 1000,
            initial: None,
        }
    }
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, SpecError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    Ok(toml::from_str(&text)?)
}

impl RunSpec {
    pub fn load(path: &Path) -> Result<Self, SpecError> {
        read_toml(path)
    }

    pub fn algorithm_spec(&self) -> Result<AlgorithmSpec, SpecError> {
        Ok(region_table(self.algorithm, self.phi.0, self.terminate_variant, self.allow_out_of_range)?)
    }

    pub fn compass_spec(&self) -> Result<CompassSpec, SpecError> {
        let bound = self.compass_bound.map_or(self.phi.0, |b| b.0);
        Ok(CompassSpec::new(self.compass, bound)?)
    }

    pub fn engine_config(&self) -> Result<EngineConfig, SpecError> {
        let engine = EngineConfig {
            mode: self.scheduler,
            delta: self.delta,
            fairness_bound: self.fairness_bound,
            max_cycle_ticks: self.max_cycle_ticks,
            horizon: self.horizon,
            post_gather_ticks: self.post_gather_ticks,
        };
        engine.validate()?;
        Ok(engine)
    }

    /// Checks every parameter without running anything.
    pub fn validate(&self) -> Result<(), SpecError> {
        self.algorithm_spec()?;
        let compass = self.compass_spec()?;
        self.engine_config()?;
        if !(self.max_initial_distance.is_finite() && self.max_initial_distance >= self.delta) {
            return Err(SpecError::Invalid(format!(
                "max_initial_distance {} must be at least delta {}",
                self.max_initial_distance, self.delta
            )));
        }
        if let Some(init) = self.initial {
            if !(init[0].is_finite() && init[1].is_finite()) {
                return Err(SpecError::Invalid("initial positions must be finite".into()));
            }
        }
        if self.adversary == AdversaryChoice::Mirror {
            symmetric_mirror(0.0, &compass)?;
        }
        Ok(())
    }

    /// Start for the run seeded with `seed`: the fixed one if given, else a
    /// sample at distance in `[δ, max_initial_distance]`.
    pub fn initial_for(&self, seed: u64) -> Configuration {
        match self.initial {
            Some([a, b]) => Configuration::new(a, b),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                sample_initial(&mut rng, self.max_initial_distance, self.delta)
            }
        }
    }

    /// The run-by-run adversary; `None` for search, which drives its own runs.
    pub fn adversary_for(&self, seed: u64) -> Result<Option<Box<dyn Adversary>>, SpecError> {
        Ok(match self.adversary {
            AdversaryChoice::Random => Some(Box::new(random_fair(seed))),
            AdversaryChoice::Greedy => Some(Box::new(greedy())),
            AdversaryChoice::Mirror => Some(Box::new(symmetric_mirror(0.0, &self.compass_spec()?)?)),
            AdversaryChoice::Search => None,
        })
    }

    pub fn search_config(&self, seed: u64) -> Result<SearchConfig, SpecError> {
        let mut cfg = SearchConfig::new(
            self.algorithm_spec()?,
            self.compass_spec()?,
            self.engine_config()?,
            self.search_budget,
            seed,
        );
        cfg.max_initial_distance = self.max_initial_distance;
        cfg.initial = self.initial.map(|[a, b]| Configuration::new(a, b));
        Ok(cfg)
    }
}

/// One row of a sweep grid: a fixed algorithm, scheduler and compass mode
/// over several values of φ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub algorithm: AlgorithmId,
    pub scheduler: SchedulerMode,
    pub compass: CompassMode,
    pub phis: Vec<AngleExpr>,
    #[serde(default)]
    pub adversary: Option<AdversaryChoice>,
    #[serde(default)]
    pub allow_out_of_range: bool,
    #[serde(default)]
    pub trials: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(flatten)]
    pub base: RunSpec,
    #[serde(default, rename = "cell")]
    pub cells: Vec<CellSpec>,
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self, SpecError> {
        read_toml(path)
    }

    /// Every (row, φ) cell as a full run spec, in file order.
    pub fn expand(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for cell in &self.cells {
            for phi in &cell.phis {
                let mut spec = self.base.clone();
                spec.algorithm = cell.algorithm;
                spec.scheduler = cell.scheduler;
                spec.compass = cell.compass;
                spec.phi = *phi;
                spec.compass_bound = None;
                spec.allow_out_of_range = cell.allow_out_of_range;
                if let Some(a) = cell.adversary {
                    spec.adversary = a;
                }
                if let Some(t) = cell.trials {
                    spec.trials = t;
                }
                out.push(spec);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_desk_scale() {
        let s = RunSpec::default();
        assert_eq!(s.delta, 0.01);
        assert_eq!(s.fairness_bound, 4);
        assert_eq!(s.horizon, 100_000);
        assert_eq!(s.trials, 500);
        assert_eq!(s.max_initial_distance, 10.0);
    }

    #[test]
    fn parses_angle_expressions() {
        let s: RunSpec = toml::from_str("algorithm = \"SD\"\nphi = \"pi/8\"\ncompass = \"dynamic\"").unwrap();
        assert_eq!(s.algorithm, AlgorithmId::SD);
        assert!((s.phi.0 - std::f64::consts::PI / 8.0).abs() < 1e-15);
        assert_eq!(s.compass_spec().unwrap().bound, s.phi.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<RunSpec>("algorithmm = \"SS\"").is_err());
    }

    #[test]
    fn out_of_range_phi_needs_the_flag() {
        let s = RunSpec { algorithm: AlgorithmId::SD, phi: AngleExpr(std::f64::consts::PI), ..RunSpec::default() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn sweep_expands_rows_in_order() {
        let s: SweepSpec = toml::from_str(
            "trials = 3\n[[cell]]\nalgorithm = \"SS\"\nscheduler = \"asynchronous\"\ncompass = \"static\"\nphis = [0.0, \"pi/6\"]\n",
        )
        .unwrap();
        let cells = s.expand();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[1].trials, 3);
        assert_eq!(cells[1].scheduler, SchedulerMode::Asynchronous);
    }
}

//! Scenario scripts: explicit per-tick choices loaded from TOML.
//!
//! ```toml
//! name = "example"
//! initial = [[0.0, 0.0], [0.0, -1.0]]
//! static_deviations = [0.0, 0.0]
//! continuation = "greedy"          # or "halt"
//!
//! [algorithm]
//! id = "SS"
//! phi = "pi/4"                     # radians or a multiple of pi
//! terminate_variant = true
//!
//! [engine]
//! mode = "asynchronous"            # or "semi-synchronous"
//! horizon = 4
//!
//! [compass]
//! mode = "static"                  # or "dynamic"
//! bound = 0.0
//!
//! [[directive]]
//! tick = 0
//! robot = 1
//! kind = "activate"                # deviation and scale are optional
//!
//! [[directive]]
//! tick = 0
//! robot = 1
//! kind = "progress"
//! fraction = 1.0                   # or displacement = <global units>
//! ```
//!
//! Up to the last scripted tick the engine does only what the script says:
//! semi-synchronous moves default to full progress, asynchronous ones to
//! none, and an asynchronous cycle closes on an explicit `close` directive
//! or when the script re-activates the robot. After the last scripted tick
//! the continuation takes over: `greedy` activates every idle robot with
//! zero deviation and full progress; `halt` activates nobody.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{region_table, AlgorithmError, AlgorithmId, AlgorithmSpec};
use crate::engine::{run, Configuration, CycleRuntime, EngineConfig, EngineError, Execution, TickView};
use crate::frames::{CompassMode, CompassSpec, FrameError};
use crate::geometry::{AngleExpr, Point};

use super::Adversary;

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read script {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed script: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("directive {index} (tick {tick}, robot {robot}): {reason}")]
    Directive { index: usize, tick: u64, robot: usize, reason: String },
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Compass(#[from] FrameError),
    #[error("script run aborted: {0}")]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Continuation {
    #[default]
    Greedy,
    Halt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptAlgorithm {
    pub id: AlgorithmId,
    #[serde(default)]
    pub phi: AngleExpr,
    #[serde(default)]
    pub terminate_variant: bool,
    #[serde(default)]
    pub allow_out_of_range: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptCompass {
    pub mode: CompassMode,
    #[serde(default)]
    pub bound: AngleExpr,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DirectiveKind {
    Activate {
        #[serde(default)]
        deviation: Option<AngleExpr>,
        #[serde(default)]
        scale: Option<f64>,
    },
    Progress {
        #[serde(default)]
        fraction: Option<f64>,
        #[serde(default)]
        displacement: Option<f64>,
    },
    Close,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Directive {
    pub tick: u64,
    pub robot: usize,
    #[serde(flatten)]
    pub kind: DirectiveKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub algorithm: ScriptAlgorithm,
    #[serde(default)]
    pub engine: EngineConfig,
    pub compass: ScriptCompass,
    pub initial: [Point; 2],
    #[serde(default)]
    pub static_deviations: [AngleExpr; 2],
    #[serde(default)]
    pub continuation: Continuation,
    #[serde(default, rename = "directive")]
    pub directives: Vec<Directive>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioScript {
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let script: ScenarioScript = toml::from_str(text)?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScriptError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ScriptError> {
        for (index, d) in self.directives.iter().enumerate() {
            let fail = |reason: &str| ScriptError::Directive {
                index,
                tick: d.tick,
                robot: d.robot,
                reason: reason.to_string(),
            };
            if d.robot > 1 {
                return Err(fail("robot must be 0 or 1"));
            }
            match d.kind {
                DirectiveKind::Progress { fraction, displacement } => match (fraction, displacement) {
                    (Some(f), None) if (0.0..=1.0).contains(&f) => {}
                    (Some(_), None) => return Err(fail("fraction must lie in [0, 1]")),
                    (None, Some(x)) if x >= 0.0 && x.is_finite() => {}
                    (None, Some(_)) => return Err(fail("displacement must be non-negative")),
                    _ => return Err(fail("give exactly one of fraction or displacement")),
                },
                DirectiveKind::Activate { scale: Some(s), .. } if !(s > 0.0 && s.is_finite()) => {
                    return Err(fail("scale must be positive"));
                }
                DirectiveKind::Activate { deviation: Some(_), .. } if self.compass.mode == CompassMode::Static => {
                    return Err(fail("a static compass takes its deviations from static_deviations"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn algorithm_spec(&self) -> Result<AlgorithmSpec, AlgorithmError> {
        region_table(
            self.algorithm.id,
            self.algorithm.phi.0,
            self.algorithm.terminate_variant,
            self.algorithm.allow_out_of_range,
        )
    }

    pub fn compass_spec(&self) -> Result<CompassSpec, FrameError> {
        CompassSpec::new(self.compass.mode, self.compass.bound.0)
    }

    pub fn initial_config(&self) -> Configuration {
        Configuration::new(self.initial[0], self.initial[1])
    }

    /// Runs the script through the engine.
    pub fn run(&self) -> Result<Execution, ScriptError> {
        let alg = self.algorithm_spec()?;
        let compass = self.compass_spec()?;
        let mut adv = scripted(self);
        Ok(run(&alg, self.engine, compass, &mut adv, self.initial_config(), self.seed)?)
    }
}

pub struct ScriptedAdversary {
    name: String,
    static_deviations: [f64; 2],
    last_tick: Option<u64>,
    continuation: Continuation,
    activations: HashMap<(u64, usize), (Option<f64>, Option<f64>)>,
    progress: HashMap<(u64, usize), (Option<f64>, Option<f64>)>,
    closes: HashSet<(u64, usize)>,
}

pub fn scripted(script: &ScenarioScript) -> ScriptedAdversary {
    let mut activations = HashMap::new();
    let mut progress = HashMap::new();
    let mut closes = HashSet::new();
    for d in &script.directives {
        let key = (d.tick, d.robot);
        match d.kind {
            DirectiveKind::Activate { deviation, scale } => {
                activations.insert(key, (deviation.map(|a| a.0), scale));
            }
            DirectiveKind::Progress { fraction, displacement } => {
                progress.insert(key, (fraction, displacement));
            }
            DirectiveKind::Close => {
                closes.insert(key);
            }
        }
    }
    ScriptedAdversary {
        name: script.name.clone(),
        static_deviations: [script.static_deviations[0].0, script.static_deviations[1].0],
        last_tick: script.directives.iter().map(|d| d.tick).max(),
        continuation: script.continuation,
        activations,
        progress,
        closes,
    }
}

/// Activates every idle robot on every tick with zero deviation, unit scale
/// and full progress: an empty script with the greedy continuation.
pub fn greedy() -> ScriptedAdversary {
    ScriptedAdversary {
        name: "greedy".to_string(),
        static_deviations: [0.0, 0.0],
        last_tick: None,
        continuation: Continuation::Greedy,
        activations: HashMap::new(),
        progress: HashMap::new(),
        closes: HashSet::new(),
    }
}

impl ScriptedAdversary {
    fn scripted_tick(&self, tick: u64) -> bool {
        self.last_tick.is_some_and(|last| tick <= last)
    }
}

impl Adversary for ScriptedAdversary {
    fn static_deviations(&mut self, _compass: &CompassSpec) -> [f64; 2] {
        self.static_deviations
    }

    fn activations(&mut self, view: &TickView<'_>) -> [bool; 2] {
        if self.scripted_tick(view.tick) {
            return [0, 1].map(|r| self.activations.contains_key(&(view.tick, r)));
        }
        match self.continuation {
            Continuation::Greedy => [view.idle(0), view.idle(1)],
            Continuation::Halt => [false, false],
        }
    }

    fn deviation(&mut self, robot: usize, view: &TickView<'_>) -> f64 {
        self.activations.get(&(view.tick, robot)).and_then(|a| a.0).unwrap_or(0.0)
    }

    fn scale(&mut self, robot: usize, view: &TickView<'_>) -> f64 {
        self.activations.get(&(view.tick, robot)).and_then(|a| a.1).unwrap_or(1.0)
    }

    fn progress(&mut self, robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> f64 {
        if let Some(&(fraction, displacement)) = self.progress.get(&(view.tick, robot)) {
            return match (fraction, displacement) {
                (Some(f), _) => f * cycle.total(),
                (None, Some(x)) => x,
                (None, None) => 0.0,
            };
        }
        let semi = view.engine.mode == crate::engine::SchedulerMode::SemiSynchronous;
        if self.scripted_tick(view.tick) && !semi {
            0.0
        } else {
            cycle.total()
        }
    }

    fn close(&mut self, robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> bool {
        let key = (view.tick, robot);
        if self.scripted_tick(view.tick) {
            return self.closes.contains(&key) || self.activations.contains_key(&key);
        }
        match self.continuation {
            Continuation::Greedy => cycle.floor_met(view.engine.delta),
            Continuation::Halt => false,
        }
    }

    fn describe(&self) -> String {
        if self.name.is_empty() {
            "scripted".to_string()
        } else {
            format!("scripted {}", self.name)
        }
    }
}

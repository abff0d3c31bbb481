//! Look-compute-move execution under semi-synchronous and asynchronous
//! schedulers.
//!
//! Time is a sequence of integer ticks. At each tick the engine
//! 1. closes asynchronous cycles the adversary asks to close,
//! 2. certifies gathering (co-located and both robots settled),
//! 3. activates the robots the adversary picks: each freezes a frame,
//!    observes the other robot's current position and computes a target,
//! 4. checks bounded fairness,
//! 5. advances every open cycle by the displacement the adversary picks,
//!    producing the next configuration.
//!
//! Semi-synchronous cycles finish within the tick they start in, so no robot
//! is ever observed mid-move.

mod cycle;
mod execution;
mod sim;

pub use cycle::{advance_along, plan_cycle, step_semi_sync, CyclePlan};
pub use execution::{
    gathering_status, is_settled, pseudo_gathered_ticks, EventKind, Execution, GatheringStatus, RunHeader, StopReason,
    TraceEvent,
};
pub use sim::{run, Simulation, TickView};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::Decision;
use crate::frames::{LocalFrame, LocalPoint};
use crate::geometry::Point;

/// Relative tolerance used to snap a nearly finished move onto its target,
/// and absolute slack for the δ floor.
pub const ARRIVAL_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerMode {
    SemiSynchronous,
    Asynchronous,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub r0: Point,
    pub r1: Point,
}

impl Configuration {
    pub const fn new(r0: Point, r1: Point) -> Self {
        Configuration { r0, r1 }
    }

    pub fn robot(&self, i: usize) -> Point {
        if i == 0 {
            self.r0
        } else {
            self.r1
        }
    }

    pub fn set(&mut self, i: usize, p: Point) {
        if i == 0 {
            self.r0 = p;
        } else {
            self.r1 = p;
        }
    }

    /// Exact coordinate equality.
    pub fn co_located(&self) -> bool {
        self.r0 == self.r1
    }

    pub fn distance(&self) -> f64 {
        self.r0.distance(self.r1)
    }

    pub fn is_finite(&self) -> bool {
        self.r0.is_finite() && self.r1.is_finite()
    }

    pub fn bits_eq(&self, other: &Configuration) -> bool {
        self.r0.bits_eq(other.r0) && self.r1.bits_eq(other.r1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub mode: SchedulerMode,
    /// Minimum displacement per cycle, in global units.
    pub delta: f64,
    /// Every idle robot must be activated at least once per `fairness_bound`
    /// consecutive ticks.
    pub fairness_bound: u64,
    /// Asynchronous cycles must close within this many ticks of activation.
    pub max_cycle_ticks: u64,
    pub horizon: u64,
    /// Ticks simulated after gathering is certified, to observe that the
    /// gathered configuration persists.
    pub post_gather_ticks: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: SchedulerMode::SemiSynchronous,
            delta: 0.01,
            fairness_bound: 4,
            max_cycle_ticks: 8,
            horizon: 100_000,
            post_gather_ticks: 0,
        }
    }
}

impl EngineConfig {
    pub fn semi_sync() -> Self {
        EngineConfig::default()
    }

    pub fn asynchronous() -> Self {
        EngineConfig { mode: SchedulerMode::Asynchronous, ..EngineConfig::default() }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(EngineError::InvalidConfig(format!("delta must be positive, got {}", self.delta)));
        }
        if self.fairness_bound == 0 {
            return Err(EngineError::InvalidConfig("fairness bound must be at least 1".into()));
        }
        if self.max_cycle_ticks == 0 {
            return Err(EngineError::InvalidConfig("max_cycle_ticks must be at least 1".into()));
        }
        Ok(())
    }
}

/// One look-compute-move cycle of one robot, from activation until close.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRuntime {
    pub robot: usize,
    pub start_tick: u64,
    pub frame: LocalFrame,
    pub observed: LocalPoint,
    pub decision: Decision,
    pub source: Point,
    pub target_global: Point,
    /// Distance covered so far along the segment from `source` to
    /// `target_global`.
    pub displaced: f64,
    pub open: bool,
}

impl CycleRuntime {
    pub fn total(&self) -> f64 {
        self.source.distance(self.target_global)
    }

    pub fn remaining(&self) -> f64 {
        (self.total() - self.displaced).max(0.0)
    }

    pub fn arrived(&self) -> bool {
        self.displaced >= self.total()
    }

    /// Displacement the cycle owes before it may close.
    pub fn floor(&self, delta: f64) -> f64 {
        delta.min(self.total())
    }

    pub fn floor_met(&self, delta: f64) -> bool {
        self.arrived() || self.displaced >= self.floor(delta) - ARRIVAL_EPS
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite initial configuration")]
    NonFiniteInitial,
    #[error("tick {tick}: semi-synchronous activation set is empty")]
    EmptyActivation { tick: u64 },
    #[error("tick {tick}: robot {robot} activated while its cycle from tick {start} is still open")]
    ActivatedBusy { tick: u64, robot: usize, start: u64 },
    #[error("tick {tick}: robot {robot} activated after terminating")]
    ActivatedTerminated { tick: u64, robot: usize },
    #[error("tick {tick}: robot {robot} deviation {deviation} exceeds compass bound {bound}")]
    DeviationOutOfBound { tick: u64, robot: usize, deviation: f64, bound: f64 },
    #[error("robot {robot}: static deviation {deviation} exceeds compass bound {bound}")]
    StaticDeviationOutOfBound { robot: usize, deviation: f64, bound: f64 },
    #[error("tick {tick}: robot {robot} scale {scale} is not positive and finite")]
    BadScale { tick: u64, robot: usize, scale: f64 },
    #[error("tick {tick}: robot {robot} progress {value} is negative or non-finite")]
    BadProgress { tick: u64, robot: usize, value: f64 },
    #[error("tick {tick}: robot {robot} cycle closed after {displaced} of required {required}")]
    DeltaFloor { tick: u64, robot: usize, displaced: f64, required: f64 },
    #[error("tick {tick}: robot {robot} cycle from tick {start} exceeded {limit} ticks")]
    CycleTooLong { tick: u64, robot: usize, start: u64, limit: u64 },
    #[error("tick {tick}: robot {robot} not activated since tick {last:?} (fairness bound {bound})")]
    Fairness { tick: u64, robot: usize, last: Option<u64>, bound: u64 },
    #[error("tick {tick}: robot {robot} reached a non-finite position")]
    NonFinitePosition { tick: u64, robot: usize },
    #[error("tick {tick}: close requested for robot {robot} with no open cycle")]
    NothingToClose { tick: u64, robot: usize },
    #[error("adversary: {0}")]
    Adversary(String),
}

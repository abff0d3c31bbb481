use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgorithmSpec, RobotState};
use crate::frames::{CompassSpec, LocalPoint};
use crate::geometry::Point;

use super::{Configuration, EngineConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    /// The robot starts a cycle with a frame frozen until the cycle closes.
    Activate {
        deviation: f64,
        scale: f64,
    },
    /// What the robot saw (local coordinates), the state it computed and
    /// its global target.
    Look {
        observed: LocalPoint,
        state: RobotState,
        target: Point,
    },
    /// `displacement` is the amount the adversary requested this tick;
    /// `position` is where the robot ended up.
    Progress {
        displacement: f64,
        position: Point,
    },
    CycleEnd {
        displaced: f64,
        deviation: f64,
        scale: f64,
    },
    Terminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    pub robot: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Everything needed to re-run an execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub algorithm: AlgorithmSpec,
    pub engine: EngineConfig,
    pub compass: CompassSpec,
    pub static_deviations: [f64; 2],
    pub initial: Configuration,
    pub seed: u64,
    pub adversary: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "tick", rename_all = "kebab-case")]
pub enum StopReason {
    /// Gathering was certified at this tick.
    Gathered(u64),
    Horizon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub header: RunHeader,
    /// `configs[t]` is C(t).
    pub configs: Vec<Configuration>,
    pub events: Vec<TraceEvent>,
    pub stop: StopReason,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GatheringStatus {
    Gathered(u64),
    /// A robot terminated away from the other and the configuration never
    /// changed again from `tick` on.
    Stuck {
        tick: u64,
        terminated: usize,
    },
    PseudoGathered(Vec<u64>),
    Inconclusive,
}

impl Execution {
    pub fn last_tick(&self) -> u64 {
        self.configs.len().saturating_sub(1) as u64
    }

    pub fn config(&self, tick: u64) -> Option<&Configuration> {
        self.configs.get(tick as usize)
    }

    pub fn events_at(&self, tick: u64) -> impl Iterator<Item = &TraceEvent> {
        let start = self.events.partition_point(|e| e.tick < tick);
        self.events[start..].iter().take_while(move |e| e.tick == tick)
    }

    pub fn terminated_at(&self, robot: usize) -> Option<u64> {
        self.events.iter().find(|e| e.robot == robot && matches!(e.kind, EventKind::Terminate)).map(|e| e.tick)
    }

    /// For each tick, whether each robot is unsettled at C(t): it has a cycle
    /// opened before `t`, not closed by `t`, whose target differs from its
    /// position at `t`.
    pub fn unsettled_ticks(&self) -> Vec<[bool; 2]> {
        let n = self.configs.len();
        let mut out = vec![[false; 2]; n];
        let mut open: [Option<(u64, Point)>; 2] = [None, None];
        let mut idx = 0;
        for t in 0..n as u64 {
            // Closes at t happen before C(t) is inspected.
            while idx < self.events.len() && self.events[idx].tick == t {
                let e = &self.events[idx];
                if let EventKind::CycleEnd { .. } = e.kind {
                    if matches!(open[e.robot], Some((s, _)) if s < t) {
                        open[e.robot] = None;
                    }
                }
                if matches!(e.kind, EventKind::Activate { .. }) {
                    break;
                }
                idx += 1;
            }
            let c = &self.configs[t as usize];
            for r in 0..2 {
                if let Some((_, target)) = open[r] {
                    out[t as usize][r] = c.robot(r) != target;
                }
            }
            while idx < self.events.len() && self.events[idx].tick == t {
                let e = &self.events[idx];
                match e.kind {
                    EventKind::Look { target, .. } => open[e.robot] = Some((t, target)),
                    EventKind::CycleEnd { .. } | EventKind::Terminate => open[e.robot] = None,
                    _ => {}
                }
                idx += 1;
            }
        }
        out
    }
}

pub fn is_settled(execution: &Execution, robot: usize, tick: u64) -> bool {
    execution.unsettled_ticks().get(tick as usize).map(|u| !u[robot]).unwrap_or(true)
}

/// Ticks at which the robots are co-located while one of them still has
/// ground to cover.
pub fn pseudo_gathered_ticks(execution: &Execution) -> Vec<u64> {
    let unsettled = execution.unsettled_ticks();
    execution
        .configs
        .iter()
        .enumerate()
        .filter(|(t, c)| c.co_located() && (unsettled[*t][0] || unsettled[*t][1]))
        .map(|(t, _)| t as u64)
        .collect()
}

pub fn gathering_status(execution: &Execution) -> GatheringStatus {
    let unsettled = execution.unsettled_ticks();
    let configs = &execution.configs;
    // First tick after which nothing moves and the robots share a point.
    let mut stable_from = configs.len();
    for t in (0..configs.len()).rev() {
        if t + 1 < configs.len() && configs[t] != configs[t + 1] {
            break;
        }
        stable_from = t;
    }
    for t in stable_from..configs.len() {
        if configs[t].co_located() && !unsettled[t][0] && !unsettled[t][1] {
            return GatheringStatus::Gathered(t as u64);
        }
    }
    for r in 0..2 {
        if let Some(tt) = execution.terminated_at(r) {
            if let Some(last) = configs.last() {
                if !last.co_located() {
                    return GatheringStatus::Stuck { tick: (stable_from as u64).max(tt), terminated: r };
                }
            }
        }
    }
    let pseudo = pseudo_gathered_ticks(execution);
    if !pseudo.is_empty() {
        return GatheringStatus::PseudoGathered(pseudo);
    }
    GatheringStatus::Inconclusive
}

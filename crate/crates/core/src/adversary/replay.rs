use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::engine::{run, CycleRuntime, EngineError, EventKind, Execution, TickView, TraceEvent};
use crate::frames::CompassSpec;

use super::Adversary;

/// Re-issues the choices recorded in an execution's events.
pub struct ReplayAdversary {
    static_deviations: [f64; 2],
    activations: HashMap<u64, [bool; 2]>,
    frames: HashMap<(u64, usize), (f64, f64)>,
    progress: HashMap<(u64, usize), f64>,
    closes: HashSet<(u64, usize)>,
}

impl ReplayAdversary {
    pub fn new(execution: &Execution) -> Self {
        let mut activations: HashMap<u64, [bool; 2]> = HashMap::new();
        let mut frames = HashMap::new();
        let mut progress = HashMap::new();
        let mut closes = HashSet::new();
        for e in &execution.events {
            match e.kind {
                EventKind::Activate { deviation, scale } => {
                    activations.entry(e.tick).or_default()[e.robot] = true;
                    frames.insert((e.tick, e.robot), (deviation, scale));
                }
                EventKind::Progress { displacement, .. } => {
                    progress.insert((e.tick, e.robot), displacement);
                }
                EventKind::CycleEnd { .. } => {
                    closes.insert((e.tick, e.robot));
                }
                EventKind::Look { .. } | EventKind::Terminate => {}
            }
        }
        ReplayAdversary { static_deviations: execution.header.static_deviations, activations, frames, progress, closes }
    }
}

impl Adversary for ReplayAdversary {
    fn static_deviations(&mut self, _compass: &CompassSpec) -> [f64; 2] {
        self.static_deviations
    }

    fn activations(&mut self, view: &TickView<'_>) -> [bool; 2] {
        self.activations.get(&view.tick).copied().unwrap_or_default()
    }

    fn deviation(&mut self, robot: usize, view: &TickView<'_>) -> f64 {
        self.frames.get(&(view.tick, robot)).map(|f| f.0).unwrap_or(0.0)
    }

    fn scale(&mut self, robot: usize, view: &TickView<'_>) -> f64 {
        self.frames.get(&(view.tick, robot)).map(|f| f.1).unwrap_or(1.0)
    }

    fn progress(&mut self, robot: usize, _cycle: &CycleRuntime, view: &TickView<'_>) -> f64 {
        self.progress.get(&(view.tick, robot)).copied().unwrap_or(0.0)
    }

    fn close(&mut self, robot: usize, _cycle: &CycleRuntime, view: &TickView<'_>) -> bool {
        self.closes.contains(&(view.tick, robot))
    }

    fn describe(&self) -> String {
        "replay".to_string()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayMismatch {
    #[error("replay aborted: {0}")]
    Engine(#[from] EngineError),
    #[error("replay produced {replayed} configurations, trace has {recorded}")]
    Length { recorded: usize, replayed: usize },
    #[error("configuration at tick {tick} differs: recorded {recorded}, replayed {replayed}")]
    Config { tick: u64, recorded: String, replayed: String },
    #[error("event {index} differs: recorded {recorded}, replayed {replayed}")]
    Event { index: usize, recorded: String, replayed: String },
    #[error("replay produced {replayed} events, trace has {recorded}")]
    EventCount { recorded: usize, replayed: usize },
}

/// Re-runs the engine with the recorded choices.
pub fn replay(execution: &Execution) -> Result<Execution, EngineError> {
    let h = &execution.header;
    let mut adv = ReplayAdversary::new(execution);
    let mut out = run(&h.algorithm, h.engine, h.compass, &mut adv, h.initial, h.seed)?;
    out.header.adversary = h.adversary.clone();
    Ok(out)
}

fn event_bits_eq(a: &TraceEvent, b: &TraceEvent) -> bool {
    // Serialized forms use shortest round-trip float formatting, so equal
    // strings mean bit-equal floats (including the sign of zero).
    serde_json::to_string(a).ok() == serde_json::to_string(b).ok()
}

/// Replays `execution` and reports the first divergence, comparing every
/// coordinate bit for bit.
pub fn replay_check(execution: &Execution) -> Result<Execution, ReplayMismatch> {
    let replayed = replay(execution)?;
    for (t, (a, b)) in execution.configs.iter().zip(&replayed.configs).enumerate() {
        if !a.bits_eq(b) {
            return Err(ReplayMismatch::Config {
                tick: t as u64,
                recorded: format!("({}, {})", a.r0, a.r1),
                replayed: format!("({}, {})", b.r0, b.r1),
            });
        }
    }
    if execution.configs.len() != replayed.configs.len() {
        return Err(ReplayMismatch::Length { recorded: execution.configs.len(), replayed: replayed.configs.len() });
    }
    for (i, (a, b)) in execution.events.iter().zip(&replayed.events).enumerate() {
        if !event_bits_eq(a, b) {
            return Err(ReplayMismatch::Event { index: i, recorded: format!("{a:?}"), replayed: format!("{b:?}") });
        }
    }
    if execution.events.len() != replayed.events.len() {
        return Err(ReplayMismatch::EventCount { recorded: execution.events.len(), replayed: replayed.events.len() });
    }
    Ok(replayed)
}

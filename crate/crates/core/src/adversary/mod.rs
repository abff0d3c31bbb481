//! Sources of nondeterminism: which robots run, their compass deviations and
//! unit lengths, and how far each move gets.
//!
//! The engine validates every choice, so a misbehaving adversary aborts the
//! run instead of producing an execution outside the model.

mod mirror;
mod random;
mod replay;
mod scripted;
mod search;

pub use mirror::{symmetric_mirror, MirrorError, SymmetricMirror};
pub use random::{random_fair, RandomFair, RandomParams};
pub use replay::{replay, replay_check, ReplayAdversary, ReplayMismatch};
pub use scripted::{
    greedy, scripted, Continuation, Directive, DirectiveKind, ScenarioScript, ScriptError, ScriptedAdversary,
};
pub use search::{
    find_recurrence, sample_initial, worst_case_search, ChoiceAdversary, SearchConfig, SearchError, SearchReport,
};

use crate::engine::{CycleRuntime, TickView};
use crate::frames::CompassSpec;

pub trait Adversary {
    /// Deviations fixed for the whole run under a static compass.
    fn static_deviations(&mut self, compass: &CompassSpec) -> [f64; 2];

    /// Which robots start a cycle at `view.tick`.
    fn activations(&mut self, view: &TickView<'_>) -> [bool; 2];

    /// Deviation for a new cycle of `robot` under a dynamic compass.
    fn deviation(&mut self, robot: usize, view: &TickView<'_>) -> f64;

    /// Unit length of `robot`'s frame for a new cycle.
    fn scale(&mut self, _robot: usize, _view: &TickView<'_>) -> f64 {
        1.0
    }

    /// Global distance `robot` moves during this tick. Values above the
    /// remaining distance are clamped.
    fn progress(&mut self, robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> f64;

    /// Whether an asynchronous cycle closes at `view.tick`.
    fn close(&mut self, robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> bool;

    /// Short label recorded in trace headers.
    fn describe(&self) -> String;
}

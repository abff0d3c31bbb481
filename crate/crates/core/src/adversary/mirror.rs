use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::algorithms::RobotState;
use crate::engine::{CycleRuntime, TickView};
use crate::frames::CompassSpec;

use super::Adversary;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MirrorError {
    #[error("mirror deviations {0:?} exceed compass bound {1}")]
    BoundTooSmall([f64; 2], f64),
}

/// Activates both robots on every tick with compasses pointing in opposite
/// directions, so each robot's view is the other's rotated by π and the
/// configuration stays point-symmetric about the midpoint of the robots.
///
/// Approach moves run to completion; every other move stops at the δ floor.
pub struct SymmetricMirror {
    deviations: [f64; 2],
}

/// Opposite compasses at `axis_angle ∓ π/2`. Fails unless the compass bound
/// admits both.
pub fn symmetric_mirror(axis_angle: f64, compass: &CompassSpec) -> Result<SymmetricMirror, MirrorError> {
    let deviations = [axis_angle - FRAC_PI_2, axis_angle + FRAC_PI_2];
    if deviations.iter().any(|d| d.abs() > compass.bound) {
        return Err(MirrorError::BoundTooSmall(deviations, compass.bound));
    }
    Ok(SymmetricMirror { deviations })
}

impl Adversary for SymmetricMirror {
    fn static_deviations(&mut self, _compass: &CompassSpec) -> [f64; 2] {
        self.deviations
    }

    fn activations(&mut self, view: &TickView<'_>) -> [bool; 2] {
        [view.idle(0), view.idle(1)]
    }

    fn deviation(&mut self, robot: usize, _view: &TickView<'_>) -> f64 {
        self.deviations[robot]
    }

    fn progress(&mut self, _robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> f64 {
        if cycle.decision.state == RobotState::Approach {
            cycle.total()
        } else {
            cycle.floor(view.engine.delta)
        }
    }

    fn close(&mut self, _robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> bool {
        cycle.floor_met(view.engine.delta)
    }

    fn describe(&self) -> String {
        format!("symmetric-mirror deviations=[{}, {}]", self.deviations[0], self.deviations[1])
    }
}

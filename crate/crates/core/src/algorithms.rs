//! The three gathering algorithms as tables of angular regions.
//!
//! Each algorithm maps the observed position `p` of the other robot (in the
//! observer's local frame) to a state and a local target. `p = 0` is always
//! the gathered case; otherwise `argum(p)` selects exactly one region.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::LocalPoint;
use crate::geometry::{argum, rotate, Angle, AngularInterval, GeometryError, Point, ANGLE_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("φ = {0} lies outside [0, π]")]
    PhiOutOfDomain(f64),
    #[error("φ = {phi} is outside the validity range [0, {limit}) of {id}; pass the override flag to build it anyway")]
    PhiOutOfValidity { id: AlgorithmId, phi: f64, limit: f64 },
    #[error("region table for {id} at φ = {phi} does not partition the circle (total measure {measure})")]
    DegenerateTable { id: AlgorithmId, phi: f64, measure: f64 },
    #[error("unknown algorithm id {0:?}")]
    UnknownId(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RobotState {
    #[serde(rename = "G")]
    Gathered,
    #[serde(rename = "A")]
    Approach,
    #[serde(rename = "R")]
    Rotate,
    #[serde(rename = "W")]
    Wait,
    #[serde(rename = "T")]
    Terminated,
}

impl RobotState {
    pub fn letter(self) -> char {
        match self {
            RobotState::Gathered => 'G',
            RobotState::Approach => 'A',
            RobotState::Rotate => 'R',
            RobotState::Wait => 'W',
            RobotState::Terminated => 'T',
        }
    }
}

impl fmt::Display for RobotState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmId {
    /// Semi-synchronous scheduler, static compasses.
    SS,
    /// Semi-synchronous scheduler, dynamic compasses.
    SD,
    /// Asynchronous scheduler, dynamic compasses.
    AD,
}

impl AlgorithmId {
    /// Upper end (exclusive) of the φ range the algorithm is designed for.
    pub fn validity_limit(self) -> f64 {
        match self {
            AlgorithmId::SS => FRAC_PI_2,
            AlgorithmId::SD => FRAC_PI_4,
            AlgorithmId::AD => FRAC_PI_6,
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlgorithmId::SS => "SS",
            AlgorithmId::SD => "SD",
            AlgorithmId::AD => "AD",
        };
        f.write_str(s)
    }
}

impl FromStr for AlgorithmId {
    type Err = AlgorithmError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SS" => Ok(AlgorithmId::SS),
            "SD" => Ok(AlgorithmId::SD),
            "AD" => Ok(AlgorithmId::AD),
            _ => Err(AlgorithmError::UnknownId(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "angle")]
pub enum ActionKind {
    /// Move to the observed position of the other robot.
    MoveToObserved,
    /// Move to `(-|p|, 0)`, i.e. due local west at the observed distance.
    MoveToWest,
    /// Move to the observed position rotated counterclockwise about the
    /// observer by the given angle.
    RotateBy(f64),
    Stay,
}

impl ActionKind {
    fn apply(self, p: LocalPoint) -> LocalPoint {
        match self {
            ActionKind::MoveToObserved => p,
            ActionKind::MoveToWest => LocalPoint::new(-p.norm(), 0.0),
            ActionKind::RotateBy(w) => LocalPoint::from_vector(rotate(p.as_vector(), w)),
            ActionKind::Stay => LocalPoint::ORIGIN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub interval: AngularInterval,
    pub state: RobotState,
    pub action: ActionKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub id: AlgorithmId,
    pub phi: f64,
    pub regions: Vec<Region>,
    pub terminate_variant: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub state: RobotState,
    pub target_local: LocalPoint,
    pub action: ActionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StatePair {
    pub s0: RobotState,
    pub s1: RobotState,
}

impl StatePair {
    pub const fn new(s0: RobotState, s1: RobotState) -> Self {
        StatePair { s0, s1 }
    }
}

impl fmt::Display for StatePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.s0, self.s1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable(StatePair),
    Unstable,
}

fn region(
    lower: f64,
    upper: f64,
    lower_closed: bool,
    upper_closed: bool,
    state: RobotState,
    action: ActionKind,
) -> Result<Region, AlgorithmError> {
    Ok(Region { interval: AngularInterval::new(lower, upper, lower_closed, upper_closed)?, state, action })
}

/// Builds the region table of an algorithm. `allow_out_of_range` permits φ
/// beyond the algorithm's validity range (for necessity experiments); φ
/// outside `[0, π]` is always rejected.
pub fn region_table(
    id: AlgorithmId,
    phi: f64,
    terminate_variant: bool,
    allow_out_of_range: bool,
) -> Result<AlgorithmSpec, AlgorithmError> {
    use ActionKind::*;
    use RobotState::*;

    if !(0.0..=PI).contains(&phi) {
        return Err(AlgorithmError::PhiOutOfDomain(phi));
    }
    let limit = id.validity_limit();
    if phi >= limit && !allow_out_of_range {
        return Err(AlgorithmError::PhiOutOfValidity { id, phi, limit });
    }

    let regions = match id {
        AlgorithmId::SS => vec![
            region(0.0, PI, false, true, Approach, MoveToObserved)?,
            region(PI, 1.5 * PI + phi, false, true, Rotate, MoveToWest)?,
            region(1.5 * PI + phi, TAU, false, true, Wait, Stay)?,
        ],
        AlgorithmId::SD => {
            let turn = RotateBy(FRAC_PI_2 + phi);
            vec![
                region(FRAC_PI_2 + phi, 1.5 * PI - phi, false, true, Approach, MoveToObserved)?,
                region(-FRAC_PI_2 + phi, FRAC_PI_2 - phi, false, true, Wait, Stay)?,
                region(FRAC_PI_2 - phi, FRAC_PI_2 + phi, false, true, Rotate, turn)?,
                region(1.5 * PI - phi, 1.5 * PI + phi, false, true, Rotate, turn)?,
            ]
        }
        AlgorithmId::AD => vec![
            region(2.0 * FRAC_PI_3 + phi, 1.5 * PI, true, false, Approach, MoveToObserved)?,
            region(1.5 * PI, FRAC_PI_3 - phi, true, true, Wait, Stay)?,
            region(
                FRAC_PI_3 - phi,
                2.0 * FRAC_PI_3 + phi,
                false,
                false,
                Rotate,
                RotateBy(2.0 * FRAC_PI_3 + 2.0 * phi),
            )?,
        ],
    };

    let measure: f64 = regions.iter().map(|r| r.interval.measure()).sum();
    if (measure - TAU).abs() > 1e-9 {
        return Err(AlgorithmError::DegenerateTable { id, phi, measure });
    }
    Ok(AlgorithmSpec { id, phi, regions, terminate_variant })
}

impl AlgorithmSpec {
    pub fn new(id: AlgorithmId, phi: f64) -> Result<Self, AlgorithmError> {
        region_table(id, phi, false, false)
    }

    /// The region containing `theta`. Regions partition the circle, so this
    /// only fails on a hand-edited table.
    pub fn region_of(&self, theta: Angle) -> Option<&Region> {
        self.regions.iter().find(|r| r.interval.contains(theta))
    }

    pub fn state_at_angle(&self, theta: Angle) -> Option<RobotState> {
        self.region_of(theta).map(|r| r.state)
    }

    /// Whether the algorithm's φ lies in its validity range.
    pub fn in_validity_range(&self) -> bool {
        self.phi < self.id.validity_limit()
    }
}

pub fn decide(alg: &AlgorithmSpec, p: LocalPoint) -> Decision {
    if p.is_origin() {
        let state = if alg.terminate_variant { RobotState::Terminated } else { RobotState::Gathered };
        return Decision { state, target_local: LocalPoint::ORIGIN, action: ActionKind::Stay };
    }
    let theta = argum(p.as_vector()).expect("non-origin point has an argument");
    let region = alg.region_of(theta).expect("region tables are validated to cover the circle");
    Decision { state: region.state, target_local: region.action.apply(p), action: region.action }
}

/// The state a robot at `from` computes for every admissible deviation, or
/// `None` when the deviation can change it.
fn stable_for(alg: &AlgorithmSpec, from: Point, to: Point, bound: f64) -> Option<RobotState> {
    let beta = argum(to - from).ok()?.radians();
    let width = 2.0 * bound.abs();
    alg.regions.iter().find(|r| r.interval.contains_closed_arc(beta - bound.abs(), width)).map(|r| r.state)
}

/// Whether the configuration's state pair is the same under every
/// assignment of deviations in `[-bound, bound]`.
pub fn stable_state(alg: &AlgorithmSpec, r0: Point, r1: Point, bound: f64) -> Stability {
    if r0 == r1 {
        let s = if alg.terminate_variant { RobotState::Terminated } else { RobotState::Gathered };
        return Stability::Stable(StatePair::new(s, s));
    }
    match (stable_for(alg, r0, r1, bound), stable_for(alg, r1, r0, bound)) {
        (Some(s0), Some(s1)) => Stability::Stable(StatePair::new(s0, s1)),
        _ => Stability::Unstable,
    }
}

/// Every state a robot at `from` can enter over deviations in
/// `[-bound, bound]`, in table order.
pub fn reachable_states(alg: &AlgorithmSpec, from: Point, to: Point, bound: f64) -> Vec<RobotState> {
    let Ok(beta) = argum(to - from) else {
        return vec![if alg.terminate_variant { RobotState::Terminated } else { RobotState::Gathered }];
    };
    let b = bound.abs();
    let mut out = Vec::new();
    for r in &alg.regions {
        if r.interval.measure() <= ANGLE_EPS && !r.interval.contains_radians(r.interval.lower().radians()) {
            continue;
        }
        if r.interval.intersects_closed_arc(beta.radians() - b, 2.0 * b) && !out.contains(&r.state) {
            out.push(r.state);
        }
    }
    out
}

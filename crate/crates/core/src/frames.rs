//! Robot-local coordinate systems.
//!
//! A frame is centered on the robot, rotated by its compass deviation and
//! scaled by its unit length. The local image of a global point `p` is
//! `scale * R(-deviation) * (p - origin)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotate, AngularInterval, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("scale must be finite and positive, got {0}")]
    BadScale(f64),
    #[error("deviation {deviation} exceeds compass bound {bound}")]
    DeviationOutOfBound { deviation: f64, bound: f64 },
    #[error("compass bound must lie in [0, π], got {0}")]
    BadBound(f64),
}

/// A point expressed in some robot's local frame.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
}

impl LocalPoint {
    pub const ORIGIN: LocalPoint = LocalPoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        LocalPoint { x, y }
    }

    pub fn as_vector(self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn from_vector(p: Point) -> Self {
        LocalPoint::new(p.x, p.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_origin(self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }
}

impl From<[f64; 2]> for LocalPoint {
    fn from([x, y]: [f64; 2]) -> Self {
        LocalPoint { x, y }
    }
}

impl From<LocalPoint> for [f64; 2] {
    fn from(p: LocalPoint) -> Self {
        [p.x, p.y]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub origin: Point,
    pub deviation: f64,
    pub scale: f64,
}

impl LocalFrame {
    pub fn new(origin: Point, deviation: f64, scale: f64) -> Result<Self, FrameError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(FrameError::BadScale(scale));
        }
        Ok(LocalFrame { origin, deviation, scale })
    }

    /// Frame with the global orientation and unit scale.
    pub fn aligned(origin: Point) -> Self {
        LocalFrame { origin, deviation: 0.0, scale: 1.0 }
    }
}

pub fn to_local(frame: &LocalFrame, p: Point) -> LocalPoint {
    LocalPoint::from_vector(rotate(p - frame.origin, -frame.deviation) * frame.scale)
}

pub fn to_global(frame: &LocalFrame, q: LocalPoint) -> Point {
    frame.origin + rotate(q.as_vector(), frame.deviation) * (1.0 / frame.scale)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompassMode {
    Static,
    Dynamic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompassSpec {
    pub mode: CompassMode,
    pub bound: f64,
}

impl CompassSpec {
    pub fn new(mode: CompassMode, bound: f64) -> Result<Self, FrameError> {
        if !(0.0..=PI).contains(&bound) {
            return Err(FrameError::BadBound(bound));
        }
        Ok(CompassSpec { mode, bound })
    }

    pub fn admits(&self, deviation: f64) -> bool {
        deviation.is_finite() && deviation.abs() <= self.bound
    }

    pub fn check(&self, deviation: f64) -> Result<(), FrameError> {
        if self.admits(deviation) {
            Ok(())
        } else {
            Err(FrameError::DeviationOutOfBound { deviation, bound: self.bound })
        }
    }
}

/// The closed arc `[-bound, bound]` of admissible deviations.
pub fn deviation_range(spec: &CompassSpec) -> AngularInterval {
    AngularInterval::closed_around(0.0, spec.bound).expect("compass bound is validated to lie in [0, π]")
}

//! Planar vectors, normalized angles and circular arcs.
//!
//! Everything here is plain `f64` arithmetic. Angles live in `[0, 2π)` and
//! arc membership snaps values within [`ANGLE_EPS`] of an endpoint onto that
//! endpoint before the open/closed test, so boundary classification is
//! deterministic under rounding noise.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Snapping tolerance for arc endpoints, in radians.
pub const ANGLE_EPS: f64 = 1e-12;

/// Two directions are parallel when they agree modulo π within this tolerance.
pub const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("argument of the zero vector is undefined")]
    ZeroVector,
    #[error("non-finite value {0} in geometric input")]
    NonFinite(f64),
    #[error("arc ({lower}, {upper}) has measure {measure} outside [0, 2π]")]
    InvalidArc { lower: f64, upper: f64, measure: f64 },
}

/// A point (or displacement) in the global frame.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` is
    /// counterclockwise from `self`.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Point) -> f64 {
        (other - self).norm()
    }

    pub fn is_zero(self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Bitwise equality, distinguishing `-0.0` from `0.0`.
    pub fn bits_eq(self, other: Point) -> bool {
        self.x.to_bits() == other.x.to_bits() && self.y.to_bits() == other.y.to_bits()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// An angle normalized to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Normalizes any finite real into `[0, 2π)`.
    pub fn new(radians: f64) -> Self {
        let mut r = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs.
        if r >= TAU {
            r = 0.0;
        }
        Angle(r)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Signed representative in `(-π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > PI {
            self.0 - TAU
        } else {
            self.0
        }
    }
}

impl From<f64> for Angle {
    fn from(r: f64) -> Self {
        Angle::new(r)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::new(self.0 + rhs.0)
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle::new(self.0 - rhs.0)
    }
}

/// The argument (phase) of a nonzero vector, in `[0, 2π)`.
pub fn argum(p: Point) -> Result<Angle, GeometryError> {
    if !p.is_finite() {
        return Err(GeometryError::NonFinite(if p.x.is_finite() { p.y } else { p.x }));
    }
    if p.is_zero() {
        return Err(GeometryError::ZeroVector);
    }
    Ok(Angle::new(p.y.atan2(p.x)))
}

/// Counterclockwise rotation about the origin.
pub fn rotate(p: Point, omega: f64) -> Point {
    let (s, c) = omega.sin_cos();
    Point::new(p.x * c - p.y * s, p.x * s + p.y * c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LineIntersection {
    Point(Point),
    Parallel,
}

/// Intersection of the line through `o1` with direction `dir1` and the line
/// through `o2` with direction `dir2`.
pub fn line_intersection(o1: Point, dir1: f64, o2: Point, dir2: f64) -> LineIntersection {
    let diff = (dir1 - dir2).rem_euclid(PI);
    if diff < PARALLEL_EPS || PI - diff < PARALLEL_EPS {
        return LineIntersection::Parallel;
    }
    let d1 = Point::from_polar(1.0, dir1);
    let d2 = Point::from_polar(1.0, dir2);
    // o1 + s d1 = o2 + u d2  =>  s = cross(o2 - o1, d2) / cross(d1, d2)
    let s = (o2 - o1).cross(d2) / d1.cross(d2);
    LineIntersection::Point(o1 + d1 * s)
}

/// A circular arc starting at `lower` and sweeping counterclockwise by
/// `measure` radians, with independently open or closed endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularInterval {
    lower: Angle,
    measure: f64,
    lower_closed: bool,
    upper_closed: bool,
}

impl AngularInterval {
    /// Arc from `lower` counterclockwise to `upper`. Endpoints are raw reals;
    /// an `upper` below `lower` wraps through zero.
    pub fn new(lower: f64, upper: f64, lower_closed: bool, upper_closed: bool) -> Result<Self, GeometryError> {
        for v in [lower, upper] {
            if !v.is_finite() {
                return Err(GeometryError::NonFinite(v));
            }
        }
        let mut measure = upper - lower;
        if measure < 0.0 {
            measure += TAU;
        }
        if !(0.0..=TAU + ANGLE_EPS).contains(&measure) {
            return Err(GeometryError::InvalidArc { lower, upper, measure });
        }
        Ok(AngularInterval { lower: Angle::new(lower), measure: measure.min(TAU), lower_closed, upper_closed })
    }

    /// Closed arc `[center - half_width, center + half_width]`.
    pub fn closed_around(center: f64, half_width: f64) -> Result<Self, GeometryError> {
        let w = half_width.abs();
        if w * 2.0 > TAU + ANGLE_EPS {
            return Err(GeometryError::InvalidArc { lower: center - w, upper: center + w, measure: 2.0 * w });
        }
        Ok(AngularInterval {
            lower: Angle::new(center - w),
            measure: (2.0 * w).min(TAU),
            lower_closed: true,
            upper_closed: true,
        })
    }

    pub fn lower(&self) -> Angle {
        self.lower
    }

    pub fn upper(&self) -> Angle {
        Angle::new(self.lower.radians() + self.measure)
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn lower_closed(&self) -> bool {
        self.lower_closed
    }

    pub fn upper_closed(&self) -> bool {
        self.upper_closed
    }

    pub fn is_full_circle(&self) -> bool {
        self.measure >= TAU - ANGLE_EPS
    }

    /// Offset of `theta` from the lower endpoint in `[0, 2π)`, snapped to 0
    /// or to `measure` when within [`ANGLE_EPS`].
    fn offset(&self, theta: f64) -> f64 {
        let mut d = (theta - self.lower.radians()).rem_euclid(TAU);
        if d <= ANGLE_EPS || TAU - d <= ANGLE_EPS {
            d = 0.0;
        } else if (d - self.measure).abs() <= ANGLE_EPS {
            d = self.measure;
        }
        d
    }

    pub fn contains(&self, theta: Angle) -> bool {
        self.contains_radians(theta.radians())
    }

    pub fn contains_radians(&self, theta: f64) -> bool {
        let d = self.offset(theta);
        if d == 0.0 {
            if self.measure == 0.0 {
                return self.lower_closed && self.upper_closed;
            }
            if self.is_full_circle() {
                return self.lower_closed || self.upper_closed;
            }
            return self.lower_closed;
        }
        if d == self.measure {
            return self.upper_closed;
        }
        d < self.measure
    }

    /// True when the closed arc `[start, start + width]` lies inside `self`.
    pub fn contains_closed_arc(&self, start: f64, width: f64) -> bool {
        if width <= ANGLE_EPS {
            return self.contains_radians(start);
        }
        if self.is_full_circle() {
            return true;
        }
        if width > self.measure + ANGLE_EPS {
            return false;
        }
        let d = self.offset(start);
        let start_ok = d > 0.0 || self.lower_closed;
        // An arc starting just past `lower` but wrapping to the far side is
        // not inside, so require the whole sweep to fit before `measure`.
        let end = d + width;
        let end_ok = if (end - self.measure).abs() <= ANGLE_EPS { self.upper_closed } else { end < self.measure };
        start_ok && end_ok && d < self.measure
    }

    /// True when some point of the closed arc `[start, start + width]` lies
    /// inside `self`.
    pub fn intersects_closed_arc(&self, start: f64, width: f64) -> bool {
        if self.contains_radians(start) || self.contains_radians(start + width) {
            return true;
        }
        if self.measure == 0.0 {
            return false;
        }
        // Otherwise the arc must contain the whole of `self` or one of its
        // endpoints from the inside, which means it covers an interior point.
        let mid = self.lower.radians() + self.measure / 2.0;
        let d = (mid - start).rem_euclid(TAU);
        d <= width
    }
}

impl fmt::Display for AngularInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{:.6}, {:.6}{}",
            if self.lower_closed { '[' } else { '(' },
            self.lower.radians(),
            self.lower.radians() + self.measure,
            if self.upper_closed { ']' } else { ')' }
        )
    }
}

/// Parses an angle written as a plain number of radians or as a multiple
/// of π: `0.5`, `pi`, `-pi/4`, `3pi/8`, `0.24pi`, `π/6`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.trim().to_ascii_lowercase().replace('π', "pi").replace(' ', "");
    if let Ok(v) = s.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(format!("non-finite angle {text:?}")) };
    }
    let bad = || format!("cannot parse angle {text:?}");
    let (numerator, denominator) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (s.as_str(), 1.0),
    };
    let coefficient = numerator.strip_suffix("pi").ok_or_else(bad)?.trim_end_matches('*');
    let c = match coefficient {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    let v = c * PI / denominator;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// An angle in a configuration file: either a number of radians or an
/// expression accepted by [`parse_angle`].
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize)]
#[serde(into = "f64")]
pub struct AngleExpr(pub f64);

impl From<AngleExpr> for f64 {
    fn from(a: AngleExpr) -> f64 {
        a.0
    }
}

impl<'de> Deserialize<'de> for AngleExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = AngleExpr;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an angle in radians or an expression such as \"pi/4\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<AngleExpr, E> {
                Ok(AngleExpr(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<AngleExpr, E> {
                Ok(AngleExpr(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<AngleExpr, E> {
                Ok(AngleExpr(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<AngleExpr, E> {
                parse_angle(v).map(AngleExpr).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn argum_axes_and_diagonal() {
        assert_eq!(argum(Point::new(1.0, 0.0)).unwrap().radians(), 0.0);
        assert!(close(argum(Point::new(0.0, -2.0)).unwrap().radians(), 3.0 * FRAC_PI_2));
        assert!(close(argum(Point::new(-1.0, -1.0)).unwrap().radians(), 5.0 * FRAC_PI_4));
    }

    #[test]
    fn argum_zero_is_an_error() {
        assert_eq!(argum(Point::ORIGIN), Err(GeometryError::ZeroVector));
        assert_eq!(argum(Point::new(-0.0, 0.0)), Err(GeometryError::ZeroVector));
    }

    #[test]
    fn angle_normalization_stays_half_open() {
        assert_eq!(Angle::new(TAU).radians(), 0.0);
        assert_eq!(Angle::new(-1e-20).radians(), 0.0);
        assert!(close(Angle::new(-FRAC_PI_2).radians(), 3.0 * FRAC_PI_2));
        assert!(Angle::new(-1e-300).radians() < TAU);
    }

    #[test]
    fn rotate_examples() {
        let q = rotate(Point::new(1.0, 0.0), FRAC_PI_2);
        assert!(close(q.x, 0.0) && close(q.y, 1.0));
        // Rotation matrix entries at 5π/8: (-sin 5π/8, cos 5π/8).
        let q = rotate(Point::new(0.0, 1.0), 5.0 * PI / 8.0);
        assert!((q.x - (-0.923_879_532_511_286_7)).abs() < 1e-12);
        assert!((q.y - (-0.382_683_432_365_089_8)).abs() < 1e-12);
        let p = Point::new(3.5, -2.25);
        assert_eq!(rotate(p, 0.0), p);
    }

    #[test]
    fn contains_examples() {
        let rot = AngularInterval::new(PI, 3.0 * FRAC_PI_2 + FRAC_PI_4, false, true).unwrap();
        assert!(rot.contains(Angle::new(3.0 * FRAC_PI_2)));
        let wait = AngularInterval::new(7.0 * FRAC_PI_4, TAU, false, true).unwrap();
        assert!(!wait.contains(Angle::new(7.0 * FRAC_PI_4)));
        assert!(wait.contains(Angle::ZERO));
        let wrap = AngularInterval::new(3.0 * FRAC_PI_2, FRAC_PI_4, true, true).unwrap();
        assert!(wrap.contains(Angle::ZERO));
        assert!(wrap.contains(Angle::new(3.0 * FRAC_PI_2)));
        assert!(wrap.contains(Angle::new(FRAC_PI_4)));
        assert!(!wrap.contains(Angle::new(FRAC_PI_2)));
    }

    #[test]
    fn degenerate_and_full_arcs() {
        let empty = AngularInterval::new(FRAC_PI_2, FRAC_PI_2, false, true).unwrap();
        assert_eq!(empty.measure(), 0.0);
        assert!(!empty.contains(Angle::new(FRAC_PI_2)));
        let point = AngularInterval::new(0.0, 0.0, true, true).unwrap();
        assert!(point.contains(Angle::ZERO));
        let full = AngularInterval::new(-PI, PI, true, true).unwrap();
        assert!(full.is_full_circle());
        assert!(full.contains(Angle::new(1.0)) && full.contains(Angle::new(PI)));
    }

    #[test]
    fn snapping_absorbs_rounding_noise() {
        let a = AngularInterval::new(FRAC_PI_2, PI, false, true).unwrap();
        assert!(!a.contains_radians(FRAC_PI_2 + 1e-14));
        assert!(a.contains_radians(PI + 1e-14));
        assert!(!a.contains_radians(PI + 1e-9));
    }

    #[test]
    fn line_intersection_examples() {
        match line_intersection(Point::ORIGIN, 0.0, Point::new(0.0, 1.0), FRAC_PI_4) {
            LineIntersection::Point(o) => assert!(close(o.x, -1.0) && close(o.y, 0.0)),
            LineIntersection::Parallel => panic!("expected intersection"),
        }
        assert_eq!(line_intersection(Point::ORIGIN, 0.0, Point::new(0.0, 1.0), 0.0), LineIntersection::Parallel);
        assert_eq!(line_intersection(Point::ORIGIN, 0.0, Point::new(0.0, 1.0), PI), LineIntersection::Parallel);
        match line_intersection(Point::ORIGIN, 0.0, Point::new(1.0, 0.0), FRAC_PI_2) {
            LineIntersection::Point(o) => assert!(close(o.x, 1.0) && close(o.y, 0.0)),
            LineIntersection::Parallel => panic!("expected intersection"),
        }
    }

    #[test]
    fn angle_expressions() {
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/4").unwrap(), FRAC_PI_4);
        assert_eq!(parse_angle("-pi/4").unwrap(), -FRAC_PI_4);
        assert!(close(parse_angle("0.24pi").unwrap(), 0.24 * PI));
        assert!(close(parse_angle("3pi/8").unwrap(), 3.0 * PI / 8.0));
        assert!(close(parse_angle("π/6").unwrap(), PI / 6.0));
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("pi/0").is_err());
    }

    #[test]
    fn closed_arc_containment() {
        let w = AngularInterval::new(-3.0 * PI / 8.0, 3.0 * PI / 8.0, false, true).unwrap();
        assert!(w.contains_closed_arc(-PI / 8.0, PI / 4.0));
        assert!(!w.contains_closed_arc(-3.0 * PI / 8.0, PI / 4.0));
        assert!(w.contains_closed_arc(PI / 8.0, PI / 4.0));
        assert!(!w.contains_closed_arc(PI, 0.1));
        let a = AngularInterval::new(0.0, PI, false, true).unwrap();
        assert!(!a.contains_closed_arc(-FRAC_PI_4, FRAC_PI_2));
        assert!(a.intersects_closed_arc(-FRAC_PI_4, FRAC_PI_2));
        assert!(!a.intersects_closed_arc(PI + 0.1, 0.5));
        // The arc swallows the whole region.
        let small = AngularInterval::new(1.0, 1.1, false, false).unwrap();
        assert!(small.intersects_closed_arc(0.5, 1.0));
    }
}

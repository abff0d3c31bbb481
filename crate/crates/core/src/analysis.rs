//! Observables over configurations and traces, and the per-trace checks of
//! the invariants the correctness arguments rely on.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{decide, AlgorithmId, AlgorithmSpec, RobotState, StatePair};
use crate::engine::{Configuration, EventKind, Execution, SchedulerMode, StopReason, ARRIVAL_EPS};
use crate::frames::{to_local, CompassMode, LocalFrame};
use crate::geometry::{argum, line_intersection, rotate, Angle, LineIntersection, Point};

/// Tolerance for angle monotonicity and half-plane membership.
pub const CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("robots are co-located; the segment between them has no direction")]
    CoLocated,
}

/// States the robots are engaged in: each robot's state at its latest
/// activation, or W before its first one.
pub type EffectiveStatePair = StatePair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisClass {
    PP,
    PN,
    NP,
    NN,
    /// The two local x-axes are parallel.
    Parallel,
    /// Strict classification only: a robot sits exactly on the intersection.
    Undetermined,
}

pub fn state_pair(alg: &AlgorithmSpec, config: &Configuration, frames: &[LocalFrame; 2]) -> StatePair {
    let f0 = LocalFrame { origin: config.r0, ..frames[0] };
    let f1 = LocalFrame { origin: config.r1, ..frames[1] };
    StatePair::new(decide(alg, to_local(&f0, config.r1)).state, decide(alg, to_local(&f1, config.r0)).state)
}

/// Global argument of the segment from `r0` to `r1`.
pub fn alpha(config: &Configuration) -> Result<Angle, AnalysisError> {
    argum(config.r1 - config.r0).map_err(|_| AnalysisError::CoLocated)
}

/// Classifies a configuration by where each robot sits on its own x-axis
/// relative to the intersection `o` of the two x-axes: `P` when `o` lies on
/// the negative side of the robot, `N` when on the positive side. With
/// `weak`, a robot exactly at `o` counts as `N`.
pub fn axis_class(config: &Configuration, deviations: [f64; 2], weak: bool) -> AxisClass {
    let o = match line_intersection(config.r0, deviations[0], config.r1, deviations[1]) {
        LineIntersection::Parallel => return AxisClass::Parallel,
        LineIntersection::Point(o) => o,
    };
    let side = |r: Point, dev: f64| -> Option<bool> {
        // Local x-coordinate of o minus that of the robot, up to the
        // positive scale factor.
        let s = (o - r).dot(Point::from_polar(1.0, dev));
        if s < 0.0 {
            Some(true)
        } else if s > 0.0 || weak {
            Some(false)
        } else {
            None
        }
    };
    match (side(config.r0, deviations[0]), side(config.r1, deviations[1])) {
        (Some(true), Some(true)) => AxisClass::PP,
        (Some(true), Some(false)) => AxisClass::PN,
        (Some(false), Some(true)) => AxisClass::NP,
        (Some(false), Some(false)) => AxisClass::NN,
        _ => AxisClass::Undetermined,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CheckOutcome {
    Pass,
    Fail { tick: u64, detail: String },
    NotApplicable { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    #[serde(flatten)]
    pub outcome: CheckOutcome,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct InvariantReport {
    pub checks: Vec<CheckResult>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| !matches!(c.outcome, CheckOutcome::Fail { .. }))
    }

    pub fn get(&self, id: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.id == id).map(|c| &c.outcome)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| matches!(c.outcome, CheckOutcome::Fail { .. }))
    }

    fn push(&mut self, id: &str, outcome: CheckOutcome) {
        self.checks.push(CheckResult { id: id.to_string(), outcome });
    }
}

fn na(reason: &str) -> CheckOutcome {
    CheckOutcome::NotApplicable { reason: reason.to_string() }
}

fn fail(tick: u64, detail: String) -> CheckOutcome {
    CheckOutcome::Fail { tick, detail }
}

/// One robot's cycle as reconstructed from the trace.
#[derive(Clone, Copy, Debug)]
struct CycleRecord {
    robot: usize,
    start: u64,
    deviation: f64,
    scale: f64,
    state: RobotState,
    source: Point,
    target: Point,
    /// Tick of the CycleEnd event, if any.
    end: Option<u64>,
    displaced: Option<f64>,
    end_frame: Option<(f64, f64)>,
}

/// Everything the checks need, decoded once from the events.
struct TraceFacts {
    cycles: Vec<CycleRecord>,
    /// `frames[t][i]`: deviation and scale robot `i` uses at tick `t`.
    frames: Vec<[(f64, f64); 2]>,
    /// `engaged[t][i]`: state of robot `i` at its latest activation up to
    /// and including tick `t`.
    engaged: Vec<[RobotState; 2]>,
    activated: Vec<[bool; 2]>,
    /// `busy[t][i]`: robot `i` has a cycle open after tick `t`'s activations.
    busy: Vec<[bool; 2]>,
    terminated_from: [Option<u64>; 2],
    first_co_located: Option<u64>,
}

fn facts(e: &Execution) -> TraceFacts {
    let n = e.configs.len();
    let mut cycles: Vec<CycleRecord> = Vec::new();
    let mut current: [Option<usize>; 2] = [None, None];
    let mut pending: [Option<(u64, f64, f64)>; 2] = [None, None];
    let mut terminated_from = [None, None];
    for ev in &e.events {
        let r = ev.robot;
        match ev.kind {
            EventKind::Activate { deviation, scale } => pending[r] = Some((ev.tick, deviation, scale)),
            EventKind::Look { state, target, .. } => {
                let (start, deviation, scale) = pending[r].take().unwrap_or((ev.tick, 0.0, 1.0));
                let source = e.configs.get(start as usize).map(|c| c.robot(r)).unwrap_or_default();
                cycles.push(CycleRecord {
                    robot: r,
                    start,
                    deviation,
                    scale,
                    state,
                    source,
                    target,
                    end: None,
                    displaced: None,
                    end_frame: None,
                });
                current[r] = Some(cycles.len() - 1);
            }
            EventKind::CycleEnd { displaced, deviation, scale } => {
                if let Some(i) = current[r].take() {
                    cycles[i].end = Some(ev.tick);
                    cycles[i].displaced = Some(displaced);
                    cycles[i].end_frame = Some((deviation, scale));
                }
            }
            EventKind::Terminate => {
                if let Some(i) = current[r].take() {
                    cycles[i].end = Some(ev.tick);
                }
                terminated_from[r].get_or_insert(ev.tick);
            }
            EventKind::Progress { .. } => {}
        }
    }

    let statics = e.header.static_deviations;
    let mut frames = vec![[(0.0, 1.0); 2]; n];
    let mut engaged = vec![[RobotState::Wait; 2]; n];
    let mut activated = vec![[false; 2]; n];
    let mut busy = vec![[false; 2]; n];
    let mut last_frame = match e.header.compass.mode {
        CompassMode::Static => [(statics[0], 1.0), (statics[1], 1.0)],
        CompassMode::Dynamic => [(0.0, 1.0); 2],
    };
    let mut last_state = [RobotState::Wait; 2];
    let mut by_start: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, c) in cycles.iter().enumerate() {
        if (c.start as usize) < n {
            by_start[c.start as usize].push(i);
        }
    }
    for t in 0..n {
        for &i in &by_start[t] {
            let c = &cycles[i];
            last_frame[c.robot] = (c.deviation, c.scale);
            last_state[c.robot] = c.state;
            activated[t][c.robot] = true;
        }
        frames[t] = last_frame;
        engaged[t] = last_state;
    }
    for c in &cycles {
        if c.state == RobotState::Terminated {
            continue;
        }
        let until = c.end.unwrap_or(n as u64);
        for t in c.start..until.min(n as u64) {
            busy[t as usize][c.robot] = true;
        }
    }
    let first_co_located = e.configs.iter().position(|c| c.co_located()).map(|t| t as u64);
    TraceFacts { cycles, frames, engaged, activated, busy, terminated_from, first_co_located }
}

/// Robot indices `(lower, upper)` by y at tick 0; on a tie the robot with
/// the larger x counts as lower, so the segment points due west.
fn canonical_order(c: &Configuration) -> Option<(usize, usize)> {
    if c.co_located() {
        return None;
    }
    if c.r0.y < c.r1.y || (c.r0.y == c.r1.y && c.r0.x > c.r1.x) {
        Some((0, 1))
    } else {
        Some((1, 0))
    }
}

/// Absolute error a position of this magnitude can pick up from the handful
/// of rounded operations in one move.
fn position_slack(c: &Configuration) -> f64 {
    let m = [c.r0.x, c.r0.y, c.r1.x, c.r1.y].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    16.0 * f64::EPSILON * m
}

/// Tolerance on α: the fixed check tolerance plus the angle subtended by the
/// positional rounding error at the current distance.
fn angle_slack(c: &Configuration) -> f64 {
    let d = c.distance();
    if d == 0.0 {
        return CHECK_TOL;
    }
    CHECK_TOL + position_slack(c) / d
}

fn canonical_alpha(c: &Configuration, lower: usize) -> Option<f64> {
    argum(c.robot(1 - lower) - c.robot(lower)).ok().map(|a| a.radians())
}

/// Runs every check applicable to the trace's algorithm and scheduler.
pub fn check_trace(alg: &AlgorithmSpec, e: &Execution) -> InvariantReport {
    let f = facts(e);
    let mut report = InvariantReport::default();
    let semi = e.header.engine.mode == SchedulerMode::SemiSynchronous;
    let horizon_ticks = f.first_co_located.map_or(e.configs.len(), |t| t as usize);

    // SS checks.
    if alg.id == AlgorithmId::SS && alg.phi < FRAC_PI_2 {
        let mut ww = CheckOutcome::Pass;
        let mut member = CheckOutcome::Pass;
        for (t, c) in e.configs.iter().enumerate() {
            let frames =
                [0, 1].map(|i| LocalFrame { origin: c.robot(i), deviation: f.frames[t][i].0, scale: f.frames[t][i].1 });
            let s = state_pair(alg, c, &frames);
            use RobotState::*;
            let allowed = matches!(
                (s.s0, s.s1),
                (Gathered | Terminated, Gathered | Terminated)
                    | (Approach, Approach)
                    | (Rotate, Rotate)
                    | (Approach, Rotate)
                    | (Approach, Wait)
                    | (Rotate, Approach)
                    | (Rotate, Wait)
                    | (Wait, Approach)
                    | (Wait, Rotate)
            );
            if s == StatePair::new(Wait, Wait) && ww == CheckOutcome::Pass {
                ww = fail(t as u64, format!("state pair (W,W) at {c:?}"));
            }
            if !allowed && member == CheckOutcome::Pass {
                member = fail(t as u64, format!("state pair {s} outside the permitted set"));
            }
        }
        report.push("SS-NEVER-WW", ww);
        report.push("SS-MEMBERSHIP", member);
    } else {
        report.push("SS-NEVER-WW", na("SS traces with φ < π/2 only"));
        report.push("SS-MEMBERSHIP", na("SS traces with φ < π/2 only"));
    }

    // SD checks.
    if alg.id == AlgorithmId::SD && alg.in_validity_range() {
        if semi {
            report.push("SD-ALPHA", alpha_monotone(e, horizon_ticks, false));
        } else {
            report.push("SD-ALPHA", na("semi-synchronous traces only"));
        }
        report.push("SD-ROTATE-DIR", sd_rotate_dir(alg, e, &f, horizon_ticks));
    } else {
        report.push("SD-ALPHA", na("SD traces with φ < π/4 only"));
        report.push("SD-ROTATE-DIR", na("SD traces with φ < π/4 only"));
    }

    // AD checks.
    let ad = alg.id == AlgorithmId::AD && alg.in_validity_range();
    let ordered = e.configs[0].r0.y != e.configs[0].r1.y;
    if ad && ordered {
        report.push("AD-ORDER", ad_order(e, horizon_ticks));
        report.push("AD-ALPHA", alpha_monotone(e, horizon_ticks, true));
        report.push("AD-HALFPLANE", ad_halfplane(e, &f, horizon_ticks));
        report.push("AD-NO-AA", ad_no_aa(e, &f, horizon_ticks));
    } else {
        let why = if ad { "initial robots share a y-coordinate" } else { "AD traces with φ < π/6 only" };
        for id in ["AD-ORDER", "AD-ALPHA", "AD-HALFPLANE", "AD-NO-AA"] {
            report.push(id, na(why));
        }
    }

    report.push("GOAL-ABSORBING", goal_absorbing(e));
    report.push("PSEUDO-DETECT", pseudo_detect(e));
    report.push("DELTA-FLOOR", delta_floor(e, &f));
    report.push("FAIRNESS", fairness(e, &f));
    report.push("FRAME-FROZEN", frame_frozen(&f));
    if semi {
        report.push("SEMI-SYNC-LOOK", semi_sync_look(&f));
    } else {
        report.push("SEMI-SYNC-LOOK", na("asynchronous trace"));
    }
    report.push("DEVIATION-BOUND", deviation_bound(e, &f));
    report
}

/// α measured from the lower robot must stay in (0, π] and never increase
/// (`strict_upper` additionally requires α < π, i.e. the robots stay strictly
/// ordered in y).
fn alpha_monotone(e: &Execution, until: usize, strict_upper: bool) -> CheckOutcome {
    let Some((lower, _)) = canonical_order(&e.configs[0]) else {
        return CheckOutcome::Pass;
    };
    let mut prev: Option<f64> = None;
    for t in 0..until {
        let Some(a) = canonical_alpha(&e.configs[t], lower) else { break };
        let upper = if strict_upper { a < PI } else { a <= PI + CHECK_TOL };
        if a <= 0.0 || !upper {
            return fail(t as u64, format!("α = {a} left (0, π]"));
        }
        if let Some(p) = prev {
            let tol = angle_slack(&e.configs[t]).max(angle_slack(&e.configs[t - 1]));
            if a > p + tol {
                return fail(t as u64, format!("α increased from {p} to {a}"));
            }
        }
        prev = Some(a);
    }
    CheckOutcome::Pass
}

fn sd_rotate_dir(alg: &AlgorithmSpec, e: &Execution, f: &TraceFacts, until: usize) -> CheckOutcome {
    let omega = FRAC_PI_2 + alg.phi;
    let order = canonical_order(&e.configs[0]);
    for c in &f.cycles {
        if c.state != RobotState::Rotate || c.start as usize >= until {
            continue;
        }
        let conf = &e.configs[c.start as usize];
        let me = conf.robot(c.robot);
        let other = conf.robot(1 - c.robot);
        let expected = me + rotate(other - me, omega);
        if expected.distance(c.target) > CHECK_TOL * (1.0 + (other - me).norm()) {
            return fail(c.start, format!("robot {} rotate target {} differs from {}", c.robot, c.target, expected));
        }
        let Some((lower, _)) = order else { continue };
        let before = canonical_alpha(conf, lower);
        let mut moved = *conf;
        moved.set(c.robot, c.target);
        let after = canonical_alpha(&moved, lower);
        if let (Some(b), Some(a)) = (before, after) {
            if !(a > 0.0 && a <= b + angle_slack(conf).max(angle_slack(&moved))) {
                return fail(c.start, format!("robot {} rotation takes α from {b} to {a}, outside (0, {b}]", c.robot));
            }
        }
    }
    CheckOutcome::Pass
}

fn ad_order(e: &Execution, until: usize) -> CheckOutcome {
    let Some((lower, upper)) = canonical_order(&e.configs[0]) else {
        return CheckOutcome::Pass;
    };
    for t in 0..until {
        let c = &e.configs[t];
        if c.robot(lower).y >= c.robot(upper).y {
            return fail(
                t as u64,
                format!("lower robot y = {} not below upper robot y = {}", c.robot(lower).y, c.robot(upper).y),
            );
        }
    }
    CheckOutcome::Pass
}

fn ad_halfplane(e: &Execution, f: &TraceFacts, until: usize) -> CheckOutcome {
    let Some((lower, upper)) = canonical_order(&e.configs[0]) else {
        return CheckOutcome::Pass;
    };
    for c in &f.cycles {
        if c.start as usize >= until {
            continue;
        }
        let conf = &e.configs[c.start as usize];
        let l = conf.robot(lower);
        let dir = conf.robot(upper) - l;
        let len = dir.norm();
        if len == 0.0 {
            continue;
        }
        // Positive on the left of the directed line lower → upper.
        let signed = dir.cross(c.target - l) / len;
        let tol = CHECK_TOL + position_slack(conf).max(16.0 * f64::EPSILON * c.target.norm());
        let ok = if c.robot == lower { signed >= -tol } else { signed <= tol };
        if !ok {
            return fail(c.start, format!("robot {} target {} is {signed} off its half-plane", c.robot, c.target));
        }
    }
    CheckOutcome::Pass
}

fn ad_no_aa(e: &Execution, f: &TraceFacts, until: usize) -> CheckOutcome {
    let _ = e;
    for t in 0..until {
        if f.engaged[t] == [RobotState::Approach, RobotState::Approach] {
            return fail(t as u64, "both robots engaged in Approach".into());
        }
    }
    CheckOutcome::Pass
}

fn goal_absorbing(e: &Execution) -> CheckOutcome {
    let StopReason::Gathered(g) = e.stop else {
        return na("not gathered");
    };
    let Some(goal) = e.configs.get(g as usize) else {
        return fail(g, "certified tick beyond the trace".into());
    };
    for (t, c) in e.configs.iter().enumerate().skip(g as usize) {
        if c != goal {
            return fail(t as u64, format!("configuration moved after gathering at tick {g}"));
        }
    }
    CheckOutcome::Pass
}

fn pseudo_detect(e: &Execution) -> CheckOutcome {
    let unsettled = e.unsettled_ticks();
    let certified = match e.stop {
        StopReason::Gathered(g) => Some(g as usize),
        StopReason::Horizon => None,
    };
    for (t, c) in e.configs.iter().enumerate() {
        if !c.co_located() {
            continue;
        }
        let settled = !unsettled[t][0] && !unsettled[t][1];
        match certified {
            Some(g) if t == g && !settled => {
                return fail(t as u64, "gathering certified with an unsettled robot".into())
            }
            Some(g) if t < g && settled => return fail(t as u64, "settled co-location not certified".into()),
            None if settled => return fail(t as u64, "settled co-location not certified".into()),
            _ => {}
        }
    }
    CheckOutcome::Pass
}

fn delta_floor(e: &Execution, f: &TraceFacts) -> CheckOutcome {
    let delta = e.header.engine.delta;
    for c in &f.cycles {
        let Some(displaced) = c.displaced else { continue };
        let total = c.source.distance(c.target);
        let required = delta.min(total);
        if displaced < total && displaced < required - ARRIVAL_EPS {
            return fail(
                c.end.unwrap_or(c.start),
                format!("robot {} cycle closed after {displaced} of required {required}", c.robot),
            );
        }
    }
    CheckOutcome::Pass
}

fn fairness(e: &Execution, f: &TraceFacts) -> CheckOutcome {
    let k = e.header.engine.fairness_bound;
    // Activations happen on every tick except the last recorded one.
    let active_ticks = e.configs.len().saturating_sub(1);
    for r in 0..2 {
        let mut last: Option<u64> = None;
        for t in 0..active_ticks {
            if f.activated[t][r] {
                last = Some(t as u64);
            }
            if f.terminated_from[r].is_some_and(|tt| tt <= t as u64) || f.busy[t][r] {
                continue;
            }
            let t = t as u64;
            let overdue = match last {
                Some(l) => t - l >= k,
                None => t + 1 >= k,
            };
            if overdue {
                return fail(t, format!("robot {r} idle and not activated since {last:?}"));
            }
        }
    }
    CheckOutcome::Pass
}

fn frame_frozen(f: &TraceFacts) -> CheckOutcome {
    for c in &f.cycles {
        if let Some((d, s)) = c.end_frame {
            if d.to_bits() != c.deviation.to_bits() || s.to_bits() != c.scale.to_bits() {
                return fail(
                    c.end.unwrap_or(c.start),
                    format!("robot {} frame changed from ({}, {}) to ({d}, {s})", c.robot, c.deviation, c.scale),
                );
            }
        }
    }
    CheckOutcome::Pass
}

fn semi_sync_look(f: &TraceFacts) -> CheckOutcome {
    for c in &f.cycles {
        if c.state == RobotState::Terminated {
            continue;
        }
        if c.end != Some(c.start) {
            return fail(c.start, format!("robot {} cycle did not finish within its tick", c.robot));
        }
    }
    CheckOutcome::Pass
}

fn deviation_bound(e: &Execution, f: &TraceFacts) -> CheckOutcome {
    let compass = e.header.compass;
    for c in &f.cycles {
        if !compass.admits(c.deviation) {
            return fail(c.start, format!("deviation {} exceeds bound {}", c.deviation, compass.bound));
        }
        if compass.mode == CompassMode::Static && c.deviation.to_bits() != e.header.static_deviations[c.robot].to_bits()
        {
            return fail(c.start, format!("static compass of robot {} changed", c.robot));
        }
    }
    CheckOutcome::Pass
}

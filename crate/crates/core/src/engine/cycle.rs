use crate::algorithms::{decide, ActionKind, AlgorithmSpec, Decision};
use crate::frames::{to_global, to_local, LocalFrame, LocalPoint};
use crate::geometry::Point;

use super::{Configuration, EngineError, ARRIVAL_EPS};

/// What a robot sees and decides at activation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CyclePlan {
    pub observed: LocalPoint,
    pub decision: Decision,
    pub target_global: Point,
}

/// Look and compute for a robot whose frame is `frame`, observing the other
/// robot at `other`.
///
/// Approaching targets are the observed global point itself and waiting
/// targets the robot's own position, so neither picks up round-off from the
/// frame transform; only west and rotation targets go through `to_global`.
pub fn plan_cycle(alg: &AlgorithmSpec, frame: &LocalFrame, other: Point) -> CyclePlan {
    let observed = to_local(frame, other);
    let decision = decide(alg, observed);
    let target_global = match decision.action {
        ActionKind::MoveToObserved => other,
        ActionKind::Stay => frame.origin,
        ActionKind::MoveToWest | ActionKind::RotateBy(_) => to_global(frame, decision.target_local),
    };
    CyclePlan { observed, decision, target_global }
}

/// Moves `requested` further along the segment `source → target`, given
/// `displaced` already covered. Returns the new covered distance and the
/// resulting position; a move that ends within round-off of the target lands
/// exactly on it.
pub fn advance_along(source: Point, target: Point, displaced: f64, requested: f64) -> (f64, Point) {
    let total = source.distance(target);
    if total == 0.0 {
        return (0.0, target);
    }
    let mut covered = (displaced + requested.max(0.0)).min(total);
    // A remainder below a few ulps of the coordinates cannot be represented
    // as a distinct position, so it counts as arrival too.
    let magnitude = [source.x, source.y, target.x, target.y].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if total - covered <= (ARRIVAL_EPS * total.max(1.0)).max(4.0 * f64::EPSILON * magnitude) {
        covered = total;
    }
    if covered == total {
        return (total, target);
    }
    let pos = source + (target - source) * (covered / total);
    (covered, pos)
}

/// One semi-synchronous step: every activated robot observes `config`,
/// computes its target and moves `progress[i]` toward it (values above the
/// remaining distance mean "all the way").
pub fn step_semi_sync(
    alg: &AlgorithmSpec,
    config: &Configuration,
    activations: [bool; 2],
    frames: [LocalFrame; 2],
    progress: [f64; 2],
    delta: f64,
) -> Result<Configuration, EngineError> {
    if !activations[0] && !activations[1] {
        return Err(EngineError::EmptyActivation { tick: 0 });
    }
    let mut next = *config;
    for i in 0..2 {
        if !activations[i] {
            continue;
        }
        let frame = LocalFrame { origin: config.robot(i), ..frames[i] };
        if !(frame.scale.is_finite() && frame.scale > 0.0) {
            return Err(EngineError::BadScale { tick: 0, robot: i, scale: frame.scale });
        }
        let plan = plan_cycle(alg, &frame, config.robot(1 - i));
        let source = config.robot(i);
        let p = progress[i];
        if p.is_nan() || p < 0.0 {
            return Err(EngineError::BadProgress { tick: 0, robot: i, value: p });
        }
        let (covered, pos) = advance_along(source, plan.target_global, 0.0, p);
        let total = source.distance(plan.target_global);
        let required = delta.min(total);
        if covered < total && covered < required - ARRIVAL_EPS {
            return Err(EngineError::DeltaFloor { tick: 0, robot: i, displaced: covered, required });
        }
        next.set(i, pos);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{AlgorithmId, AlgorithmSpec};

    fn aligned(c: &Configuration) -> [LocalFrame; 2] {
        [LocalFrame::aligned(c.r0), LocalFrame::aligned(c.r1)]
    }

    #[test]
    fn horizontal_pair_gathers_in_one_step() {
        let alg = AlgorithmSpec::new(AlgorithmId::SS, 0.0).unwrap();
        let c = Configuration::new(Point::ORIGIN, Point::new(2.0, 0.0));
        let n = step_semi_sync(&alg, &c, [true, true], aligned(&c), [f64::INFINITY; 2], 0.01).unwrap();
        assert_eq!(n, Configuration::new(Point::ORIGIN, Point::ORIGIN));
    }

    #[test]
    fn vertical_pair_swaps_into_west_and_origin() {
        let alg = AlgorithmSpec::new(AlgorithmId::SS, 0.0).unwrap();
        let c = Configuration::new(Point::ORIGIN, Point::new(0.0, -1.0));
        let n = step_semi_sync(&alg, &c, [true, true], aligned(&c), [f64::INFINITY; 2], 0.01).unwrap();
        assert_eq!(n, Configuration::new(Point::new(-1.0, 0.0), Point::ORIGIN));
    }

    #[test]
    fn waiting_robot_stays_put() {
        let alg = AlgorithmSpec::new(AlgorithmId::SS, 0.0).unwrap();
        let c = Configuration::new(Point::ORIGIN, Point::new(2.0, 0.0));
        let n = step_semi_sync(&alg, &c, [true, false], aligned(&c), [f64::INFINITY; 2], 0.01).unwrap();
        assert_eq!(n, c);
    }

    #[test]
    fn progress_below_floor_is_rejected() {
        let alg = AlgorithmSpec::new(AlgorithmId::SS, 0.0).unwrap();
        let c = Configuration::new(Point::ORIGIN, Point::new(2.0, 0.0));
        let err = step_semi_sync(&alg, &c, [false, true], aligned(&c), [0.0, 0.005], 0.01).unwrap_err();
        assert!(matches!(err, EngineError::DeltaFloor { robot: 1, .. }));
        let ok = step_semi_sync(&alg, &c, [false, true], aligned(&c), [0.0, 0.01], 0.01).unwrap();
        assert!((ok.r1.x - 1.99).abs() < 1e-15);
    }

    #[test]
    fn advance_snaps_near_arrival() {
        let s = Point::new(0.1, 0.2);
        let t = Point::new(0.7, -0.3);
        let total = s.distance(t);
        let (c, p) = advance_along(s, t, total - 1e-15, 0.0);
        assert_eq!((c, p), (total, t));
        let (c, p) = advance_along(s, t, 0.0, total / 2.0);
        assert!(c < total && p != t);
    }
}

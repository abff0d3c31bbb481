//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the binary exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, TAU};
use std::path::PathBuf;

use acceptance::{run_all, Criterion, Verdict};
use gathering::adversary::{replay_check, symmetric_mirror, worst_case_search, ScenarioScript, SearchConfig};
use gathering::algorithms::{decide, region_table, AlgorithmId, RobotState, StatePair};
use gathering::analysis::{check_trace, state_pair, CheckOutcome};
use gathering::engine::{
    gathering_status, run, Configuration, EngineConfig, EventKind, GatheringStatus, SchedulerMode, StopReason,
};
use gathering::frames::{to_global, to_local, CompassMode, CompassSpec, LocalFrame, LocalPoint};
use gathering::geometry::{rotate, Angle, AngleExpr, Point};
use gathering::trace::{trace_from_str, trace_to_string};
use gathering_cli::runspec::{AdversaryChoice, RunSpec};
use gathering_cli::sweep::{run_execution, run_sweep, trial_seed, CellResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRIALS: usize = 500;
const BASE_SEED: u64 = 2024;

fn cell(id: AlgorithmId, phi: f64, mode: SchedulerMode, compass: CompassMode) -> RunSpec {
    RunSpec {
        algorithm: id,
        phi: AngleExpr(phi),
        scheduler: mode,
        compass,
        trials: TRIALS,
        seed: BASE_SEED,
        ..RunSpec::default()
    }
}

fn ss_grid(mode: SchedulerMode) -> Vec<RunSpec> {
    [0.0, PI / 6.0, FRAC_PI_3, 0.49 * PI]
        .into_iter()
        .map(|phi| cell(AlgorithmId::SS, phi, mode, CompassMode::Static))
        .collect()
}

fn sd_grid() -> Vec<RunSpec> {
    [0.0, PI / 8.0, 0.24 * PI]
        .into_iter()
        .map(|phi| cell(AlgorithmId::SD, phi, SchedulerMode::SemiSynchronous, CompassMode::Dynamic))
        .collect()
}

fn sd_search_grid() -> Vec<RunSpec> {
    sd_grid()
        .into_iter()
        .map(|s| RunSpec { adversary: AdversaryChoice::Search, search_budget: 1000, trials: 1, ..s })
        .collect()
}

fn ad_grid() -> Vec<RunSpec> {
    [0.0, PI / 12.0, 0.16 * PI]
        .into_iter()
        .map(|phi| cell(AlgorithmId::AD, phi, SchedulerMode::Asynchronous, CompassMode::Dynamic))
        .collect()
}

fn describe(c: &CellResult) -> String {
    format!(
        "{} φ={:.3}π {}/{} gathered, max {} ticks",
        c.algorithm,
        c.phi / PI,
        c.gathered,
        c.trials,
        c.max_ticks_to_gather.map_or("-".to_string(), |t| t.to_string())
    )
}

fn all_gathered(cells: &[RunSpec]) -> Verdict {
    let result = run_sweep(cells, BASE_SEED);
    let ok = result.cells.iter().all(|c| c.all_gathered() && c.aborted == 0);
    let detail: Vec<String> = result.cells.iter().map(describe).collect();
    Verdict::new(ok, detail.join("; "))
}

fn crit1() -> Verdict {
    all_gathered(&ss_grid(SchedulerMode::SemiSynchronous))
}

fn crit2() -> Verdict {
    all_gathered(&ss_grid(SchedulerMode::Asynchronous))
}

fn crit3a() -> Verdict {
    let mut cells = sd_grid();
    cells.extend(sd_search_grid());
    all_gathered(&cells)
}

fn crit3b() -> Verdict {
    let mut cells = sd_grid();
    cells.extend(sd_search_grid());
    let result = run_sweep(&cells, BASE_SEED);
    let mut parts = Vec::new();
    let mut violations = 0;
    for c in &result.cells {
        let n = c.invariant_failures.get("SD-ALPHA").copied().unwrap_or(0);
        violations += n;
        parts.push(format!("{} φ={:.3}π {}/{} traces violate", c.adversary, c.phi / PI, n, c.trials));
    }
    // One concrete witness for the log.
    if let Some(c) = result.cells.iter().find(|c| c.invariant_failures.contains_key("SD-ALPHA")) {
        let spec = cells.iter().find(|s| s.phi.0 == c.phi && s.adversary == c.adversary).unwrap();
        for &seed in &c.failing_seeds {
            let e = run_execution(spec, seed).unwrap();
            if let Some(CheckOutcome::Fail { tick, detail }) = check_trace(&e.header.algorithm, &e).get("SD-ALPHA") {
                parts.push(format!("e.g. seed {seed} tick {tick}: {detail}"));
                break;
            }
        }
    }
    Verdict::new(violations == 0, parts.join("; "))
}

fn crit4() -> Verdict {
    let cells = ad_grid();
    let result = run_sweep(&cells, BASE_SEED);
    let ids = ["AD-ORDER", "AD-ALPHA", "AD-HALFPLANE", "AD-NO-AA"];
    let mut ok = true;
    let mut parts = Vec::new();
    for c in &result.cells {
        let bad: Vec<String> =
            ids.iter().filter_map(|id| c.invariant_failures.get(*id).map(|n| format!("{id}:{n}"))).collect();
        ok &= c.all_gathered() && c.aborted == 0 && bad.is_empty();
        parts.push(format!(
            "{}, checks {}",
            describe(c),
            if bad.is_empty() { "clean".to_string() } else { bad.join(",") }
        ));
    }
    Verdict::new(ok, parts.join("; "))
}

fn crit5() -> Verdict {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/terminate_variant_stuck.toml");
    let e = match ScenarioScript::load(&path).and_then(|s| s.run()) {
        Ok(e) => e,
        Err(err) => return Verdict::new(false, err.to_string()),
    };
    let p = Point::new;
    // r1 approaches onto r0, then r0 completes its rotate move to (-1, 0).
    let expected = [
        (p(0.0, 0.0), p(0.0, -1.0)),
        (p(0.0, 0.0), p(0.0, 0.0)),
        (p(-1.0, 0.0), p(0.0, 0.0)),
        (p(-1.0, 0.0), p(0.0, 0.0)),
        (p(-1.0, 0.0), p(0.0, 0.0)),
    ];
    let mut problems = Vec::new();
    if e.configs.len() != expected.len() {
        problems.push(format!("{} configurations, expected {}", e.configs.len(), expected.len()));
    }
    for (t, (c, (a, b))) in e.configs.iter().zip(expected).enumerate() {
        if !(c.r0.bits_eq(a) && c.r1.bits_eq(b)) {
            problems.push(format!("tick {t}: ({}, {})", c.r0, c.r1));
        }
    }
    if e.terminated_at(1) != Some(1) || e.terminated_at(0).is_some() {
        problems.push("termination timeline differs".into());
    }
    let look = e.events_at(2).find_map(|ev| match ev.kind {
        EventKind::Look { state, .. } if ev.robot == 0 => Some(state),
        _ => None,
    });
    if look != Some(RobotState::Wait) {
        problems.push(format!("r0 looked {look:?} at tick 2"));
    }
    if let Some(c2) = e.config(2) {
        let frames = [LocalFrame::aligned(c2.r0), LocalFrame::aligned(c2.r1)];
        let s = state_pair(&e.header.algorithm, c2, &frames);
        if s != StatePair::new(RobotState::Wait, RobotState::Approach) {
            problems.push(format!("state pair {s} at tick 2"));
        }
    }
    let status = gathering_status(&e);
    if status != (GatheringStatus::Stuck { tick: 2, terminated: 1 }) {
        problems.push(format!("status {status:?}"));
    }
    if problems.is_empty() {
        Verdict::new(true, "stuck from tick 2 at ((-1, 0), (0, 0)), r1 terminated at tick 1, r0 sees (W,A)")
    } else {
        Verdict::new(false, problems.join("; "))
    }
}

fn crit6a() -> Verdict {
    let alg = region_table(AlgorithmId::SS, FRAC_PI_2, false, true).unwrap();
    let compass = CompassSpec::new(CompassMode::Static, FRAC_PI_2).unwrap();
    let engine = EngineConfig::semi_sync().with_horizon(10_000);
    // Horizontal starts: the opposite compasses at ∓π/2 are the only ones the
    // bound admits, and they keep such a pair point-symmetric.
    let mut starts = vec![Configuration::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0))];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..9 {
        let (x, y, d) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(engine.delta..10.0));
        starts.push(Configuration::new(Point::new(x, y), Point::new(x + d, y)));
        starts.push(Configuration::new(Point::new(x + d, y), Point::new(x, y)));
    }
    let mut worst = f64::INFINITY;
    for (i, start) in starts.iter().enumerate() {
        let mut adv = symmetric_mirror(0.0, &compass).unwrap();
        let e = match run(&alg, engine, compass, &mut adv, *start, i as u64) {
            Ok(e) => e,
            Err(err) => return Verdict::new(false, format!("start {i}: {err}")),
        };
        if e.stop != StopReason::Horizon || e.last_tick() != 10_000 {
            return Verdict::new(false, format!("start {i} stopped with {:?} at {}", e.stop, e.last_tick()));
        }
        let d0 = start.r0.distance(start.r1);
        let ratio = e.configs.iter().map(|c| c.r0.distance(c.r1) / d0).fold(f64::INFINITY, f64::min);
        worst = worst.min(ratio);
    }
    Verdict::new(worst >= 0.5, format!("{} starts, 10^4 ticks each, min distance / initial = {worst:.6}", starts.len()))
}

fn crit6b() -> Verdict {
    let alg = region_table(AlgorithmId::SD, FRAC_PI_4, false, true).unwrap();
    let compass = CompassSpec::new(CompassMode::Dynamic, FRAC_PI_4).unwrap();
    let cfg = SearchConfig::new(alg, compass, EngineConfig::semi_sync().with_horizon(1000), 10_000, 7);
    let r = worst_case_search(&cfg);
    let horizon_run = r.best_execution.as_ref().is_some_and(|e| e.stop == StopReason::Horizon && e.last_tick() == 1000);
    if let Err(err) = r.revalidate(&cfg) {
        return Verdict::new(false, format!("report does not revalidate: {err}"));
    }
    Verdict::new(
        r.cycle_found || horizon_run,
        format!(
            "{} candidates, {} non-gathering, cycle_found={}, horizon-length non-gathering best={}",
            r.candidates, r.non_gathering, r.cycle_found, horizon_run
        ),
    )
}

/// State and local target straight from the boundary inequalities.
fn naive(id: AlgorithmId, phi: f64, p: Point) -> (RobotState, Point) {
    use RobotState::*;
    if p.x == 0.0 && p.y == 0.0 {
        return (Gathered, Point::ORIGIN);
    }
    let t = p.y.atan2(p.x).rem_euclid(TAU);
    let t = if t >= TAU { 0.0 } else { t };
    match id {
        AlgorithmId::SS => {
            if t > 0.0 && t <= PI {
                (Approach, p)
            } else if t > PI && t <= 1.5 * PI + phi {
                (Rotate, Point::new(-p.norm(), 0.0))
            } else {
                (Wait, Point::ORIGIN)
            }
        }
        AlgorithmId::SD => {
            if t > FRAC_PI_2 + phi && t <= 1.5 * PI - phi {
                (Approach, p)
            } else if t <= FRAC_PI_2 - phi || t > 1.5 * PI + phi {
                (Wait, Point::ORIGIN)
            } else {
                (Rotate, rotate(p, FRAC_PI_2 + phi))
            }
        }
        AlgorithmId::AD => {
            if t >= 2.0 * FRAC_PI_3 + phi && t < 1.5 * PI {
                (Approach, p)
            } else if t >= 1.5 * PI || t <= FRAC_PI_3 - phi {
                (Wait, Point::ORIGIN)
            } else {
                (Rotate, rotate(p, 2.0 * FRAC_PI_3 + 2.0 * phi))
            }
        }
    }
}

fn crit7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = Vec::new();
    let mut points = 0usize;
    for id in [AlgorithmId::SS, AlgorithmId::SD, AlgorithmId::AD] {
        let limit = id.validity_limit();
        for phi in [0.0, limit / 8.0, limit / 3.0, limit / 2.0, 0.9 * limit, 0.99 * limit] {
            let alg = region_table(id, phi, false, false).unwrap();
            for _ in 0..100_000 {
                let p = Point::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
                let d = decide(&alg, LocalPoint::new(p.x, p.y));
                let (state, target) = naive(id, phi, p);
                points += 1;
                if d.state != state || d.target_local.as_vector().distance(target) > 1e-12 * (1.0 + p.norm()) {
                    mismatches.push(format!("{id} φ={phi} p={p}"));
                }
            }
            // Partition: exactly one region per grid angle, measures summing to 2π.
            let n = 100_000;
            for k in 0..n {
                let theta = Angle::new(TAU * k as f64 / n as f64);
                let hits = alg.regions.iter().filter(|r| r.interval.contains(theta)).count();
                if hits != 1 {
                    mismatches.push(format!("{id} φ={phi} angle {} in {hits} regions", theta.radians()));
                }
            }
            let total: f64 = alg.regions.iter().map(|r| r.interval.measure()).sum();
            if (total - TAU).abs() > 1e-12 {
                mismatches.push(format!("{id} φ={phi} measures sum to {total}"));
            }
        }
    }
    let first = mismatches.first().cloned().unwrap_or_default();
    Verdict::new(
        mismatches.is_empty(),
        format!("{points} points and 18 partition grids of 10^5 angles, {} mismatches {first}", mismatches.len()),
    )
}

fn crit8() -> Verdict {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let coord = |rng: &mut ChaCha8Rng| Point::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
    let mut worst_round_trip = 0.0f64;
    for _ in 0..10_000 {
        let f = LocalFrame::new(coord(&mut rng), rng.gen_range(-PI..PI), rng.gen_range(0.1..10.0)).unwrap();
        let p = coord(&mut rng);
        worst_round_trip = worst_round_trip.max(to_global(&f, to_local(&f, p)).distance(p));
    }
    if worst_round_trip > 1e-12 {
        problems.push(format!("frame round-trip error {worst_round_trip:e}"));
    }

    let algorithms = [(AlgorithmId::SS, 0.49 * PI), (AlgorithmId::SD, 0.24 * PI), (AlgorithmId::AD, 0.16 * PI)];
    let mut scale_bad = 0;
    let mut deviation_bad = 0;
    for i in 0..10_000 {
        let (id, limit) = algorithms[i % 3];
        let phi = rng.gen_range(0.0..limit);
        let alg = region_table(id, phi, false, false).unwrap();
        let (origin, other) = (coord(&mut rng), coord(&mut rng));
        let deviation = rng.gen_range(-phi..=phi);
        let target = |scale: f64| {
            let f = LocalFrame::new(origin, deviation, scale).unwrap();
            to_global(&f, decide(&alg, to_local(&f, other)).target_local)
        };
        let base = target(1.0);
        let tol = 1e-10 * (1.0 + origin.norm() + other.norm());
        let s = rng.gen_range(0.1..10.0);
        if target(s).distance(base) > tol {
            scale_bad += 1;
        }
        let omega = rng.gen_range(0.0..TAU);
        let f = LocalFrame::new(origin, rng.gen_range(-PI..PI), 1.0).unwrap();
        let via_frame = to_global(&f, LocalPoint::from_vector(rotate(to_local(&f, other).as_vector(), omega)));
        if via_frame.distance(origin + rotate(other - origin, omega)) > tol {
            deviation_bad += 1;
        }
    }
    if scale_bad + deviation_bad > 0 {
        problems.push(format!("{scale_bad} scale and {deviation_bad} deviation cases differ"));
    }

    let mut cells = ss_grid(SchedulerMode::SemiSynchronous);
    cells.extend(ss_grid(SchedulerMode::Asynchronous));
    cells.extend(sd_grid());
    cells.extend(ad_grid());
    let mut traces = 0;
    for (c, spec) in cells.iter().enumerate() {
        for t in 0..spec.trials {
            let seed = trial_seed(BASE_SEED, c, t);
            let e = match run_execution(spec, seed) {
                Ok(e) => e,
                Err(err) => {
                    problems.push(format!("{} seed {seed}: {err}", spec.algorithm));
                    continue;
                }
            };
            traces += 1;
            let report = check_trace(&e.header.algorithm, &e);
            for id in ["DELTA-FLOOR", "FAIRNESS"] {
                if report.get(id) != Some(&CheckOutcome::Pass) {
                    problems.push(format!("{id} on {} seed {seed}: {:?}", spec.algorithm, report.get(id)));
                }
            }
            let text = trace_to_string(&e);
            match trace_from_str(&text) {
                Ok(back) if back == e => {
                    if let Err(m) = replay_check(&back) {
                        problems.push(format!("replay of {} seed {seed}: {m}", spec.algorithm));
                    }
                }
                Ok(_) => problems.push(format!("{} seed {seed}: trace did not round-trip", spec.algorithm)),
                Err(err) => problems.push(format!("{} seed {seed}: {err}", spec.algorithm)),
            }
        }
    }
    let first = problems.first().cloned().unwrap_or_default();
    Verdict::new(
        problems.is_empty(),
        format!(
            "round-trip max {worst_round_trip:.1e}, 10^4 scale and deviation cases, {traces} traces checked and replayed; {} problems {first}",
            problems.len()
        ),
    )
}

fn main() {
    let criteria = [
        Criterion { id: "crit1", title: "SS static, semi-synchronous, all gather", run: crit1 },
        Criterion { id: "crit2", title: "SS static, asynchronous, all gather", run: crit2 },
        Criterion { id: "crit3a", title: "SD dynamic, random and search adversaries, all gather", run: crit3a },
        Criterion { id: "crit3b", title: "SD segment argument never increases (tol 1e-10)", run: crit3b },
        Criterion { id: "crit4", title: "AD dynamic, asynchronous, all gather with clean AD checks", run: crit4 },
        Criterion { id: "crit5", title: "terminate variant scripted run ends stuck", run: crit5 },
        Criterion { id: "crit6a", title: "mirror adversary keeps SS apart at a quarter turn", run: crit6a },
        Criterion { id: "crit6b", title: "search finds a non-gathering SD run at an eighth turn", run: crit6b },
        Criterion { id: "crit7", title: "decisions match the inequality oracle; regions partition", run: crit7 },
        Criterion { id: "crit8", title: "frame, trace and replay model invariants", run: crit8 },
    ];
    let failed = run_all(&criteria);
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::PathBuf;

use gathering::adversary::{
    random_fair, replay_check, symmetric_mirror, worst_case_search, MirrorError, ReplayMismatch, ScenarioScript,
    SearchConfig,
};
use gathering::algorithms::{region_table, AlgorithmId, AlgorithmSpec, RobotState, StatePair};
use gathering::analysis::{check_trace, state_pair, CheckOutcome};
use gathering::engine::{
    gathering_status, is_settled, pseudo_gathered_ticks, run, Configuration, EngineConfig, EngineError, EventKind,
    Execution, GatheringStatus, SchedulerMode, StopReason,
};
use gathering::frames::{to_local, CompassMode, CompassSpec, LocalFrame};
use gathering::geometry::Point;
use gathering::trace::{trace_from_str, trace_to_string};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scenario(name: &str) -> ScenarioScript {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    ScenarioScript::load(&path).unwrap()
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn random_run(
    id: AlgorithmId,
    phi: f64,
    mode: SchedulerMode,
    compass: CompassMode,
    seed: u64,
) -> (AlgorithmSpec, Execution) {
    let alg = region_table(id, phi, false, false).unwrap();
    let compass = CompassSpec::new(compass, phi).unwrap();
    let engine = EngineConfig { mode, ..EngineConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = gathering::adversary::sample_initial(&mut rng, 10.0, engine.delta);
    let e = run(&alg, engine, compass, &mut random_fair(seed), initial, seed).unwrap();
    (alg, e)
}

fn script(text: &str) -> ScenarioScript {
    ScenarioScript::parse(text).unwrap()
}

const ASYNC_SS: &str = r#"
initial = [[0.0, 0.0], [0.0, -1.0]]
continuation = "halt"
[algorithm]
id = "SS"
[engine]
mode = "asynchronous"
horizon = 3
[compass]
mode = "static"
"#;

#[test]
fn terminate_variant_run_ends_stuck() {
    let e = scenario("terminate_variant_stuck.toml").run().unwrap();
    let last = e.configs.last().unwrap();
    assert!(last.r0.bits_eq(pt(-1.0, 0.0)), "{:?}", last);
    assert!(last.r1.bits_eq(pt(0.0, 0.0)), "{:?}", last);
    assert_eq!(e.terminated_at(1), Some(1));
    assert_eq!(e.terminated_at(0), None);
    let look = e
        .events_at(2)
        .find_map(|ev| match ev.kind {
            EventKind::Look { state, .. } if ev.robot == 0 => Some(state),
            _ => None,
        })
        .unwrap();
    assert_eq!(look, RobotState::Wait);
    let c2 = e.config(2).unwrap();
    let frames = [LocalFrame::aligned(c2.r0), LocalFrame::aligned(c2.r1)];
    assert_eq!(state_pair(&e.header.algorithm, c2, &frames), StatePair::new(RobotState::Wait, RobotState::Approach));
    assert_eq!(gathering_status(&e), GatheringStatus::Stuck { tick: 2, terminated: 1 });
    assert_eq!(e.stop, StopReason::Horizon);
}

#[test]
fn opening_look_at_the_boundary_bound() {
    let e = scenario("sd_boundary_opening.toml").run().unwrap();
    let states: Vec<(usize, RobotState)> = e
        .events_at(0)
        .filter_map(|ev| match ev.kind {
            EventKind::Look { state, .. } => Some((ev.robot, state)),
            _ => None,
        })
        .collect();
    assert_eq!(states, vec![(0, RobotState::Wait), (1, RobotState::Rotate)]);
}

#[test]
fn horizontal_pair_gathers_at_tick_one() {
    let s = script(
        r#"
initial = [[0.0, 0.0], [2.0, 0.0]]
[algorithm]
id = "SS"
[engine]
mode = "semi-synchronous"
[compass]
mode = "static"
"#,
    );
    let e = s.run().unwrap();
    assert_eq!(e.stop, StopReason::Gathered(1));
    assert_eq!(gathering_status(&e), GatheringStatus::Gathered(1));
    assert_eq!(e.configs.len(), 2);
}

#[test]
fn co_located_start_is_gathered_at_zero() {
    for id in [AlgorithmId::SS, AlgorithmId::SD, AlgorithmId::AD] {
        let alg = region_table(id, 0.0, false, false).unwrap();
        let c = Configuration::new(pt(3.0, 3.0), pt(3.0, 3.0));
        let compass = CompassSpec::new(CompassMode::Dynamic, 0.0).unwrap();
        let e = run(&alg, EngineConfig::asynchronous(), compass, &mut random_fair(1), c, 1).unwrap();
        assert_eq!(e.stop, StopReason::Gathered(0));
        assert_eq!(e.configs.len(), 1);
    }
}

#[test]
fn horizon_cutoff_keeps_eleven_configurations() {
    let alg = region_table(AlgorithmId::SS, FRAC_PI_2, false, true).unwrap();
    let compass = CompassSpec::new(CompassMode::Static, FRAC_PI_2).unwrap();
    let mut adv = symmetric_mirror(0.0, &compass).unwrap();
    let c = Configuration::new(pt(0.0, 0.0), pt(1.0, 0.0));
    let e = run(&alg, EngineConfig::semi_sync().with_horizon(10), compass, &mut adv, c, 0).unwrap();
    assert_eq!(e.configs.len(), 11);
    assert_eq!(e.stop, StopReason::Horizon);
    assert_eq!(gathering_status(&e), GatheringStatus::Inconclusive);
}

#[test]
fn mirror_needs_a_quarter_turn_bound() {
    let compass = CompassSpec::new(CompassMode::Static, PI / 3.0).unwrap();
    assert!(matches!(symmetric_mirror(0.0, &compass), Err(MirrorError::BoundTooSmall { .. })));
    let compass = CompassSpec::new(CompassMode::Static, FRAC_PI_2).unwrap();
    let alg = region_table(AlgorithmId::SS, FRAC_PI_2, false, true).unwrap();
    let mut adv = symmetric_mirror(0.0, &compass).unwrap();
    let c = Configuration::new(pt(1.0, 1.0), pt(1.0, 1.0));
    let e = run(&alg, EngineConfig::semi_sync(), compass, &mut adv, c, 0).unwrap();
    assert_eq!(e.stop, StopReason::Gathered(0));
}

#[test]
fn runs_are_deterministic() {
    for mode in [SchedulerMode::SemiSynchronous, SchedulerMode::Asynchronous] {
        let (_, a) = random_run(AlgorithmId::SS, PI / 3.0, mode, CompassMode::Static, 42);
        let (_, b) = random_run(AlgorithmId::SS, PI / 3.0, mode, CompassMode::Static, 42);
        assert_eq!(trace_to_string(&a), trace_to_string(&b));
        let (_, c) = random_run(AlgorithmId::SS, PI / 3.0, mode, CompassMode::Static, 43);
        assert_ne!(trace_to_string(&a), trace_to_string(&c));
    }
}

#[test]
fn traces_round_trip_and_replay_bit_exactly() {
    let cases = [
        (AlgorithmId::SS, PI / 6.0, SchedulerMode::SemiSynchronous, CompassMode::Static),
        (AlgorithmId::SS, 0.49 * PI, SchedulerMode::Asynchronous, CompassMode::Static),
        (AlgorithmId::SD, PI / 8.0, SchedulerMode::SemiSynchronous, CompassMode::Dynamic),
        (AlgorithmId::AD, PI / 12.0, SchedulerMode::Asynchronous, CompassMode::Dynamic),
    ];
    for (id, phi, mode, compass) in cases {
        for seed in 0..20 {
            let (_, e) = random_run(id, phi, mode, compass, seed);
            let text = trace_to_string(&e);
            let back = trace_from_str(&text).unwrap();
            assert_eq!(back, e);
            assert_eq!(trace_to_string(&back), text);
            replay_check(&back).unwrap();
        }
    }
}

#[test]
fn corrupted_position_is_flagged_by_replay() {
    let (_, mut e) = random_run(AlgorithmId::SS, PI / 6.0, SchedulerMode::Asynchronous, CompassMode::Static, 5);
    let t = e.configs.len() / 2;
    e.configs[t].r0.x += 1e-9;
    match replay_check(&e) {
        Err(ReplayMismatch::Config { tick, .. }) => assert_eq!(tick, t as u64),
        other => panic!("expected a configuration mismatch, got {other:?}"),
    }
}

#[test]
fn malformed_trace_reports_line_number() {
    let (_, e) = random_run(AlgorithmId::SS, 0.0, SchedulerMode::SemiSynchronous, CompassMode::Static, 2);
    let mut lines: Vec<String> = trace_to_string(&e).lines().map(String::from).collect();
    lines[2] = "{\"record\":\"config\",\"tick\":".to_string();
    let err = trace_from_str(&lines.join("\n")).unwrap_err();
    assert!(err.to_string().starts_with("line 3:"), "{err}");
}

#[test]
fn unit_fairness_activates_everyone_every_tick() {
    let alg = region_table(AlgorithmId::SS, PI / 6.0, false, false).unwrap();
    let compass = CompassSpec::new(CompassMode::Static, PI / 6.0).unwrap();
    for mode in [SchedulerMode::SemiSynchronous, SchedulerMode::Asynchronous] {
        let engine = EngineConfig { mode, fairness_bound: 1, ..EngineConfig::default() };
        let c = Configuration::new(pt(0.0, 0.0), pt(3.0, 4.0));
        let e = run(&alg, engine, compass, &mut random_fair(9), c, 9).unwrap();
        for t in 0..e.last_tick() {
            for r in 0..2 {
                let activated = e.events_at(t).any(|ev| ev.robot == r && matches!(ev.kind, EventKind::Activate { .. }));
                assert!(activated, "{mode:?}: robot {r} idle at tick {t}");
            }
        }
    }
}

#[test]
fn random_deviations_respect_the_bound() {
    let phi = PI / 8.0;
    let mut draws = 0;
    let mut seed = 0;
    while draws < 10_000 {
        let (_, e) = random_run(AlgorithmId::SD, phi, SchedulerMode::SemiSynchronous, CompassMode::Dynamic, seed);
        for ev in &e.events {
            if let EventKind::Activate { deviation, .. } = ev.kind {
                assert!(deviation.abs() <= phi, "deviation {deviation}");
                draws += 1;
            }
        }
        seed += 1;
    }
}

#[test]
fn static_deviations_stay_fixed() {
    let (_, e) = random_run(AlgorithmId::SS, PI / 3.0, SchedulerMode::Asynchronous, CompassMode::Static, 11);
    for ev in &e.events {
        if let EventKind::Activate { deviation, .. } = ev.kind {
            assert_eq!(deviation.to_bits(), e.header.static_deviations[ev.robot].to_bits());
        }
    }
}

#[test]
fn asynchronous_look_can_catch_a_robot_mid_move() {
    let s = script(&format!(
        "{ASYNC_SS}
[[directive]]
tick = 0
robot = 1
kind = \"activate\"
[[directive]]
tick = 0
robot = 1
kind = \"progress\"
fraction = 0.5
[[directive]]
tick = 1
robot = 0
kind = \"activate\"
"
    ));
    let e = s.run().unwrap();
    let mid = e.config(1).unwrap().r1;
    assert_eq!(mid, pt(0.0, -0.5));
    let observed = e
        .events_at(1)
        .find_map(|ev| match ev.kind {
            EventKind::Look { observed, .. } if ev.robot == 0 => Some(observed),
            _ => None,
        })
        .unwrap();
    assert_eq!(observed, to_local(&LocalFrame::aligned(pt(0.0, 0.0)), mid));
    assert!(!is_settled(&e, 1, 1));
    assert!(is_settled(&e, 0, 0));
}

#[test]
fn closing_below_the_floor_aborts() {
    let short = script(&format!(
        "{ASYNC_SS}
[[directive]]
tick = 0
robot = 1
kind = \"activate\"
[[directive]]
tick = 0
robot = 1
kind = \"progress\"
displacement = 0.005
[[directive]]
tick = 1
robot = 1
kind = \"close\"
"
    ));
    match short.run() {
        Err(gathering::adversary::ScriptError::Engine(EngineError::DeltaFloor { tick: 1, robot: 1, .. })) => {}
        other => panic!("expected a δ-floor abort, got {other:?}"),
    }
    let exact = script(&format!(
        "{ASYNC_SS}
[[directive]]
tick = 0
robot = 1
kind = \"activate\"
[[directive]]
tick = 0
robot = 1
kind = \"progress\"
displacement = 0.01
[[directive]]
tick = 1
robot = 1
kind = \"close\"
"
    ));
    let e = exact.run().unwrap();
    assert!(e.events_at(1).any(|ev| ev.robot == 1 && matches!(ev.kind, EventKind::CycleEnd { .. })));
}

#[test]
fn co_location_with_a_pending_move_is_only_pseudo_gathering() {
    let s = script(&format!(
        "{ASYNC_SS}
[[directive]]
tick = 0
robot = 0
kind = \"activate\"
[[directive]]
tick = 0
robot = 1
kind = \"activate\"
[[directive]]
tick = 0
robot = 1
kind = \"progress\"
fraction = 1.0
"
    ));
    let e = s.run().unwrap();
    assert!(e.config(1).unwrap().co_located());
    assert!(pseudo_gathered_ticks(&e).contains(&1));
    assert!(!is_settled(&e, 0, 1));
    assert_ne!(e.stop, StopReason::Gathered(1));
    let report = check_trace(&e.header.algorithm, &e);
    assert_eq!(report.get("PSEUDO-DETECT"), Some(&CheckOutcome::Pass));
}

#[test]
fn scripted_contract_violations_abort() {
    let dynamic = ASYNC_SS.replace("\"static\"", "\"dynamic\"\nbound = 0.25");
    let wide = script(&format!(
        "{dynamic}
[[directive]]
tick = 0
robot = 0
kind = \"activate\"
deviation = 0.5
"
    ));
    match wide.run() {
        Err(gathering::adversary::ScriptError::Engine(EngineError::DeviationOutOfBound { robot: 0, .. })) => {}
        other => panic!("expected a deviation abort, got {other:?}"),
    }
    let fixed = ScenarioScript::parse(&format!(
        "{ASYNC_SS}
[[directive]]
tick = 0
robot = 0
kind = \"activate\"
deviation = 0.5
"
    ));
    assert!(fixed.is_err());
    let bad = ScenarioScript::parse(&format!(
        "{ASYNC_SS}
[[directive]]
tick = 0
robot = 2
kind = \"activate\"
"
    ));
    assert!(bad.is_err());
}

#[test]
fn empty_search_budget_gives_an_empty_report() {
    let alg = region_table(AlgorithmId::SD, PI / 8.0, false, false).unwrap();
    let compass = CompassSpec::new(CompassMode::Dynamic, PI / 8.0).unwrap();
    let r = worst_case_search(&SearchConfig::new(alg, compass, EngineConfig::semi_sync(), 0, 1));
    assert!(r.best_execution.is_none());
    assert_eq!(r.candidates, 0);
}

#[test]
fn search_reports_revalidate() {
    let alg = region_table(AlgorithmId::SD, PI / 8.0, false, false).unwrap();
    let compass = CompassSpec::new(CompassMode::Dynamic, PI / 8.0).unwrap();
    let cfg = SearchConfig::new(alg.clone(), compass, EngineConfig::semi_sync().with_horizon(500), 200, 3);
    let r = worst_case_search(&cfg);
    assert_eq!(r.candidates, 200);
    assert!(r.gathered);
    r.revalidate(&cfg).unwrap();
    let best = r.best_execution.as_ref().unwrap();
    replay_check(best).unwrap();
    let again = worst_case_search(&cfg);
    assert_eq!(again.choices, r.choices);
    assert_eq!(again.objective, r.objective);
}

#[test]
fn boundary_search_finds_a_non_gathering_run() {
    let alg = region_table(AlgorithmId::SD, FRAC_PI_4, false, true).unwrap();
    let compass = CompassSpec::new(CompassMode::Dynamic, FRAC_PI_4).unwrap();
    let cfg = SearchConfig::new(alg, compass, EngineConfig::semi_sync().with_horizon(300), 2000, 7);
    let r = worst_case_search(&cfg);
    assert!(r.cycle_found || !r.gathered, "{r:?}");
    r.revalidate(&cfg).unwrap();
}

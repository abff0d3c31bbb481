use crate::adversary::Adversary;
use crate::algorithms::{AlgorithmSpec, RobotState};
use crate::frames::{CompassMode, CompassSpec, LocalFrame};

use super::cycle::{advance_along, plan_cycle};
use super::{
    Configuration, CycleRuntime, EngineConfig, EngineError, EventKind, Execution, RunHeader, SchedulerMode, StopReason,
    TraceEvent, ARRIVAL_EPS,
};

/// Read-only run state handed to the adversary at every decision point.
#[derive(Clone, Copy, Debug)]
pub struct TickView<'a> {
    pub tick: u64,
    pub config: Configuration,
    pub cycles: [Option<CycleRuntime>; 2],
    pub terminated: [bool; 2],
    pub last_activation: [Option<u64>; 2],
    pub algorithm: &'a AlgorithmSpec,
    pub engine: &'a EngineConfig,
    pub compass: &'a CompassSpec,
}

impl TickView<'_> {
    /// Whether `robot` may be activated now.
    pub fn idle(&self, robot: usize) -> bool {
        !self.terminated[robot] && self.cycles[robot].is_none()
    }

    /// Latest tick by which `robot` must be activated to stay fair.
    pub fn deadline(&self, robot: usize) -> u64 {
        let k = self.engine.fairness_bound;
        match self.last_activation[robot] {
            Some(t) => t + k - 1,
            None => k - 1,
        }
    }
}

/// A run in progress. `step` advances one tick.
pub struct Simulation<'a> {
    algorithm: &'a AlgorithmSpec,
    engine: EngineConfig,
    compass: CompassSpec,
    static_deviations: [f64; 2],
    tick: u64,
    config: Configuration,
    cycles: [Option<CycleRuntime>; 2],
    terminated: [bool; 2],
    last_activation: [Option<u64>; 2],
    configs: Vec<Configuration>,
    events: Vec<TraceEvent>,
    gathered_at: Option<u64>,
    finished: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(
        algorithm: &'a AlgorithmSpec,
        engine: EngineConfig,
        compass: CompassSpec,
        initial: Configuration,
        adversary: &mut dyn Adversary,
    ) -> Result<Self, EngineError> {
        engine.validate()?;
        if !initial.is_finite() {
            return Err(EngineError::NonFiniteInitial);
        }
        let static_deviations = match compass.mode {
            CompassMode::Static => {
                let d = adversary.static_deviations(&compass);
                for (robot, &deviation) in d.iter().enumerate() {
                    if !compass.admits(deviation) {
                        return Err(EngineError::StaticDeviationOutOfBound { robot, deviation, bound: compass.bound });
                    }
                }
                d
            }
            CompassMode::Dynamic => [0.0, 0.0],
        };
        Ok(Simulation {
            algorithm,
            engine,
            compass,
            static_deviations,
            tick: 0,
            config: initial,
            cycles: [None, None],
            terminated: [false, false],
            last_activation: [None, None],
            configs: vec![initial],
            events: Vec::new(),
            gathered_at: None,
            finished: false,
        })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn config(&self) -> Configuration {
        self.config
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn gathered_at(&self) -> Option<u64> {
        self.gathered_at
    }

    fn view(&self) -> TickView<'_> {
        TickView {
            tick: self.tick,
            config: self.config,
            cycles: self.cycles,
            terminated: self.terminated,
            last_activation: self.last_activation,
            algorithm: self.algorithm,
            engine: &self.engine,
            compass: &self.compass,
        }
    }

    fn settled(&self, robot: usize) -> bool {
        match &self.cycles[robot] {
            Some(c) => self.config.robot(robot) == c.target_global,
            None => true,
        }
    }

    fn push(&mut self, robot: usize, kind: EventKind) {
        self.events.push(TraceEvent { tick: self.tick, robot, kind });
    }

    fn close(&mut self, robot: usize) {
        if let Some(c) = self.cycles[robot].take() {
            self.push(
                robot,
                EventKind::CycleEnd { displaced: c.displaced, deviation: c.frame.deviation, scale: c.frame.scale },
            );
        }
    }

    /// Processes the current tick. Returns `false` once the run is over.
    pub fn step(&mut self, adversary: &mut dyn Adversary) -> Result<bool, EngineError> {
        if self.finished {
            return Ok(false);
        }
        let t = self.tick;
        let asynchronous = self.engine.mode == SchedulerMode::Asynchronous;

        if asynchronous {
            self.close_phase(adversary)?;
        }

        if self.gathered_at.is_none() && self.config.co_located() && self.settled(0) && self.settled(1) {
            self.gathered_at = Some(t);
        }
        let stop_tick = self
            .gathered_at
            .map(|g| g.saturating_add(self.engine.post_gather_ticks).min(self.engine.horizon))
            .unwrap_or(self.engine.horizon);
        if t >= stop_tick {
            self.finished = true;
            return Ok(false);
        }

        self.activation_phase(adversary)?;
        self.fairness_phase()?;
        self.move_phase(adversary)?;
        if !asynchronous {
            for r in 0..2 {
                self.close(r);
            }
        }

        self.configs.push(self.config);
        self.tick += 1;
        Ok(true)
    }

    fn close_phase(&mut self, adversary: &mut dyn Adversary) -> Result<(), EngineError> {
        let t = self.tick;
        for r in 0..2 {
            let Some(cycle) = self.cycles[r] else { continue };
            let view = self.view();
            if adversary.close(r, &cycle, &view) {
                if !cycle.floor_met(self.engine.delta) {
                    return Err(EngineError::DeltaFloor {
                        tick: t,
                        robot: r,
                        displaced: cycle.displaced,
                        required: cycle.floor(self.engine.delta),
                    });
                }
                self.close(r);
            } else if t - cycle.start_tick >= self.engine.max_cycle_ticks {
                return Err(EngineError::CycleTooLong {
                    tick: t,
                    robot: r,
                    start: cycle.start_tick,
                    limit: self.engine.max_cycle_ticks,
                });
            }
        }
        Ok(())
    }

    fn activation_phase(&mut self, adversary: &mut dyn Adversary) -> Result<(), EngineError> {
        let t = self.tick;
        let view = self.view();
        let chosen = adversary.activations(&view);
        let any_idle = (0..2).any(|r| view.idle(r));
        if self.engine.mode == SchedulerMode::SemiSynchronous && any_idle && !chosen[0] && !chosen[1] {
            return Err(EngineError::EmptyActivation { tick: t });
        }
        let snapshot = self.config;
        for r in 0..2 {
            if !chosen[r] {
                continue;
            }
            if self.terminated[r] {
                return Err(EngineError::ActivatedTerminated { tick: t, robot: r });
            }
            if let Some(c) = &self.cycles[r] {
                return Err(EngineError::ActivatedBusy { tick: t, robot: r, start: c.start_tick });
            }
            let view = self.view();
            let deviation = match self.compass.mode {
                CompassMode::Static => self.static_deviations[r],
                CompassMode::Dynamic => adversary.deviation(r, &view),
            };
            if !self.compass.admits(deviation) {
                return Err(EngineError::DeviationOutOfBound {
                    tick: t,
                    robot: r,
                    deviation,
                    bound: self.compass.bound,
                });
            }
            let scale = adversary.scale(r, &view);
            let frame = LocalFrame::new(snapshot.robot(r), deviation, scale).map_err(|_| EngineError::BadScale {
                tick: t,
                robot: r,
                scale,
            })?;
            let plan = plan_cycle(self.algorithm, &frame, snapshot.robot(1 - r));
            self.last_activation[r] = Some(t);
            self.push(r, EventKind::Activate { deviation, scale });
            self.push(
                r,
                EventKind::Look { observed: plan.observed, state: plan.decision.state, target: plan.target_global },
            );
            if plan.decision.state == RobotState::Terminated {
                self.terminated[r] = true;
                self.push(r, EventKind::Terminate);
                continue;
            }
            self.cycles[r] = Some(CycleRuntime {
                robot: r,
                start_tick: t,
                frame,
                observed: plan.observed,
                decision: plan.decision,
                source: snapshot.robot(r),
                target_global: plan.target_global,
                displaced: 0.0,
                open: true,
            });
        }
        Ok(())
    }

    fn fairness_phase(&self) -> Result<(), EngineError> {
        let t = self.tick;
        let k = self.engine.fairness_bound;
        for r in 0..2 {
            if self.terminated[r] || self.cycles[r].is_some() {
                continue;
            }
            let overdue = match self.last_activation[r] {
                Some(last) => t - last >= k,
                None => t + 1 >= k,
            };
            if overdue {
                return Err(EngineError::Fairness { tick: t, robot: r, last: self.last_activation[r], bound: k });
            }
        }
        Ok(())
    }

    fn move_phase(&mut self, adversary: &mut dyn Adversary) -> Result<(), EngineError> {
        let t = self.tick;
        let semi = self.engine.mode == SchedulerMode::SemiSynchronous;
        for r in 0..2 {
            let Some(cycle) = self.cycles[r] else { continue };
            if cycle.arrived() {
                continue;
            }
            let view = self.view();
            let requested = adversary.progress(r, &cycle, &view);
            if requested.is_nan() || requested < 0.0 {
                return Err(EngineError::BadProgress { tick: t, robot: r, value: requested });
            }
            let (covered, pos) = advance_along(cycle.source, cycle.target_global, cycle.displaced, requested);
            if !pos.is_finite() {
                return Err(EngineError::NonFinitePosition { tick: t, robot: r });
            }
            let total = cycle.total();
            if semi && covered < total {
                let required = self.engine.delta.min(total);
                if covered < required - ARRIVAL_EPS {
                    return Err(EngineError::DeltaFloor { tick: t, robot: r, displaced: covered, required });
                }
            }
            if covered != cycle.displaced {
                self.push(r, EventKind::Progress { displacement: requested, position: pos });
            }
            self.config.set(r, pos);
            if let Some(c) = self.cycles[r].as_mut() {
                c.displaced = covered;
            }
        }
        Ok(())
    }

    pub fn into_execution(self, header: RunHeader) -> Execution {
        let stop = match self.gathered_at {
            Some(g) => StopReason::Gathered(g),
            None => StopReason::Horizon,
        };
        Execution { header, configs: self.configs, events: self.events, stop }
    }

    pub fn static_deviations(&self) -> [f64; 2] {
        self.static_deviations
    }
}

/// Runs an execution to gathering certification (plus any post-gathering
/// ticks) or the horizon. Deterministic in its arguments: the adversary is
/// the only source of choices and `seed` is recorded for provenance.
pub fn run(
    algorithm: &AlgorithmSpec,
    engine: EngineConfig,
    compass: CompassSpec,
    adversary: &mut dyn Adversary,
    initial: Configuration,
    seed: u64,
) -> Result<Execution, EngineError> {
    let mut sim = Simulation::new(algorithm, engine, compass, initial, adversary)?;
    while sim.step(adversary)? {}
    let header = RunHeader {
        algorithm: algorithm.clone(),
        engine,
        compass,
        static_deviations: sim.static_deviations(),
        initial,
        seed,
        adversary: adversary.describe(),
    };
    Ok(sim.into_execution(header))
}

//! Randomized search for long or non-gathering executions.
//!
//! A candidate adversary is a sequence of small integer choices (a genome)
//! consumed in order at every decision point; once the genome runs out the
//! remaining choices come from a seeded generator. The search runs random
//! restarts, then repeatedly keeps the prefix of the best candidate up to a
//! little before it gathered and redraws the rest, accepting candidates that
//! gather later. Every draw is recorded, so the best candidate's full choice
//! sequence reproduces it exactly.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algorithms::AlgorithmSpec;
use crate::engine::{
    run, Configuration, CycleRuntime, EngineConfig, EngineError, EventKind, Execution, SchedulerMode, StopReason,
    TickView,
};
use crate::frames::CompassSpec;
use crate::geometry::Point;

use super::Adversary;

/// Deviations are drawn from `bound * DEVIATION_STEPS[i]`.
const DEVIATION_STEPS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
/// Move lengths as fractions of the full distance; 0 stands for the δ floor.
const PROGRESS_STEPS: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

pub struct ChoiceAdversary {
    genes: Vec<u32>,
    tail: ChaCha8Rng,
    tail_seed: u64,
    drawn: Vec<u32>,
    /// `tick_marks[t]` is the number of draws made before tick `t`'s
    /// activation choice.
    tick_marks: Vec<usize>,
    plans: [Option<(u64, Vec<f64>)>; 2],
}

impl ChoiceAdversary {
    pub fn new(genes: Vec<u32>, tail_seed: u64) -> Self {
        ChoiceAdversary {
            genes,
            tail: ChaCha8Rng::seed_from_u64(tail_seed),
            tail_seed,
            drawn: Vec::new(),
            tick_marks: Vec::new(),
            plans: [None, None],
        }
    }

    /// Every choice made so far, genome and generated tail alike.
    pub fn drawn(&self) -> &[u32] {
        &self.drawn
    }

    fn draw(&mut self, n: u32) -> u32 {
        if n <= 1 {
            return 0;
        }
        let i = self.drawn.len();
        let g = match self.genes.get(i) {
            Some(&g) => g % n,
            None => self.tail.gen_range(0..n),
        };
        self.drawn.push(g);
        g
    }

    fn pick_deviation(&mut self, bound: f64) -> f64 {
        if bound == 0.0 {
            return 0.0;
        }
        bound * DEVIATION_STEPS[self.draw(DEVIATION_STEPS.len() as u32) as usize]
    }

    fn pick_distance(&mut self, cycle: &CycleRuntime, delta: f64) -> f64 {
        let f = PROGRESS_STEPS[self.draw(PROGRESS_STEPS.len() as u32) as usize];
        (f * cycle.total()).max(cycle.floor(delta))
    }

    fn plan(&mut self, cycle: &CycleRuntime, view: &TickView<'_>) -> (u64, Vec<f64>) {
        let r = cycle.robot;
        if let Some((start, steps)) = &self.plans[r] {
            if *start == cycle.start_tick {
                return (*start, steps.clone());
            }
        }
        let longest = view.engine.max_cycle_ticks.min(view.engine.fairness_bound.saturating_sub(1)).max(1);
        let len = 1 + self.draw(longest as u32) as usize;
        let distance = self.pick_distance(cycle, view.engine.delta);
        let mut weights: Vec<f64> = (0..len).map(|_| self.draw(3) as f64).collect();
        if weights.iter().all(|&w| w == 0.0) {
            weights[len - 1] = 1.0;
        }
        let sum: f64 = weights.iter().sum();
        let steps: Vec<f64> = weights.iter().map(|w| distance * w / sum).collect();
        self.plans[r] = Some((cycle.start_tick, steps.clone()));
        (cycle.start_tick, steps)
    }
}

impl Adversary for ChoiceAdversary {
    fn static_deviations(&mut self, compass: &CompassSpec) -> [f64; 2] {
        [self.pick_deviation(compass.bound), self.pick_deviation(compass.bound)]
    }

    fn activations(&mut self, view: &TickView<'_>) -> [bool; 2] {
        self.tick_marks.push(self.drawn.len());
        let mut out = [false; 2];
        for r in 0..2 {
            if !view.idle(r) {
                continue;
            }
            out[r] = view.tick >= view.deadline(r) || self.draw(2) == 1;
        }
        if view.engine.mode == SchedulerMode::SemiSynchronous && !out[0] && !out[1] {
            match (view.idle(0), view.idle(1)) {
                (true, true) => out[self.draw(2) as usize] = true,
                (true, false) => out[0] = true,
                (false, true) => out[1] = true,
                (false, false) => {}
            }
        }
        out
    }

    fn deviation(&mut self, _robot: usize, view: &TickView<'_>) -> f64 {
        self.pick_deviation(view.compass.bound)
    }

    fn progress(&mut self, _robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> f64 {
        match view.engine.mode {
            SchedulerMode::SemiSynchronous => self.pick_distance(cycle, view.engine.delta),
            SchedulerMode::Asynchronous => {
                let (start, steps) = self.plan(cycle, view);
                let i = (view.tick - start) as usize;
                if i + 1 >= steps.len() {
                    (steps.iter().sum::<f64>() - cycle.displaced).max(0.0)
                } else {
                    steps[i]
                }
            }
        }
    }

    fn close(&mut self, _robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> bool {
        let (start, steps) = self.plan(cycle, view);
        view.tick >= start + steps.len() as u64
    }

    fn describe(&self) -> String {
        format!("search genome={} tail={}", self.genes.len(), self.tail_seed)
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub algorithm: AlgorithmSpec,
    pub compass: CompassSpec,
    pub engine: EngineConfig,
    /// Number of candidate executions to run.
    pub budget: usize,
    pub seed: u64,
    /// Fixed start, or `None` to sample one per restart.
    pub initial: Option<Configuration>,
    pub max_initial_distance: f64,
    /// Share of the budget spent on independent random restarts.
    pub restart_fraction: f64,
}

impl SearchConfig {
    pub fn new(algorithm: AlgorithmSpec, compass: CompassSpec, engine: EngineConfig, budget: usize, seed: u64) -> Self {
        SearchConfig {
            algorithm,
            compass,
            engine,
            budget,
            seed,
            initial: None,
            max_initial_distance: 10.0,
            restart_fraction: 0.05,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("re-run of the reported choices diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug, Default)]
pub struct SearchReport {
    pub best_execution: Option<Execution>,
    /// Ticks until gathering, or the horizon for a non-gathering candidate.
    pub objective: f64,
    pub gathered: bool,
    /// Ticks `(t1, t2)` with the same relative configuration and every robot
    /// activated in between: repeating the choices of `[t1, t2)` forever
    /// yields an execution that never gathers.
    pub recurrence: Option<(u64, u64)>,
    pub cycle_found: bool,
    pub choices: Vec<u32>,
    pub tail_seed: u64,
    pub initial: Option<Configuration>,
    pub candidates: usize,
    /// Candidates that reached the horizon without gathering.
    pub non_gathering: usize,
    /// Candidates the engine rejected (for example a position overflowing).
    pub aborted: usize,
}

struct Candidate {
    execution: Execution,
    objective: u64,
    drawn: Vec<u32>,
    marks: Vec<usize>,
    tail_seed: u64,
    initial: Configuration,
}

fn objective_of(e: &Execution) -> u64 {
    match e.stop {
        StopReason::Gathered(t) => t,
        StopReason::Horizon => e.header.engine.horizon,
    }
}

/// A start at distance in `[δ, max_distance]` with the lower robot as `r0`.
pub fn sample_initial(rng: &mut impl Rng, max_distance: f64, min_distance: f64) -> Configuration {
    let r0 = Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let d = rng.gen_range(min_distance.min(max_distance)..=max_distance);
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    let r1 = r0 + Point::from_polar(d, a);
    if r1.y < r0.y || (r1.y == r0.y && r1.x > r0.x) {
        Configuration::new(r1, r0)
    } else {
        Configuration::new(r0, r1)
    }
}

fn evaluate(
    cfg: &SearchConfig,
    genes: Vec<u32>,
    tail_seed: u64,
    initial: Configuration,
    seed: u64,
) -> Result<Candidate, EngineError> {
    let mut adv = ChoiceAdversary::new(genes, tail_seed);
    let execution = run(&cfg.algorithm, cfg.engine, cfg.compass, &mut adv, initial, seed)?;
    Ok(Candidate {
        objective: objective_of(&execution),
        execution,
        drawn: adv.drawn,
        marks: adv.tick_marks,
        tail_seed,
        initial,
    })
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.objective.cmp(&b.objective) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.drawn < b.drawn,
    }
}

/// Ticks at which neither robot has a cycle in progress.
fn quiet_ticks(e: &Execution) -> Vec<bool> {
    let n = e.configs.len();
    let mut quiet = vec![true; n];
    let mut open = [false; 2];
    let mut i = 0;
    for (t, q) in quiet.iter_mut().enumerate() {
        let t = t as u64;
        // Closes recorded at t come before activations at t.
        while i < e.events.len() && e.events[i].tick == t {
            let ev = &e.events[i];
            match ev.kind {
                EventKind::CycleEnd { .. } if open[ev.robot] => open[ev.robot] = false,
                EventKind::Activate { .. } => break,
                _ => {}
            }
            i += 1;
        }
        *q = !open[0] && !open[1];
        while i < e.events.len() && e.events[i].tick == t {
            let ev = &e.events[i];
            match ev.kind {
                EventKind::Look { .. } => open[ev.robot] = true,
                EventKind::CycleEnd { .. } | EventKind::Terminate => open[ev.robot] = false,
                _ => {}
            }
            i += 1;
        }
    }
    quiet
}

/// Finds `t1 < t2` where the configuration, translated so that `r0` sits at
/// the origin, repeats within `tol`, no cycle is in progress at either end,
/// and both robots are activated in `[t1, t2)`. Only the last `window`
/// ticks are scanned.
pub fn find_recurrence(e: &Execution, tol: f64, window: usize) -> Option<(u64, u64)> {
    let n = e.configs.len();
    let from = n.saturating_sub(window);
    let quiet = quiet_ticks(e);
    let mut activated_at: Vec<[bool; 2]> = vec![[false; 2]; n];
    for ev in &e.events {
        if matches!(ev.kind, EventKind::Activate { .. }) && (ev.tick as usize) < n {
            activated_at[ev.tick as usize][ev.robot] = true;
        }
    }
    let rel: Vec<Point> = e.configs.iter().map(|c| c.r1 - c.r0).collect();
    for t1 in from..n {
        if !quiet[t1] || e.configs[t1].co_located() {
            continue;
        }
        let mut seen = [false; 2];
        for t2 in t1 + 1..n {
            seen[0] |= activated_at[t2 - 1][0];
            seen[1] |= activated_at[t2 - 1][1];
            if seen[0] && seen[1] && quiet[t2] {
                let d = rel[t2] - rel[t1];
                if d.x.abs() <= tol && d.y.abs() <= tol {
                    return Some((t1 as u64, t2 as u64));
                }
            }
        }
    }
    None
}

/// Searches for executions that gather as late as possible.
pub fn worst_case_search(cfg: &SearchConfig) -> SearchReport {
    let mut report = SearchReport::default();
    if cfg.budget == 0 {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let restarts = ((cfg.budget as f64 * cfg.restart_fraction).ceil() as usize).clamp(1, cfg.budget);
    let horizon = cfg.engine.horizon;
    let mut best: Option<Candidate> = None;

    for i in 0..cfg.budget {
        let tail_seed: u64 = rng.gen();
        let candidate = match (&best, i < restarts) {
            (Some(b), false) => {
                // Keep the best prefix up to a little before it gathered.
                let back = rng.gen_range(1..=b.objective.clamp(1, 24));
                let cut_tick = b.objective.saturating_sub(back) as usize;
                let cut = b.marks.get(cut_tick).copied().unwrap_or(b.drawn.len());
                let mut genes = b.drawn[..cut].to_vec();
                if !genes.is_empty() && rng.gen_bool(0.2) {
                    let j = rng.gen_range(0..genes.len());
                    genes[j] = rng.gen();
                }
                evaluate(cfg, genes, tail_seed, b.initial, cfg.seed)
            }
            _ => {
                let initial = cfg
                    .initial
                    .unwrap_or_else(|| sample_initial(&mut rng, cfg.max_initial_distance, 10.0 * cfg.engine.delta));
                evaluate(cfg, Vec::new(), tail_seed, initial, cfg.seed)
            }
        };
        report.candidates += 1;
        let candidate = match candidate {
            Ok(c) => c,
            Err(_) => {
                report.aborted += 1;
                continue;
            }
        };
        let reached_horizon = candidate.execution.stop == StopReason::Horizon;
        if reached_horizon {
            report.non_gathering += 1;
        }
        if best.as_ref().is_none_or(|b| better(&candidate, b)) {
            best = Some(candidate);
        }
        if reached_horizon {
            break;
        }
    }

    if let Some(b) = best {
        report.objective = b.objective.min(horizon) as f64;
        report.gathered = matches!(b.execution.stop, StopReason::Gathered(_));
        report.recurrence = if report.gathered { None } else { find_recurrence(&b.execution, 1e-9, 5000) };
        report.cycle_found = report.recurrence.is_some();
        report.choices = b.drawn;
        report.tail_seed = b.tail_seed;
        report.initial = Some(b.initial);
        report.best_execution = Some(b.execution);
    }
    report
}

impl SearchReport {
    /// Re-runs the reported choice sequence and checks that it reproduces
    /// the reported execution bit for bit.
    pub fn revalidate(&self, cfg: &SearchConfig) -> Result<(), SearchError> {
        let (Some(best), Some(initial)) = (&self.best_execution, self.initial) else {
            return Ok(());
        };
        let again = evaluate(cfg, self.choices.clone(), self.tail_seed, initial, cfg.seed)?;
        if again.objective as f64 != self.objective && again.objective.min(cfg.engine.horizon) as f64 != self.objective
        {
            return Err(SearchError::Diverged(format!("objective {} vs reported {}", again.objective, self.objective)));
        }
        if again.execution.configs.len() != best.configs.len()
            || again.execution.configs.iter().zip(&best.configs).any(|(a, b)| !a.bits_eq(b))
        {
            return Err(SearchError::Diverged("configurations differ".into()));
        }
        Ok(())
    }
}

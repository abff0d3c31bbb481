use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{CycleRuntime, SchedulerMode, TickView};
use crate::frames::CompassSpec;

use super::Adversary;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomParams {
    /// Chance that an idle robot is activated on a tick before its deadline.
    pub activation_probability: f64,
    pub scale_range: (f64, f64),
    /// Fractions of the cycle's full distance the adversary picks from; the
    /// δ floor is always one more option.
    pub progress_fractions: Vec<f64>,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { activation_probability: 0.5, scale_range: (0.5, 2.0), progress_fractions: vec![0.25, 0.5, 1.0] }
    }
}

/// How an asynchronous cycle will unfold: its length in ticks and the
/// distance to cover on each of them.
#[derive(Clone, Debug)]
struct MovePlan {
    start: u64,
    steps: Vec<f64>,
}

/// Uniformly random choices subject to bounded fairness.
pub struct RandomFair {
    seed: u64,
    rng: ChaCha8Rng,
    params: RandomParams,
    plans: [Option<MovePlan>; 2],
}

pub fn random_fair(seed: u64) -> RandomFair {
    RandomFair::new(seed, RandomParams::default())
}

impl RandomFair {
    pub fn new(seed: u64, params: RandomParams) -> Self {
        RandomFair { seed, rng: ChaCha8Rng::seed_from_u64(seed), params, plans: [None, None] }
    }

    fn symmetric(&mut self, bound: f64) -> f64 {
        if bound == 0.0 {
            0.0
        } else {
            self.rng.gen_range(-bound..=bound)
        }
    }

    /// Total distance the cycle will cover, at least the δ floor.
    fn pick_distance(&mut self, cycle: &CycleRuntime, delta: f64) -> f64 {
        let total = cycle.total();
        let floor = cycle.floor(delta);
        let n = self.params.progress_fractions.len();
        let i = self.rng.gen_range(0..=n);
        if i == n {
            floor
        } else {
            (self.params.progress_fractions[i] * total).max(floor)
        }
    }

    fn plan(&mut self, cycle: &CycleRuntime, view: &TickView<'_>) -> &MovePlan {
        let r = cycle.robot;
        let fresh = !matches!(&self.plans[r], Some(p) if p.start == cycle.start_tick);
        if fresh {
            let k = view.engine.fairness_bound;
            // Keep cycles short enough that the next activation still falls
            // inside the fairness window.
            let longest = view.engine.max_cycle_ticks.min(k.saturating_sub(1)).max(1);
            let len = self.rng.gen_range(1..=longest) as usize;
            let distance = self.pick_distance(cycle, view.engine.delta);
            let mut weights: Vec<f64> =
                (0..len).map(|_| if self.rng.gen_bool(0.25) { 0.0 } else { self.rng.gen::<f64>() }).collect();
            let sum: f64 = weights.iter().sum();
            if sum == 0.0 {
                weights[len - 1] = 1.0;
            }
            let sum: f64 = weights.iter().sum();
            let steps = weights.iter().map(|w| distance * w / sum).collect();
            self.plans[r] = Some(MovePlan { start: cycle.start_tick, steps });
        }
        self.plans[r].as_ref().expect("plan was just stored")
    }
}

impl Adversary for RandomFair {
    fn static_deviations(&mut self, compass: &CompassSpec) -> [f64; 2] {
        [self.symmetric(compass.bound), self.symmetric(compass.bound)]
    }

    fn activations(&mut self, view: &TickView<'_>) -> [bool; 2] {
        let mut out = [false; 2];
        for (r, slot) in out.iter_mut().enumerate() {
            if !view.idle(r) {
                continue;
            }
            let coin = self.rng.gen_bool(self.params.activation_probability);
            *slot = coin || view.tick >= view.deadline(r);
        }
        if view.engine.mode == SchedulerMode::SemiSynchronous && !out[0] && !out[1] {
            let idle: Vec<usize> = (0..2).filter(|&r| view.idle(r)).collect();
            if !idle.is_empty() {
                out[idle[self.rng.gen_range(0..idle.len())]] = true;
            }
        }
        out
    }

    fn deviation(&mut self, _robot: usize, view: &TickView<'_>) -> f64 {
        self.symmetric(view.compass.bound)
    }

    fn scale(&mut self, _robot: usize, _view: &TickView<'_>) -> f64 {
        let (lo, hi) = self.params.scale_range;
        if lo >= hi {
            lo
        } else {
            self.rng.gen_range(lo..=hi)
        }
    }

    fn progress(&mut self, _robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> f64 {
        match view.engine.mode {
            SchedulerMode::SemiSynchronous => self.pick_distance(cycle, view.engine.delta),
            SchedulerMode::Asynchronous => {
                let plan = self.plan(cycle, view);
                let i = (view.tick - plan.start) as usize;
                let planned: f64 = plan.steps.iter().sum();
                if i + 1 >= plan.steps.len() {
                    // Last planned tick: cover exactly what is left of the plan.
                    (planned - cycle.displaced).max(0.0)
                } else {
                    plan.steps[i]
                }
            }
        }
    }

    fn close(&mut self, _robot: usize, cycle: &CycleRuntime, view: &TickView<'_>) -> bool {
        let plan = self.plan(cycle, view);
        view.tick >= plan.start + plan.steps.len() as u64
    }

    fn describe(&self) -> String {
        format!("random-fair seed={}", self.seed)
    }
}

//! Seeded Monte-Carlo rollouts in the original game with exact cost
//! accumulation, and an exhaustive tree walk for small games.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::approximation::{RoundingSpec, SurrogateTracker};
use crate::error::{Error, Result};
use crate::game::{CostModel, CostSource, Game, History};
use crate::rational::Rational;
use crate::reduction::{AugmentedPolicy, LiftedPolicy, ReducedGame};
use crate::scalar::Scalar;

/// Per-rollout decision maker. `act` sees the full history so far.
pub trait Episode {
    fn act(&mut self, history: &History, rng: &mut dyn RngCore) -> Result<usize>;
}

/// Produces a fresh [`Episode`] for every rollout.
pub trait Controller: Sync {
    fn begin(&self) -> Box<dyn Episode + '_>;
}

/// Draws from `(item, prob)` pairs with one uniform variate.
pub fn sample_index<T: Scalar>(dist: &[(usize, T)], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (item, p) in dist {
        acc += p.to_f64();
        if u < acc {
            return *item;
        }
    }
    dist.iter()
        .rev()
        .find(|(_, p)| p.to_f64() > 0.0)
        .or(dist.last())
        .map(|(a, _)| *a)
        .expect("nonempty distribution")
}

/// Plays the reduced-game policy at the observed `(s, c̄)`.
pub struct LiftedController<'a, T> {
    pub lifted: LiftedPolicy<'a, T>,
}

impl<'a, T: Scalar> LiftedController<'a, T> {
    pub fn new(reduced: &'a ReducedGame, policy: &'a AugmentedPolicy<T>) -> Self {
        LiftedController {
            lifted: LiftedPolicy::new(reduced, policy),
        }
    }
}

struct LiftedEpisode<'b, 'a, T> {
    controller: &'b LiftedController<'a, T>,
}

impl<T: Scalar> Episode for LiftedEpisode<'_, '_, T> {
    fn act(&mut self, history: &History, rng: &mut dyn RngCore) -> Result<usize> {
        let dist = self.controller.lifted.distribution(history)?;
        Ok(sample_index(dist, rng))
    }
}

impl<T: Scalar> Controller for LiftedController<'_, T> {
    fn begin(&self) -> Box<dyn Episode + '_> {
        Box::new(LiftedEpisode { controller: self })
    }
}

/// Plays a policy of the rounded game, locating augmented states by the
/// rounded running cost and checking the surrogate bound at every step.
pub struct SurrogateController<'a, T> {
    pub lifted: LiftedPolicy<'a, T>,
    pub spec: &'a RoundingSpec,
}

struct SurrogateEpisode<'b, 'a, T> {
    controller: &'b SurrogateController<'a, T>,
    tracker: SurrogateTracker<'a>,
}

impl<T: Scalar> Episode for SurrogateEpisode<'_, '_, T> {
    fn act(&mut self, history: &History, rng: &mut dyn RngCore) -> Result<usize> {
        while self.tracker.h < history.time() {
            let cost = &history.costs[self.tracker.h - 1];
            self.tracker.step(cost)?;
        }
        let h = history.time();
        let state = *history.states.last().expect("nonempty history");
        let index = self.controller.lifted.locate(h, state, &self.tracker.surrogate)?;
        Ok(sample_index(self.controller.lifted.policy.get(h, index), rng))
    }
}

impl<T: Scalar> Controller for SurrogateController<'_, T> {
    fn begin(&self) -> Box<dyn Episode + '_> {
        Box::new(SurrogateEpisode {
            controller: self,
            tracker: SurrogateTracker::new(self.spec),
        })
    }
}

impl<'a, T: Scalar> SurrogateController<'a, T> {
    pub fn new(reduced: &'a ReducedGame, policy: &'a AugmentedPolicy<T>, spec: &'a RoundingSpec) -> Self {
        SurrogateController {
            lifted: LiftedPolicy::new(reduced, policy),
            spec,
        }
    }

    /// Checks the surrogate bound on the final step of a finished rollout.
    fn finish(&self, history: &History) -> Result<()> {
        let mut tracker = SurrogateTracker::new(self.spec);
        for cost in &history.costs {
            tracker.step(cost)?;
        }
        Ok(())
    }
}

/// The same joint action at every step.
pub struct FixedAction(pub usize);

struct FixedEpisode(usize);

impl Episode for FixedEpisode {
    fn act(&mut self, _: &History, _: &mut dyn RngCore) -> Result<usize> {
        Ok(self.0)
    }
}

impl Controller for FixedAction {
    fn begin(&self) -> Box<dyn Episode + '_> {
        Box::new(FixedEpisode(self.0))
    }
}

const UNIFORM_RESOLUTION_BITS: u32 = 32;

fn sample_source(source: &CostSource, rng: &mut dyn RngCore) -> Rational {
    match source {
        CostSource::Finite(atoms) => {
            let dist: Vec<(usize, f64)> = atoms
                .iter()
                .enumerate()
                .map(|(k, (_, p))| (k, crate::rational::to_f64(p)))
                .collect();
            atoms[sample_index(&dist, rng)].0.clone()
        }
        CostSource::Uniform { low, high } => {
            // Half-open grid on [low, high): the right endpoint has measure zero.
            let k: u64 = rng.gen_range(0..(1u64 << UNIFORM_RESOLUTION_BITS));
            let frac = Rational::new(BigInt::from(k), BigInt::from(1u64 << UNIFORM_RESOLUTION_BITS));
            low + (high - low) * frac
        }
    }
}

fn sample_cost(model: &CostModel, rng: &mut dyn RngCore) -> Vec<Rational> {
    match model {
        CostModel::Product(sources) => sources.iter().map(|s| sample_source(s, rng)).collect(),
        CostModel::Joint(atoms) => {
            let dist: Vec<(usize, f64)> = atoms
                .iter()
                .enumerate()
                .map(|(k, a)| (k, crate::rational::to_f64(&a.prob)))
                .collect();
            atoms[sample_index(&dist, rng)].value.clone()
        }
    }
}

/// Outcome of one rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutRecord {
    /// `max_h (Σ_{t<=h} c_t - B)` per player.
    pub overshoot: Vec<Rational>,
    pub returns: Vec<f64>,
    /// The policy reached a state it has no entry for and the episode stopped.
    pub off_feasible: bool,
}

/// Aggregate over `n` rollouts.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutStats {
    pub n: usize,
    pub seed: u64,
    /// Largest per-rollout overshoot, per player.
    pub max_overshoot: Vec<Rational>,
    /// Overshoot above which a rollout counts as a violation, per player.
    pub allowance: Vec<Rational>,
    pub violations: usize,
    /// Rollouts that left the feasible set (also counted as violations).
    pub off_feasible: usize,
    pub return_mean: Vec<f64>,
    pub return_stderr: Vec<f64>,
}

impl RolloutStats {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// RNG for rollout `index`: one ChaCha8 stream per rollout under a shared seed.
pub fn rollout_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Plays one episode from the initial state.
pub fn rollout(game: &Game, controller: &dyn Controller, rng: &mut dyn RngCore) -> Result<(History, RolloutRecord)> {
    let mut episode = controller.begin();
    let mut history = History::start(game.initial_state);
    let mut spent = vec![Rational::zero(); game.players];
    let mut overshoot: Vec<Option<Rational>> = vec![None; game.players];
    let mut returns = vec![0.0; game.players];
    let mut off_feasible = false;
    for h in 1..=game.horizon {
        let state = *history.states.last().unwrap();
        let action = match episode.act(&history, rng) {
            Ok(a) => a,
            Err(Error::OffFeasibleSet { .. }) => {
                off_feasible = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let cell = game.cell(h, state, action);
        let cost = sample_cost(&cell.cost, rng);
        let next_dist: Vec<(usize, f64)> = cell
            .next
            .iter()
            .map(|(t, p)| (*t, crate::rational::to_f64(p)))
            .collect();
        let next = sample_index(&next_dist, rng);
        for i in 0..game.players {
            spent[i] += &cost[i];
            returns[i] += crate::rational::to_f64(&cell.reward[i]);
            let excess = &spent[i] - &game.budget[i];
            if overshoot[i].as_ref().is_none_or(|o| excess > *o) {
                overshoot[i] = Some(excess);
            }
        }
        history.push(action, cost, next);
    }
    let overshoot = overshoot
        .into_iter()
        .map(|o| o.unwrap_or_else(Rational::zero))
        .collect();
    Ok((
        history,
        RolloutRecord {
            overshoot,
            returns,
            off_feasible,
        },
    ))
}

fn aggregate(records: Vec<RolloutRecord>, seed: u64, allowance: Vec<Rational>) -> RolloutStats {
    let n = records.len();
    let players = allowance.len();
    let mut max_overshoot: Vec<Option<Rational>> = vec![None; players];
    let mut violations = 0;
    let mut off_feasible = 0;
    let mut sum = vec![0.0; players];
    let mut sum_sq = vec![0.0; players];
    for record in &records {
        let mut violated = record.off_feasible;
        off_feasible += usize::from(record.off_feasible);
        for i in 0..players {
            let o = &record.overshoot[i];
            if o > &allowance[i] {
                violated = true;
            }
            if max_overshoot[i].as_ref().is_none_or(|m| o > m) {
                max_overshoot[i] = Some(o.clone());
            }
            sum[i] += record.returns[i];
            sum_sq[i] += record.returns[i] * record.returns[i];
        }
        if violated {
            violations += 1;
        }
    }
    let nf = n.max(1) as f64;
    let return_mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let return_stderr = (0..players)
        .map(|i| {
            if n < 2 {
                return 0.0;
            }
            let var = (sum_sq[i] - nf * return_mean[i] * return_mean[i]) / (nf - 1.0);
            (var.max(0.0) / nf).sqrt()
        })
        .collect();
    RolloutStats {
        n,
        seed,
        max_overshoot: max_overshoot
            .into_iter()
            .map(|m| m.unwrap_or_else(Rational::zero))
            .collect(),
        allowance,
        violations,
        off_feasible,
        return_mean,
        return_stderr,
    }
}

/// `n` rollouts with the given per-player overshoot allowance. Rollouts run
/// in parallel and are merged in index order, so results depend only on
/// `(game, controller, n, seed)`.
pub fn simulate_rollouts(
    game: &Game,
    controller: &dyn Controller,
    n: usize,
    seed: u64,
    allowance: Vec<Rational>,
) -> Result<RolloutStats> {
    let records: Vec<Result<RolloutRecord>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = rollout_rng(seed, k as u64);
            rollout(game, controller, &mut rng).map(|(_, r)| r)
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(records, seed, allowance))
}

/// Rollouts of a rounded-game policy in the original game, with the
/// surrogate bound checked at every step including the last.
pub fn simulate_surrogate_rollouts<T: Scalar>(
    game: &Game,
    controller: &SurrogateController<'_, T>,
    n: usize,
    seed: u64,
    allowance: Vec<Rational>,
) -> Result<RolloutStats> {
    let records: Vec<Result<RolloutRecord>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = rollout_rng(seed, k as u64);
            let (history, record) = rollout(game, controller, &mut rng)?;
            controller.finish(&history)?;
            Ok(record)
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(records, seed, allowance))
}

/// Exact expected return and worst overshoot of a lifted policy, by walking
/// every history with positive probability.
#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustiveReport {
    pub values: Vec<Rational>,
    pub max_overshoot: Vec<Rational>,
    pub histories: usize,
}

pub fn exhaustive_evaluate(
    game: &Game,
    lifted: &LiftedPolicy<'_, Rational>,
    max_histories: usize,
) -> Result<ExhaustiveReport> {
    let support: Vec<Vec<(Vec<Rational>, Rational)>> = game
        .dynamics
        .iter()
        .map(|cell| {
            cell.cost
                .joint_support()
                .ok_or_else(|| Error::Unsupported("exhaustive walk needs finite costs".into()))
        })
        .collect::<Result<_>>()?;
    let n = game.players;
    let mut values = vec![Rational::zero(); n];
    let mut max_overshoot: Vec<Option<Rational>> = vec![None; n];
    let mut stack = vec![(History::start(game.initial_state), Rational::one())];
    let mut histories = 0;
    while let Some((history, mass)) = stack.pop() {
        histories += 1;
        if histories > max_histories {
            return Err(Error::CapExceeded(format!("more than {max_histories} histories")));
        }
        let h = history.time();
        let spent = history.cumulative_cost(n);
        if h > 1 {
            for i in 0..n {
                let excess = &spent[i] - &game.budget[i];
                if max_overshoot[i].as_ref().is_none_or(|o| excess > *o) {
                    max_overshoot[i] = Some(excess);
                }
            }
        }
        if h > game.horizon {
            continue;
        }
        let state = *history.states.last().unwrap();
        for (a, pa) in lifted.distribution(&history)? {
            let cell = game.cell(h, state, *a);
            let weight = &mass * pa;
            for (i, v) in values.iter_mut().enumerate() {
                *v += &weight * &cell.reward[i];
            }
            for (c, pc) in &support[game.cell_index(h, state, *a)] {
                for (t, pt) in &cell.next {
                    if pt.is_zero() {
                        continue;
                    }
                    let mut next = history.clone();
                    next.push(*a, c.clone(), *t);
                    stack.push((next, &weight * pc * pt));
                }
            }
        }
    }
    Ok(ExhaustiveReport {
        values,
        max_overshoot: max_overshoot
            .into_iter()
            .map(|m| m.unwrap_or_else(Rational::zero))
            .collect(),
        histories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::parse_game;
    use crate::rational::int;

    fn game(cost: i64, budget: i64) -> Game {
        parse_game(&format!(
            r#"{{"players": 1, "states": ["s", "t"], "initial_state": "s", "horizon": 3,
                "budget": [{budget}], "actions": [["x"]],
                "dynamics": [{}]}}"#,
            (1..=3)
                .flat_map(|h| {
                    ["s", "t"].map(|s| {
                        format!(
                            r#"{{"h": {h}, "s": "{s}", "a": ["x"], "next": {{"s": "1/2", "t": "1/2"}},
                                "reward": [1], "cost": [[{{"value": {cost}, "prob": "1/2"}}, {{"value": 0, "prob": "1/2"}}]]}}"#
                        )
                    })
                })
                .collect::<Vec<_>>()
                .join(",")
        ))
        .unwrap()
    }

    #[test]
    fn zero_cost_overshoot_is_minus_budget() {
        let stats = simulate_rollouts(&game(0, 2), &FixedAction(0), 50, 1, vec![int(0)]).unwrap();
        assert_eq!(stats.max_overshoot, vec![int(-2)]);
        assert_eq!(stats.violations, 0);
        assert_eq!(stats.return_mean, vec![3.0]);
    }

    #[test]
    fn violating_policy_is_caught() {
        let stats = simulate_rollouts(&game(1, 1), &FixedAction(0), 200, 7, vec![int(0)]).unwrap();
        assert!(stats.violations > 0);
        assert_eq!(stats.max_overshoot, vec![int(2)]);
    }

    #[test]
    fn rollouts_are_deterministic() {
        let g = game(1, 1);
        let a = simulate_rollouts(&g, &FixedAction(0), 300, 42, vec![int(0)]).unwrap();
        let b = simulate_rollouts(&g, &FixedAction(0), 300, 42, vec![int(0)]).unwrap();
        assert_eq!(a, b);
    }
}

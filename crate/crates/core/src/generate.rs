//! Seeded random instances for testing and benchmarking.

use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{CostModel, CostSource, Dynamics, Game, JointSpace};
use crate::rational::{int, ratio, Rational};
use crate::scalar::Scalar;
use crate::stage_lp::MatrixGame;

/// Size and cost ranges for [`random_game`]. Costs and budgets are drawn as
/// integer multiples of `cost_unit`.
#[derive(Clone, Debug)]
pub struct Shape {
    pub players: usize,
    pub states: (usize, usize),
    pub actions: (usize, usize),
    pub horizon: (usize, usize),
    pub cost_unit: Rational,
    pub cost_units: (i64, i64),
    /// Budget range in cost units, scaled by the horizon when `per_step`.
    pub budget_units: (i64, i64),
    pub budget_per_step: bool,
    /// Chance that a player's cost in a cell has two atoms instead of one.
    pub stochastic_costs: f64,
}

impl Shape {
    /// Two players, at most 3 states, 2 actions each and horizon 3, integer
    /// costs in `[0, 3]` and budgets in `[0, 6]`.
    pub fn small_pair() -> Self {
        Shape {
            players: 2,
            states: (1, 3),
            actions: (1, 2),
            horizon: (1, 3),
            cost_unit: Rational::one(),
            cost_units: (0, 3),
            budget_units: (0, 6),
            budget_per_step: false,
            stochastic_costs: 0.3,
        }
    }

    pub fn single_agent() -> Self {
        Shape {
            players: 1,
            states: (1, 4),
            actions: (1, 3),
            horizon: (1, 4),
            cost_unit: Rational::one(),
            cost_units: (0, 3),
            budget_units: (0, 8),
            budget_per_step: false,
            stochastic_costs: 0.3,
        }
    }

    /// Costs with denominator 7 in `[0, 2]`, budgets between 1 and 2 per step.
    pub fn sevenths() -> Self {
        Shape {
            players: 2,
            states: (1, 3),
            actions: (1, 2),
            horizon: (1, 3),
            cost_unit: ratio(1, 7),
            cost_units: (0, 14),
            budget_units: (7, 14),
            budget_per_step: true,
            stochastic_costs: 0.3,
        }
    }

    /// Costs on the grid `unit` between 0 and `4 unit`, budgets between
    /// `H * 2 unit` and `H * 4 unit`. The rounding floor is never positive.
    pub fn on_grid(unit: Rational) -> Self {
        Shape {
            players: 2,
            states: (1, 3),
            actions: (1, 2),
            horizon: (1, 3),
            cost_unit: unit,
            cost_units: (0, 4),
            budget_units: (2, 4),
            budget_per_step: true,
            stochastic_costs: 0.3,
        }
    }
}

fn probabilities(rng: &mut ChaCha8Rng, count: usize) -> Vec<Rational> {
    let weights: Vec<i64> = (0..count).map(|_| rng.gen_range(1..=3)).collect();
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| ratio(w, total)).collect()
}

fn random_cost(rng: &mut ChaCha8Rng, shape: &Shape) -> CostSource {
    let (lo, hi) = shape.cost_units;
    let draw = |rng: &mut ChaCha8Rng| int(rng.gen_range(lo..=hi)) * &shape.cost_unit;
    if rng.gen_bool(shape.stochastic_costs) {
        let a = draw(rng);
        let b = draw(rng);
        if a != b {
            return CostSource::Finite(vec![(a, ratio(1, 2)), (b, ratio(1, 2))]);
        }
        return CostSource::point(a);
    }
    CostSource::point(draw(rng))
}

/// A random game with dense dynamics, one to two successors per cell and
/// integer rewards in `[0, 4]`.
pub fn random_game(shape: &Shape, seed: u64) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = rng.gen_range(shape.states.0..=shape.states.1);
    let horizon = rng.gen_range(shape.horizon.0..=shape.horizon.1);
    let actions: Vec<Vec<String>> = (0..shape.players)
        .map(|_| {
            let count = rng.gen_range(shape.actions.0..=shape.actions.1);
            (0..count).map(|a| format!("a{a}")).collect()
        })
        .collect();
    let joint = JointSpace::new(actions.iter().map(Vec::len).collect());
    let mut dynamics = Vec::with_capacity(horizon * states * joint.len());
    for _ in 0..horizon * states * joint.len() {
        let successors = rng.gen_range(1..=states.min(2));
        let mut targets: Vec<usize> = sample(&mut rng, states, successors).into_vec();
        targets.sort_unstable();
        let next = targets.into_iter().zip(probabilities(&mut rng, successors)).collect();
        let reward = (0..shape.players).map(|_| int(rng.gen_range(0..=4))).collect();
        let cost = CostModel::Product((0..shape.players).map(|_| random_cost(&mut rng, shape)).collect());
        dynamics.push(Dynamics { next, reward, cost });
    }
    let factor = if shape.budget_per_step { horizon as i64 } else { 1 };
    let budget = (0..shape.players)
        .map(|_| {
            let (lo, hi) = shape.budget_units;
            int(rng.gen_range(lo * factor..=hi * factor)) * &shape.cost_unit
        })
        .collect();
    finish(Game {
        players: shape.players,
        states: (0..states).map(|s| format!("s{s}")).collect(),
        initial_state: 0,
        horizon,
        budget,
        actions,
        dynamics,
        cost_scale: One::one(),
    })
}

fn finish(mut game: Game) -> Game {
    game.cost_scale = game.compute_cost_scale();
    game
}

/// Scaling family member with two players, two actions each, horizon 3 and
/// integer costs in `[0, 3]` (cost bit length 2). Each cell moves to two
/// successors among `states`.
pub fn scaling_game(states: usize, seed: u64) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = 3;
    let players = 2;
    let joint = JointSpace::new(vec![2, 2]);
    let mut dynamics: Vec<Dynamics> = Vec::with_capacity(horizon * states * joint.len());
    for _ in 0..horizon * states * joint.len() {
        let successors = states.min(2);
        let mut targets: Vec<usize> = sample(&mut rng, states, successors).into_vec();
        targets.sort_unstable();
        let next = targets.into_iter().zip(probabilities(&mut rng, successors)).collect();
        let reward = (0..players).map(|_| int(rng.gen_range(0..=4))).collect();
        let cost = CostModel::Product(
            (0..players)
                .map(|_| {
                    let c = rng.gen_range(0..=3);
                    if rng.gen_bool(0.3) {
                        CostSource::Finite(vec![(int(c), ratio(1, 2)), (int(3 - c), ratio(1, 2))])
                    } else {
                        CostSource::point(int(c))
                    }
                })
                .collect(),
        );
        dynamics.push(Dynamics { next, reward, cost });
    }
    // Joint action 0 is free in every cell.
    for cell in dynamics.iter_mut().step_by(joint.len()) {
        cell.cost = CostModel::Product(vec![CostSource::point(Rational::zero()); players]);
    }
    finish(Game {
        players,
        states: (0..states).map(|s| format!("s{s}")).collect(),
        initial_state: 0,
        horizon,
        budget: vec![int(5); players],
        actions: vec![vec!["a0".into(), "a1".into()]; players],
        dynamics,
        cost_scale: One::one(),
    })
}

/// A random matrix game with up to 3 players and 3 actions each, rational
/// utilities in `[-4, 4]` with denominators up to 3, and a random nonempty
/// allowed set.
pub fn random_matrix_game<T: Scalar>(seed: u64) -> MatrixGame<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let players = rng.gen_range(1..=3);
    let joint = JointSpace::new((0..players).map(|_| rng.gen_range(1..=3)).collect());
    let density = rng.gen_range(0.2..=1.0);
    let mut allowed: Vec<usize> = (0..joint.len()).filter(|_| rng.gen_bool(density)).collect();
    if allowed.is_empty() {
        allowed.push(rng.gen_range(0..joint.len()));
    }
    let utilities = (0..joint.len())
        .map(|a| {
            if allowed.contains(&a) {
                (0..players)
                    .map(|_| {
                        let value = ratio(rng.gen_range(-12..=12), rng.gen_range(1..=3));
                        Some(T::from_rational(&value))
                    })
                    .collect()
            } else {
                vec![None; players]
            }
        })
        .collect();
    MatrixGame::new(joint, allowed, utilities)
}

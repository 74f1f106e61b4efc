//! Backward induction over the reduced game, and the full pipeline from a
//! game description to a policy.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::config::Limits;
use crate::error::{Error, Result};
use crate::feasibility::analyze;
use crate::game::Game;
use crate::reduction::{build_reduced_game, AugmentedPolicy, ReducedGame};
use crate::scalar::Scalar;
use crate::stage_lp::{solve_stage, EquilibriumKind, MatrixGame};

/// `values[h - 1][s̄][i]` for `h = 1..=H + 1`; the last layer is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable<T> {
    pub values: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> ValueTable<T> {
    pub fn at(&self, h: usize, index: usize) -> &[T] {
        &self.values[h - 1][index]
    }

    pub fn root(&self) -> &[T] {
        self.at(1, 0)
    }

    /// Largest entrywise gap to `other`, in `f64`.
    pub fn max_difference(&self, other: &ValueTable<T>) -> f64 {
        self.values
            .iter()
            .flatten()
            .flatten()
            .zip(other.values.iter().flatten().flatten())
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> ValueTable<f64> {
        ValueTable {
            values: self
                .values
                .iter()
                .map(|l| l.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect())
                .collect(),
        }
    }
}

/// `Q̄_h(s̄, a)` for every joint action; `None` marks actions outside `Ā_h(s̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StageQ<T> {
    pub q: Vec<Option<Vec<T>>>,
}

/// `r̄ + Σ P̄ V̄_{h+1}` on the allowed actions of `(h, index)`.
pub fn stage_q<T: Scalar>(reduced: &ReducedGame, h: usize, index: usize, next: &[Vec<T>]) -> StageQ<T> {
    let node = reduced.node(h, index);
    let mut q = vec![None; reduced.joint.len()];
    for (k, &a) in node.allowed.iter().enumerate() {
        let mut values: Vec<T> = node.rewards[k].iter().map(T::from_rational).collect();
        for (j, p) in &node.outcomes[k] {
            let p = T::from_rational(p);
            for (v, w) in values.iter_mut().zip(&next[*j]) {
                *v = v.clone() + p.clone() * w.clone();
            }
        }
        q[a] = Some(values);
    }
    StageQ { q }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timings {
    pub feasibility: Duration,
    pub solve: Duration,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveMetadata {
    /// Distinct cumulative-cost vectors in the feasibility DAG.
    pub distinct_costs: usize,
    pub or_nodes: usize,
    pub and_nodes: usize,
    pub precision_bits: u64,
    /// `(H · 2^(d+1))^n`.
    pub distinct_cost_bound: f64,
    pub reduced_states: usize,
    /// Augmented states whose allowed set is not a product set.
    pub non_product_states: usize,
    pub lattice_scale: String,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct AceSolution<T> {
    pub kind: EquilibriumKind,
    pub reduced: ReducedGame,
    pub policy: AugmentedPolicy<T>,
    pub values: ValueTable<T>,
    pub metadata: SolveMetadata,
}

fn zero_layer<T: Scalar>(len: usize, players: usize) -> Vec<Vec<T>> {
    vec![vec![T::zero(); players]; len]
}

/// Backward sweep: at each augmented state, a constrained equilibrium of the
/// stage game over `Q̄`, and its value.
pub fn solve_reduced_game<T: Scalar>(reduced: ReducedGame, kind: EquilibriumKind) -> Result<AceSolution<T>> {
    let start = Instant::now();
    let horizon = reduced.horizon;
    let players = reduced.players;
    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = zero_layer::<T>(reduced.layer_len(horizon + 1), players);
    let mut policy = vec![Vec::new(); horizon];

    for h in (1..=horizon).rev() {
        let next = &values[h];
        let solved: Vec<Result<(Vec<(usize, T)>, Vec<T>)>> = (0..reduced.layer_len(h))
            .into_par_iter()
            .map(|index| {
                let q = stage_q(&reduced, h, index, next);
                let utilities =
                    q.q.iter()
                        .map(|u| match u {
                            Some(v) => v.iter().cloned().map(Some).collect(),
                            None => vec![None; players],
                        })
                        .collect();
                let game = MatrixGame::new(reduced.joint.clone(), reduced.node(h, index).allowed.clone(), utilities);
                let dist = solve_stage(&game, kind).map_err(|e| match e {
                    Error::NoSolution(detail) => Error::NoSolution(format!(
                        "h={h}, state {}: {detail}",
                        reduced.state_name(reduced.key(h, index))
                    )),
                    other => other,
                })?;
                let mut value = vec![T::zero(); players];
                for (a, p) in &dist.entries {
                    let qa = q.q[*a].as_ref().expect("support lies in the allowed set");
                    for (v, w) in value.iter_mut().zip(qa) {
                        *v = v.clone() + p.clone() * w.clone();
                    }
                }
                Ok((dist.entries, value))
            })
            .collect();
        let mut layer_policy = Vec::with_capacity(solved.len());
        let mut layer_values = Vec::with_capacity(solved.len());
        for item in solved {
            let (dist, value) = item?;
            layer_policy.push(dist);
            layer_values.push(value);
        }
        policy[h - 1] = layer_policy;
        values[h - 1] = layer_values;
    }

    let metadata = SolveMetadata {
        reduced_states: reduced.total_states(),
        non_product_states: reduced.non_product_count(),
        lattice_scale: reduced.scale.to_string(),
        timings: Timings {
            solve: start.elapsed(),
            ..Timings::default()
        },
        ..SolveMetadata::default()
    };
    Ok(AceSolution {
        kind,
        reduced,
        policy: AugmentedPolicy { layers: policy },
        values: ValueTable { values },
        metadata,
    })
}

/// Values of a Markov policy on the reduced game by backward evaluation.
pub fn evaluate_policy<T: Scalar>(reduced: &ReducedGame, policy: &AugmentedPolicy<T>) -> ValueTable<T> {
    let horizon = reduced.horizon;
    let players = reduced.players;
    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = zero_layer::<T>(reduced.layer_len(horizon + 1), players);
    for h in (1..=horizon).rev() {
        let next = &values[h];
        let layer: Vec<Vec<T>> = reduced
            .layer(h)
            .iter()
            .enumerate()
            .map(|(index, node)| {
                let mut value = vec![T::zero(); players];
                for (a, p) in policy.get(h, index) {
                    let k = node.position(*a).expect("policy plays an allowed action");
                    for (i, v) in value.iter_mut().enumerate() {
                        let mut q = T::from_rational(&node.rewards[k][i]);
                        for (j, pr) in &node.outcomes[k] {
                            q = q + T::from_rational(pr) * next[*j][i].clone();
                        }
                        *v = v.clone() + p.clone() * q;
                    }
                }
                value
            })
            .collect();
        values[h - 1] = layer;
    }
    ValueTable { values }
}

/// Result of the full pipeline.
#[derive(Clone, Debug)]
pub enum AcmgOutcome<T> {
    Solved(Box<AceSolution<T>>),
    Infeasible(SolveMetadata),
}

impl<T> AcmgOutcome<T> {
    pub fn solution(&self) -> Option<&AceSolution<T>> {
        match self {
            AcmgOutcome::Solved(s) => Some(s),
            AcmgOutcome::Infeasible(_) => None,
        }
    }

    pub fn into_solution(self) -> Option<AceSolution<T>> {
        match self {
            AcmgOutcome::Solved(s) => Some(*s),
            AcmgOutcome::Infeasible(_) => None,
        }
    }

    pub fn metadata(&self) -> &SolveMetadata {
        match self {
            AcmgOutcome::Solved(s) => &s.metadata,
            AcmgOutcome::Infeasible(m) => m,
        }
    }
}

/// Feasibility, reduction and backward induction in one call.
pub fn solve_acmg<T: Scalar>(game: &Game, kind: EquilibriumKind, limits: &Limits) -> Result<AcmgOutcome<T>> {
    let start = Instant::now();
    let analysis = analyze(game, limits)?;
    let stats = analysis.dag.stats();
    let mut metadata = SolveMetadata {
        distinct_costs: stats.distinct_costs,
        or_nodes: stats.or_nodes,
        and_nodes: stats.and_nodes,
        precision_bits: analysis.precision_bits,
        distinct_cost_bound: analysis.distinct_cost_bound(),
        lattice_scale: analysis.model.scale.to_string(),
        ..SolveMetadata::default()
    };
    let Some(sets) = &analysis.sets else {
        metadata.timings.feasibility = start.elapsed();
        return Ok(AcmgOutcome::Infeasible(metadata));
    };
    let reduced = build_reduced_game(&analysis.model, sets, game.actions.clone());
    metadata.timings.feasibility = start.elapsed();
    let mut solution = solve_reduced_game::<T>(reduced, kind)?;
    metadata.reduced_states = solution.metadata.reduced_states;
    metadata.non_product_states = solution.metadata.non_product_states;
    metadata.timings.solve = solution.metadata.timings.solve;
    solution.metadata = metadata;
    Ok(AcmgOutcome::Solved(Box::new(solution)))
}

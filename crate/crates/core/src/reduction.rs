//! The action-constrained game over augmented states `(s, c̄)`, and the
//! translations between its histories and policies and those of the
//! original game.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::feasibility::{AugState, FeasibleSets};
use crate::game::{History, JointSpace, LatticeModel};
use crate::rational::{format_rational, Rational};
use crate::scalar::Scalar;

/// One augmented state of the reduced game at some time `h <= H`.
#[derive(Clone, Debug)]
pub struct ReducedNode {
    pub key: AugState,
    /// Allowed joint actions, ascending.
    pub allowed: Vec<usize>,
    /// Per allowed action: `(index in layer h + 1, probability)`.
    pub outcomes: Vec<Vec<(usize, Rational)>>,
    /// Per allowed action: reward vector.
    pub rewards: Vec<Vec<Rational>>,
    /// Whether `allowed` is a Cartesian product of per-player sets.
    pub product: bool,
}

impl ReducedNode {
    /// Position of `action` in `allowed`.
    pub fn position(&self, action: usize) -> Option<usize> {
        self.allowed.binary_search(&action).ok()
    }
}

/// Explicit action-constrained Markov game built from the feasible sets.
#[derive(Clone, Debug)]
pub struct ReducedGame {
    pub players: usize,
    pub horizon: usize,
    pub joint: JointSpace,
    /// Lattice scale of the cost coordinates in `AugState::cost`.
    pub scale: BigInt,
    pub state_names: Vec<String>,
    pub action_names: Vec<Vec<String>>,
    layers: Vec<Vec<ReducedNode>>,
    terminal: Vec<AugState>,
    index: Vec<HashMap<AugState, usize>>,
}

impl ReducedGame {
    /// Nodes of `S̄_h`, `1 <= h <= H`, in canonical order.
    pub fn layer(&self, h: usize) -> &[ReducedNode] {
        &self.layers[h - 1]
    }

    pub fn node(&self, h: usize, index: usize) -> &ReducedNode {
        &self.layers[h - 1][index]
    }

    /// Number of augmented states at time `h`, `1 <= h <= H + 1`.
    pub fn layer_len(&self, h: usize) -> usize {
        if h == self.horizon + 1 {
            self.terminal.len()
        } else {
            self.layers[h - 1].len()
        }
    }

    pub fn key(&self, h: usize, index: usize) -> &AugState {
        if h == self.horizon + 1 {
            &self.terminal[index]
        } else {
            &self.layers[h - 1][index].key
        }
    }

    pub fn find(&self, h: usize, key: &AugState) -> Option<usize> {
        self.index.get(h - 1)?.get(key).copied()
    }

    pub fn terminal(&self) -> &[AugState] {
        &self.terminal
    }

    pub fn total_states(&self) -> usize {
        self.layers.iter().map(Vec::len).sum::<usize>() + self.terminal.len()
    }

    pub fn non_product_count(&self) -> usize {
        self.layers.iter().flatten().filter(|n| !n.product).count()
    }

    pub fn cost_in_units(&self, lattice: &[i64]) -> Vec<Rational> {
        lattice
            .iter()
            .map(|v| Rational::new(BigInt::from(*v), self.scale.clone()))
            .collect()
    }

    pub fn to_lattice(&self, costs: &[Rational]) -> Option<Vec<i64>> {
        let factor = Rational::from_integer(self.scale.clone());
        costs.iter().map(|c| crate::rational::to_i64(&(c * &factor))).collect()
    }

    /// `(s,[c̄...])` in original cost units.
    pub fn state_name(&self, key: &AugState) -> String {
        let costs: Vec<String> = self.cost_in_units(&key.cost).iter().map(format_rational).collect();
        format!("({},[{}])", self.state_names[key.state], costs.join(","))
    }

    pub fn action_label(&self, joint: usize) -> Vec<String> {
        self.joint
            .decode(joint)
            .iter()
            .enumerate()
            .map(|(i, &a)| self.action_names[i][a].clone())
            .collect()
    }
}

fn is_product(joint: &JointSpace, allowed: &[usize]) -> bool {
    let mut projections = vec![std::collections::BTreeSet::new(); joint.players()];
    for &a in allowed {
        for (i, p) in projections.iter_mut().enumerate() {
            p.insert(joint.component(a, i));
        }
    }
    let product: usize = projections.iter().map(|p| p.len()).product();
    product == allowed.len()
}

/// Materializes `Ḡ` from a lattice model and its feasible sets.
pub fn build_reduced_game(model: &LatticeModel, sets: &FeasibleSets, action_names: Vec<Vec<String>>) -> ReducedGame {
    let horizon = model.horizon;
    let mut index = Vec::with_capacity(horizon + 1);
    for h in 1..=horizon + 1 {
        let map: HashMap<AugState, usize> = sets
            .states(h)
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        index.push(map);
    }

    let mut layers = Vec::with_capacity(horizon);
    for h in 1..=horizon {
        let next_index = &index[h];
        let mut nodes = Vec::new();
        for (key, allowed) in sets.layer(h) {
            let mut outcomes = Vec::with_capacity(allowed.len());
            let mut rewards = Vec::with_capacity(allowed.len());
            for &a in allowed {
                let cell = model.cell(h, key.state, a);
                let mut merged: BTreeMap<usize, Rational> = BTreeMap::new();
                for (next_state, p) in &cell.next {
                    for (cost, q) in &cell.costs {
                        let cumulative: Vec<i64> = key.cost.iter().zip(cost).map(|(x, y)| x + y).collect();
                        let target = AugState::new(*next_state, cumulative);
                        let j = *next_index
                            .get(&target)
                            .expect("outcome of a TRUE action lies in the next feasible set");
                        *merged.entry(j).or_insert_with(Rational::zero) += p * q;
                    }
                }
                outcomes.push(merged.into_iter().collect());
                rewards.push(cell.reward.clone());
            }
            nodes.push(ReducedNode {
                key: key.clone(),
                product: is_product(&model.joint, allowed),
                allowed: allowed.clone(),
                outcomes,
                rewards,
            });
        }
        layers.push(nodes);
    }

    ReducedGame {
        players: model.players,
        horizon,
        joint: model.joint.clone(),
        scale: model.scale.clone(),
        state_names: model.state_names.clone(),
        action_names,
        layers,
        terminal: sets.states(horizon + 1).into_iter().cloned().collect(),
        index,
    }
}

/// History of `Ḡ`: augmented states with cumulative costs in original units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedHistory {
    pub states: Vec<(usize, Vec<Rational>)>,
    pub actions: Vec<usize>,
}

/// Replaces per-step costs with running totals.
pub fn translate_history(history: &History, players: usize) -> AugmentedHistory {
    let mut total = vec![Rational::zero(); players];
    let mut states = vec![(history.states[0], total.clone())];
    for (k, cost) in history.costs.iter().enumerate() {
        for (acc, c) in total.iter_mut().zip(cost) {
            *acc += c;
        }
        states.push((history.states[k + 1], total.clone()));
    }
    AugmentedHistory {
        states,
        actions: history.actions.clone(),
    }
}

/// Recovers per-step costs as differences of running totals.
pub fn invert_history(augmented: &AugmentedHistory) -> History {
    let mut history = History::start(augmented.states[0].0);
    for (k, window) in augmented.states.windows(2).enumerate() {
        let cost = window[1].1.iter().zip(&window[0].1).map(|(b, a)| b - a).collect();
        history.push(augmented.actions[k], cost, window[1].0);
    }
    history
}

/// Markov policy on `Ḡ`: for each time and augmented state, the support of
/// the joint-action distribution as ascending `(action, probability)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedPolicy<T> {
    pub layers: Vec<Vec<Vec<(usize, T)>>>,
}

impl<T: Scalar> AugmentedPolicy<T> {
    pub fn get(&self, h: usize, index: usize) -> &[(usize, T)] {
        &self.layers[h - 1][index]
    }

    /// Every supported action is allowed and every distribution sums to one
    /// within `tolerance`.
    pub fn is_subgame_feasible(&self, reduced: &ReducedGame, tolerance: f64) -> bool {
        (1..=reduced.horizon).all(|h| {
            reduced.layer(h).iter().enumerate().all(|(i, node)| {
                let dist = self.get(h, i);
                let total: f64 = dist.iter().map(|(_, p)| p.to_f64()).sum();
                dist.iter()
                    .all(|(a, p)| node.position(*a).is_some() && !p.is_negative())
                    && (total - 1.0).abs() <= tolerance
            })
        })
    }

    pub fn to_f64(&self) -> AugmentedPolicy<f64> {
        AugmentedPolicy {
            layers: self
                .layers
                .iter()
                .map(|layer| {
                    layer
                        .iter()
                        .map(|dist| dist.iter().map(|(a, p)| (*a, p.to_f64())).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

/// A policy of the reduced game viewed as a history-dependent policy of
/// the original game: it looks up `(s_h, c̄_h)` and plays that distribution.
pub struct LiftedPolicy<'a, T> {
    pub reduced: &'a ReducedGame,
    pub policy: &'a AugmentedPolicy<T>,
}

impl<'a, T: Scalar> LiftedPolicy<'a, T> {
    pub fn new(reduced: &'a ReducedGame, policy: &'a AugmentedPolicy<T>) -> Self {
        LiftedPolicy { reduced, policy }
    }

    /// Index of `(s, c̄)` in `S̄_h`, or the off-set error.
    pub fn locate(&self, h: usize, state: usize, cumulative: &[Rational]) -> Result<usize> {
        let off = || Error::OffFeasibleSet {
            h,
            state: self.reduced.state_names[state].clone(),
            cost: cumulative.iter().map(format_rational).collect::<Vec<_>>().join(","),
        };
        let lattice = self.reduced.to_lattice(cumulative).ok_or_else(off)?;
        if h > self.reduced.horizon {
            return Err(off());
        }
        self.reduced.find(h, &AugState::new(state, lattice)).ok_or_else(off)
    }

    pub fn distribution(&self, history: &History) -> Result<&'a [(usize, T)]> {
        let h = history.time();
        let state = *history.states.last().expect("nonempty history");
        let index = self.locate(h, state, &history.cumulative_cost(self.reduced.players))?;
        Ok(self.policy.get(h, index))
    }
}

//! The constrained Markov game model: types, parsing, validation and
//! fixed-point cost scaling.

mod parse;
mod scale;
mod validate;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

pub use parse::{parse_game, parse_game_checked, parse_game_unvalidated, serialize_game, to_document, GameDoc, NumLit};
pub use scale::{check_precision, cost_precision_bits, scale_costs, LatticeCell, LatticeModel};
pub use validate::{validate_game, ValidationReport, Violation, ViolationKind};

/// Mixed-radix indexing of the joint action space `A_1 x ... x A_n`.
///
/// Player 0 is the most significant digit, so joint indices enumerate
/// action profiles in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JointSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl JointSpace {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let len = sizes.iter().product();
        JointSpace { sizes, strides, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn players(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, player: usize) -> usize {
        self.sizes[player]
    }

    pub fn component(&self, joint: usize, player: usize) -> usize {
        (joint / self.strides[player]) % self.sizes[player]
    }

    pub fn decode(&self, joint: usize) -> Vec<usize> {
        (0..self.sizes.len()).map(|i| self.component(joint, i)).collect()
    }

    pub fn encode(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.strides).map(|(a, stride)| a * stride).sum()
    }

    /// Joint action with player `player`'s component replaced by `action`.
    pub fn replace(&self, joint: usize, player: usize, action: usize) -> usize {
        let current = self.component(joint, player);
        joint - current * self.strides[player] + action * self.strides[player]
    }
}

/// Per-player cost distribution in product form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CostSource {
    /// Finite support: `(value, probability)` atoms.
    Finite(Vec<(Rational, Rational)>),
    /// Uniform on the closed interval `[low, high]`.
    Uniform { low: Rational, high: Rational },
}

impl CostSource {
    pub fn point(value: Rational) -> Self {
        CostSource::Finite(vec![(value, Rational::one())])
    }

    /// Supremum of the support.
    pub fn sup(&self) -> Option<Rational> {
        match self {
            CostSource::Finite(atoms) => atoms
                .iter()
                .filter(|(_, p)| p.is_positive())
                .map(|(v, _)| v.clone())
                .max(),
            CostSource::Uniform { high, .. } => Some(high.clone()),
        }
    }

    /// `Pr[c < x]` for the distribution.
    pub fn cdf_below(&self, x: &Rational) -> Rational {
        match self {
            CostSource::Finite(atoms) => atoms
                .iter()
                .filter(|(v, _)| v < x)
                .fold(Rational::zero(), |acc, (_, p)| acc + p),
            CostSource::Uniform { low, high } => {
                if low == high {
                    if x > low {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                } else if x <= low {
                    Rational::zero()
                } else if x >= high {
                    Rational::one()
                } else {
                    (x - low) / (high - low)
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, CostSource::Finite(_))
    }
}

/// One atom of a joint (possibly correlated) cost distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointCostAtom {
    pub value: Vec<Rational>,
    pub prob: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CostModel {
    Product(Vec<CostSource>),
    Joint(Vec<JointCostAtom>),
}

impl CostModel {
    /// Joint finite support with probabilities, expanding product form.
    /// Atoms with zero mass are dropped; equal vectors are merged.
    /// Returns `None` when any player's source is continuous.
    pub fn joint_support(&self) -> Option<Vec<(Vec<Rational>, Rational)>> {
        let mut atoms: Vec<(Vec<Rational>, Rational)> = match self {
            CostModel::Joint(atoms) => atoms
                .iter()
                .filter(|atom| atom.prob.is_positive())
                .map(|atom| (atom.value.clone(), atom.prob.clone()))
                .collect(),
            CostModel::Product(sources) => {
                let mut acc: Vec<(Vec<Rational>, Rational)> = vec![(Vec::new(), Rational::one())];
                for source in sources {
                    let CostSource::Finite(player_atoms) = source else {
                        return None;
                    };
                    let mut next = Vec::with_capacity(acc.len() * player_atoms.len());
                    for (prefix, mass) in &acc {
                        for (value, prob) in player_atoms.iter().filter(|(_, p)| p.is_positive()) {
                            let mut vector = prefix.clone();
                            vector.push(value.clone());
                            next.push((vector, mass * prob));
                        }
                    }
                    acc = next;
                }
                acc
            }
        };
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Vec<Rational>, Rational)> = Vec::with_capacity(atoms.len());
        for (value, prob) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == value => last.1 += prob,
                _ => merged.push((value, prob)),
            }
        }
        Some(merged)
    }

    pub fn is_product(&self) -> bool {
        matches!(self, CostModel::Product(_))
    }

    pub fn is_finite(&self) -> bool {
        match self {
            CostModel::Product(sources) => sources.iter().all(CostSource::is_finite),
            CostModel::Joint(_) => true,
        }
    }
}

/// Dynamics of one `(h, s, a)` cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dynamics {
    /// Successor states with their probabilities.
    pub next: Vec<(usize, Rational)>,
    /// Expected reward per player.
    pub reward: Vec<Rational>,
    pub cost: CostModel,
}

/// A finite-horizon constrained Markov game with a per-player budget.
///
/// Dynamics are stored densely in `(h, s, a)` order, with `h` running from
/// 1 to `horizon` and `a` a joint action index of [`Game::joint`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Game {
    pub players: usize,
    pub states: Vec<String>,
    pub initial_state: usize,
    pub horizon: usize,
    pub budget: Vec<Rational>,
    pub actions: Vec<Vec<String>>,
    pub dynamics: Vec<Dynamics>,
    /// Shared fixed-point denominator of all finite costs and budgets.
    pub cost_scale: BigInt,
}

impl Game {
    pub fn joint(&self) -> JointSpace {
        JointSpace::new(self.actions.iter().map(Vec::len).collect())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_joint_actions(&self) -> usize {
        self.actions.iter().map(Vec::len).product()
    }

    pub fn cell_index(&self, h: usize, state: usize, action: usize) -> usize {
        debug_assert!(h >= 1 && h <= self.horizon);
        ((h - 1) * self.num_states() + state) * self.num_joint_actions() + action
    }

    pub fn cell(&self, h: usize, state: usize, action: usize) -> &Dynamics {
        &self.dynamics[self.cell_index(h, state, action)]
    }

    pub fn action_label(&self, joint: usize) -> Vec<String> {
        self.joint()
            .decode(joint)
            .into_iter()
            .enumerate()
            .map(|(i, a)| self.actions[i][a].clone())
            .collect()
    }

    /// Least common multiple of the denominators of every finite cost atom
    /// and every budget entry.
    pub fn compute_cost_scale(&self) -> BigInt {
        let mut scale = BigInt::one();
        let mut absorb = |value: &Rational| {
            scale = crate::rational::lcm(&scale, value.denom());
        };
        self.budget.iter().for_each(&mut absorb);
        for cell in &self.dynamics {
            match &cell.cost {
                CostModel::Product(sources) => {
                    for source in sources {
                        if let CostSource::Finite(atoms) = source {
                            atoms.iter().for_each(|(v, _)| absorb(v));
                        }
                    }
                }
                CostModel::Joint(atoms) => {
                    atoms.iter().flat_map(|a| a.value.iter()).for_each(&mut absorb);
                }
            }
        }
        scale
    }

    /// Per-player supremum of supported costs over all cells.
    pub fn max_costs(&self) -> Vec<Option<Rational>> {
        let mut maxima: Vec<Option<Rational>> = vec![None; self.players];
        let mut bump = |i: usize, v: Rational| {
            if maxima[i].as_ref().is_none_or(|m| v > *m) {
                maxima[i] = Some(v);
            }
        };
        for cell in &self.dynamics {
            match &cell.cost {
                CostModel::Product(sources) => {
                    for (i, source) in sources.iter().enumerate() {
                        if let Some(sup) = source.sup() {
                            bump(i, sup);
                        }
                    }
                }
                CostModel::Joint(atoms) => {
                    for atom in atoms.iter().filter(|a| a.prob.is_positive()) {
                        for (i, v) in atom.value.iter().enumerate() {
                            bump(i, v.clone());
                        }
                    }
                }
            }
        }
        maxima
    }

    pub fn has_continuous_costs(&self) -> bool {
        self.dynamics.iter().any(|c| !c.cost.is_finite())
    }

    pub fn has_joint_costs(&self) -> bool {
        self.dynamics.iter().any(|c| !c.cost.is_product())
    }
}

/// A realized trajectory prefix `(s_1, a_1, c_1, s_2, ..., s_h)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct History {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub costs: Vec<Vec<Rational>>,
}

impl History {
    pub fn start(state: usize) -> Self {
        History {
            states: vec![state],
            actions: Vec::new(),
            costs: Vec::new(),
        }
    }

    /// Time index `h` of the last state.
    pub fn time(&self) -> usize {
        self.states.len()
    }

    pub fn push(&mut self, action: usize, cost: Vec<Rational>, next: usize) {
        self.actions.push(action);
        self.costs.push(cost);
        self.states.push(next);
    }

    pub fn is_well_formed(&self) -> bool {
        !self.states.is_empty()
            && self.actions.len() + 1 == self.states.len()
            && self.costs.len() == self.actions.len()
            && self.costs.windows(2).all(|w| w[0].len() == w[1].len())
    }

    /// Cumulative cost `c_1 + ... + c_{h-1}` for `players` players.
    pub fn cumulative_cost(&self, players: usize) -> Vec<Rational> {
        let mut total = vec![Rational::zero(); players];
        for cost in &self.costs {
            for (acc, c) in total.iter_mut().zip(cost) {
                *acc += c;
            }
        }
        total
    }
}

//! Fixed-point normalization: costs and budgets onto an integer lattice.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{CostModel, CostSource, Game, JointCostAtom, JointSpace};
use crate::config::Limits;
use crate::error::{Error, Result};
use crate::rational::{bit_length, format_rational, to_i64, Rational};

/// Multiplies every cost value and budget entry by the game's scale.
/// The result has `cost_scale == 1`.
pub fn scale_costs(game: &Game) -> Game {
    if game.cost_scale.is_one() {
        return game.clone();
    }
    let factor = Rational::from_integer(game.cost_scale.clone());
    let mut scaled = game.clone();
    scaled.budget = game.budget.iter().map(|b| b * &factor).collect();
    for cell in &mut scaled.dynamics {
        cell.cost = match &cell.cost {
            CostModel::Product(sources) => CostModel::Product(
                sources
                    .iter()
                    .map(|source| match source {
                        CostSource::Finite(atoms) => {
                            CostSource::Finite(atoms.iter().map(|(v, p)| (v * &factor, p.clone())).collect())
                        }
                        CostSource::Uniform { low, high } => CostSource::Uniform {
                            low: low * &factor,
                            high: high * &factor,
                        },
                    })
                    .collect(),
            ),
            CostModel::Joint(atoms) => CostModel::Joint(
                atoms
                    .iter()
                    .map(|atom| JointCostAtom {
                        value: atom.value.iter().map(|v| v * &factor).collect(),
                        prob: atom.prob.clone(),
                    })
                    .collect(),
            ),
        };
    }
    scaled.cost_scale = BigInt::one();
    scaled
}

fn max_abs_finite_cost(game: &Game) -> Rational {
    let mut max = Rational::zero();
    for cell in &game.dynamics {
        if let Some(support) = cell.cost.joint_support() {
            for (value, _) in support {
                for v in value {
                    if v.abs() > max {
                        max = v.abs();
                    }
                }
            }
        }
    }
    max
}

/// Rejects games whose exact cumulative-cost lattice would exceed the cap,
/// and games with continuous costs (which only the approximation path takes).
pub fn check_precision(game: &Game, limits: &Limits) -> Result<()> {
    if game.has_continuous_costs() {
        return Err(Error::Unsupported(
            "continuous cost sources need the approximation solver".into(),
        ));
    }
    let horizon = Rational::from_integer(BigInt::from(game.horizon));
    let max_budget = game.budget.iter().map(|b| b.abs()).max().unwrap_or_else(Rational::zero);
    let reach = std::cmp::max(max_abs_finite_cost(game) * horizon, max_budget);
    let extent = (reach * Rational::from_integer(game.cost_scale.clone())).ceil();
    let extent = extent.to_integer();
    if extent > BigInt::from(limits.max_lattice) {
        return Err(Error::Precision(format!(
            "lattice extent {extent} (scale {}) exceeds cap {}",
            game.cost_scale, limits.max_lattice
        )));
    }
    Ok(())
}

/// Bits needed for the largest scaled cost magnitude.
pub fn cost_precision_bits(game: &Game) -> u64 {
    let scaled = max_abs_finite_cost(game) * Rational::from_integer(game.cost_scale.clone());
    bit_length(&scaled.ceil().to_integer())
}

/// Lattice view of one `(h, s, a)` cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeCell {
    /// Successors with positive probability.
    pub next: Vec<(usize, Rational)>,
    /// Joint cost support with positive probability.
    pub costs: Vec<(Vec<i64>, Rational)>,
    /// Componentwise maximum over `costs`.
    pub max_cost: Vec<i64>,
    pub reward: Vec<Rational>,
}

/// Integer-lattice form of a scaled game with finite costs.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    pub players: usize,
    pub num_states: usize,
    pub state_names: Vec<String>,
    pub horizon: usize,
    pub initial_state: usize,
    pub joint: JointSpace,
    pub budget: Vec<i64>,
    /// Scale of the game this model was built from.
    pub scale: BigInt,
    cells: Vec<LatticeCell>,
}

impl LatticeModel {
    /// Scales (if needed) and converts the game. Fails on continuous costs,
    /// on lattices above `limits.max_lattice`, or on i64 overflow.
    pub fn new(game: &Game, limits: &Limits) -> Result<Self> {
        check_precision(game, limits)?;
        let scaled = scale_costs(game);
        let overflow = || Error::Precision("scaled value does not fit in 64 bits".into());
        let budget = scaled
            .budget
            .iter()
            .map(|b| to_i64(b).ok_or_else(overflow))
            .collect::<Result<Vec<_>>>()?;
        let mut cells = Vec::with_capacity(scaled.dynamics.len());
        for cell in &scaled.dynamics {
            let support = cell
                .cost
                .joint_support()
                .ok_or_else(|| Error::Unsupported("continuous cost source".into()))?;
            let costs = support
                .into_iter()
                .map(|(value, prob)| {
                    let lattice = value
                        .iter()
                        .map(|v| to_i64(v).ok_or_else(overflow))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((lattice, prob))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut max_cost = vec![i64::MIN; scaled.players];
            for (value, _) in &costs {
                for (m, v) in max_cost.iter_mut().zip(value) {
                    *m = (*m).max(*v);
                }
            }
            cells.push(LatticeCell {
                next: cell.next.iter().filter(|(_, p)| p.is_positive()).cloned().collect(),
                costs,
                max_cost,
                reward: cell.reward.clone(),
            });
        }
        Ok(LatticeModel {
            players: scaled.players,
            num_states: scaled.num_states(),
            state_names: scaled.states.clone(),
            horizon: scaled.horizon,
            initial_state: scaled.initial_state,
            joint: scaled.joint(),
            budget,
            scale: game.cost_scale.clone(),
            cells,
        })
    }

    pub fn cell(&self, h: usize, state: usize, action: usize) -> &LatticeCell {
        &self.cells[((h - 1) * self.num_states + state) * self.joint.len() + action]
    }

    /// Converts an original-unit cost vector to lattice coordinates.
    pub fn to_lattice(&self, costs: &[Rational]) -> Option<Vec<i64>> {
        let factor = Rational::from_integer(self.scale.clone());
        costs.iter().map(|c| to_i64(&(c * &factor))).collect()
    }

    /// Converts lattice coordinates back to original units.
    pub fn from_lattice(&self, lattice: &[i64]) -> Vec<Rational> {
        lattice
            .iter()
            .map(|v| Rational::new(BigInt::from(*v), self.scale.clone()))
            .collect()
    }

    /// Name of an augmented state in original cost units, e.g. `(s,[1/2])`.
    pub fn augmented_name(&self, state: usize, lattice: &[i64]) -> String {
        let costs: Vec<String> = self.from_lattice(lattice).iter().map(format_rational).collect();
        format!("({},[{}])", self.state_names[state], costs.join(","))
    }

    pub fn max_budget_extent(&self) -> u64 {
        self.budget.iter().map(|b| b.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn scale_f64(&self) -> f64 {
        self.scale.to_f64().unwrap_or(f64::INFINITY)
    }
}

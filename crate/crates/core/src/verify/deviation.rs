//! Best feasible unilateral deviations, by single-agent dynamic programming
//! against the other players' play.

use crate::equilibrium::ValueTable;
use crate::reduction::{AugmentedPolicy, ReducedGame};
use crate::scalar::Scalar;
use crate::stage_lp::{EquilibriumKind, JointDistribution, MatrixGame};

/// One `(player, time, augmented state)` entry.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationEntry {
    pub player: usize,
    pub h: usize,
    pub index: usize,
    pub deviation_value: f64,
    /// `deviation_value - V̄`.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationReport {
    pub kind: EquilibriumKind,
    pub entries: Vec<DeviationEntry>,
    pub max_gap: f64,
    pub tolerance: f64,
}

impl DeviationReport {
    pub fn passed(&self) -> bool {
        self.max_gap <= self.tolerance
    }

    pub fn worst(&self) -> Option<&DeviationEntry> {
        self.entries.iter().max_by(|a, b| a.gap.total_cmp(&b.gap))
    }
}

/// Best value player `i` can get at one stage from `dist` given the
/// continuation `q(a)`, over deviations that keep every induced joint action
/// inside `allowed` (following the recommendation is always an option).
fn best_stage_deviation<T: Scalar>(
    reduced: &ReducedGame,
    allowed: &dyn Fn(usize) -> bool,
    dist: &[(usize, T)],
    q: &dyn Fn(usize) -> T,
    player: usize,
    kind: EquilibriumKind,
) -> T {
    let joint = &reduced.joint;
    let follow = dist.iter().fold(T::zero(), |acc, (a, p)| acc + p.clone() * q(*a));
    match kind {
        EquilibriumKind::Cce => {
            let mut best = follow;
            for b in 0..joint.size(player) {
                if dist.iter().all(|(a, _)| allowed(joint.replace(*a, player, b))) {
                    let v = dist.iter().fold(T::zero(), |acc, (a, p)| {
                        acc + p.clone() * q(joint.replace(*a, player, b))
                    });
                    best = T::max_of(best, v);
                }
            }
            best
        }
        EquilibriumKind::Ce => {
            let mut total = T::zero();
            for rec in 0..joint.size(player) {
                let part: Vec<&(usize, T)> = dist
                    .iter()
                    .filter(|(a, _)| joint.component(*a, player) == rec)
                    .collect();
                if part.is_empty() {
                    continue;
                }
                let mut best: Option<T> = None;
                for b in 0..joint.size(player) {
                    if part.iter().all(|(a, _)| allowed(joint.replace(*a, player, b))) {
                        let v = part.iter().fold(T::zero(), |acc, (a, p)| {
                            acc + p.clone() * q(joint.replace(*a, player, b))
                        });
                        best = Some(match best {
                            None => v,
                            Some(x) => T::max_of(x, v),
                        });
                    }
                }
                total = total + best.expect("following the recommendation is feasible");
            }
            total
        }
    }
}

/// Value of the best feasible Markov deviation of every player at every
/// augmented state, compared against `values`.
pub fn best_feasible_deviation<T: Scalar>(
    reduced: &ReducedGame,
    policy: &AugmentedPolicy<T>,
    values: &ValueTable<T>,
    kind: EquilibriumKind,
    tolerance: f64,
) -> DeviationReport {
    let horizon = reduced.horizon;
    let mut entries = Vec::new();
    let mut max_gap = f64::NEG_INFINITY;
    for player in 0..reduced.players {
        let mut next: Vec<T> = vec![T::zero(); reduced.layer_len(horizon + 1)];
        for h in (1..=horizon).rev() {
            let mut current = Vec::with_capacity(reduced.layer_len(h));
            for (index, node) in reduced.layer(h).iter().enumerate() {
                let q = |a: usize| -> T {
                    let k = node.position(a).expect("deviation stays allowed");
                    node.outcomes[k]
                        .iter()
                        .fold(T::from_rational(&node.rewards[k][player]), |acc, (j, p)| {
                            acc + T::from_rational(p) * next[*j].clone()
                        })
                };
                let allowed = |a: usize| node.position(a).is_some();
                let v = best_stage_deviation(reduced, &allowed, policy.get(h, index), &q, player, kind);
                let gap = (v.clone() - values.at(h, index)[player].clone()).to_f64();
                max_gap = max_gap.max(gap);
                entries.push(DeviationEntry {
                    player,
                    h,
                    index,
                    deviation_value: v.to_f64(),
                    gap,
                });
                current.push(v);
            }
            next = current;
        }
    }
    DeviationReport {
        kind,
        entries,
        max_gap: if max_gap.is_finite() { max_gap } else { 0.0 },
        tolerance,
    }
}

/// Largest gain of any pure deviation that keeps the induced distribution on
/// the allowed set of a matrix game. Returns `f64::INFINITY` if `dist` puts
/// mass outside the allowed set.
pub fn stage_deviation_gain<T: Scalar>(
    game: &MatrixGame<T>,
    dist: &JointDistribution<T>,
    kind: EquilibriumKind,
) -> f64 {
    if dist.support().any(|a| !game.is_allowed(a)) {
        return f64::INFINITY;
    }
    let joint = &game.joint;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..joint.players() {
        let u = |a: usize| game.utilities[a][i].clone().expect("allowed utility");
        let groups: Vec<Vec<&(usize, T)>> = match kind {
            EquilibriumKind::Cce => vec![dist.entries.iter().collect()],
            EquilibriumKind::Ce => (0..joint.size(i))
                .map(|r| {
                    dist.entries
                        .iter()
                        .filter(|(a, _)| joint.component(*a, i) == r)
                        .collect()
                })
                .collect(),
        };
        for group in groups.iter().filter(|g| !g.is_empty()) {
            for b in 0..joint.size(i) {
                if group.iter().any(|(a, _)| !game.is_allowed(joint.replace(*a, i, b))) {
                    continue;
                }
                let gain = group.iter().fold(T::zero(), |acc, (a, p)| {
                    acc + p.clone() * (u(joint.replace(*a, i, b)) - u(*a))
                });
                worst = worst.max(gain.to_f64());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::JointSpace;

    fn dilemma() -> MatrixGame<f64> {
        // Actions: 0 = cooperate, 1 = defect.
        let u = |a: f64, b: f64| vec![Some(a), Some(b)];
        MatrixGame::new(
            JointSpace::new(vec![2, 2]),
            vec![0, 1, 2, 3],
            vec![u(3.0, 3.0), u(0.0, 5.0), u(5.0, 0.0), u(1.0, 1.0)],
        )
    }

    #[test]
    fn dominant_action_gain_detected() {
        let uniform = JointDistribution {
            entries: (0..4).map(|a| (a, 0.25)).collect(),
        };
        assert!(stage_deviation_gain(&dilemma(), &uniform, EquilibriumKind::Cce) > 0.5);
        let defect = JointDistribution::point(3);
        assert!(stage_deviation_gain(&dilemma(), &defect, EquilibriumKind::Ce) <= 0.0);
    }

    #[test]
    fn restricted_deviation_is_ignored() {
        // Only mutual cooperation and mutual defection are allowed.
        let mut game = dilemma();
        game.allowed = vec![0, 3];
        game.utilities[1] = vec![None, None];
        game.utilities[2] = vec![None, None];
        let cooperate = JointDistribution::point(0);
        assert!(stage_deviation_gain(&game, &cooperate, EquilibriumKind::Cce) <= 0.0);
        let outside = JointDistribution::point(1);
        assert_eq!(
            stage_deviation_gain(&game, &outside, EquilibriumKind::Cce),
            f64::INFINITY
        );
    }
}

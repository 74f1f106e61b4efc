//! Constrained correlated / coarse-correlated equilibria of one matrix game
//! whose joint actions are restricted to an allowed set `X`.

pub mod simplex;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::JointSpace;
use crate::rational::Rational;
use crate::scalar::Scalar;

pub use simplex::find_feasible_point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    /// Coarse correlated: deviations commit before seeing the recommendation.
    Cce,
    /// Correlated: deviations may depend on the recommended action.
    Ce,
}

impl EquilibriumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EquilibriumKind::Cce => "cce",
            EquilibriumKind::Ce => "ce",
        }
    }

    /// Label of the equilibrium concept the solver produces.
    pub fn concept(self) -> &'static str {
        match self {
            EquilibriumKind::Cce => "ACCCE",
            EquilibriumKind::Ce => "ACCE",
        }
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquilibriumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cce" => Ok(EquilibriumKind::Cce),
            "ce" => Ok(EquilibriumKind::Ce),
            other => Err(Error::Argument(format!("unknown equilibrium kind {other:?}"))),
        }
    }
}

/// Matrix game `(A, X, u)`. `utilities[a][i]` is player `i`'s utility at
/// joint action `a`, or `None` where the action is flagged infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGame<T> {
    pub joint: JointSpace,
    /// Allowed joint actions, ascending.
    pub allowed: Vec<usize>,
    pub utilities: Vec<Vec<Option<T>>>,
}

impl<T: Scalar> MatrixGame<T> {
    pub fn new(joint: JointSpace, mut allowed: Vec<usize>, utilities: Vec<Vec<Option<T>>>) -> Self {
        allowed.sort_unstable();
        allowed.dedup();
        MatrixGame {
            joint,
            allowed,
            utilities,
        }
    }

    pub fn players(&self) -> usize {
        self.joint.players()
    }

    pub fn is_allowed(&self, action: usize) -> bool {
        self.allowed.binary_search(&action).is_ok()
    }
}

/// Matrix game with a finite utility everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SanitizedGame<T> {
    pub joint: JointSpace,
    pub allowed: Vec<usize>,
    pub utilities: Vec<Vec<T>>,
}

/// Replaces every utility outside `X` by `min - 1 - (max - min)`, where
/// `min` and `max` range over the player's utilities on `X`.
pub fn sanitize_utilities<T: Scalar>(game: &MatrixGame<T>) -> Result<SanitizedGame<T>> {
    if game.allowed.is_empty() {
        return Err(Error::NoSolution("empty allowed set".into()));
    }
    let n = game.players();
    let mut replacement = Vec::with_capacity(n);
    for i in 0..n {
        let mut lo: Option<T> = None;
        let mut hi: Option<T> = None;
        for &a in &game.allowed {
            let u = game.utilities[a][i]
                .clone()
                .ok_or_else(|| Error::Argument(format!("allowed joint action {a} has no utility for player {i}")))?;
            lo = Some(match lo {
                None => u.clone(),
                Some(l) => T::min_of(l, u.clone()),
            });
            hi = Some(match hi {
                None => u,
                Some(h) => T::max_of(h, u),
            });
        }
        let (lo, hi) = (lo.unwrap(), hi.unwrap());
        replacement.push(lo.clone() - T::one() - (hi - lo));
    }
    let utilities = (0..game.joint.len())
        .map(|a| {
            if game.is_allowed(a) {
                game.utilities[a].iter().map(|u| u.clone().unwrap()).collect()
            } else {
                replacement.clone()
            }
        })
        .collect();
    Ok(SanitizedGame {
        joint: game.joint.clone(),
        allowed: game.allowed.clone(),
        utilities,
    })
}

/// One incentive constraint `Σ_j coefficients[j] σ(allowed[j]) >= 0`.
/// `from` is the recommended action for correlated rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationRow<T> {
    pub player: usize,
    pub from: Option<usize>,
    pub to: usize,
    pub coefficients: Vec<T>,
}

/// Incentive rows over the variables `σ(a)`, `a ∈ X`; the simplex
/// constraint `Σ σ = 1` and `σ >= 0` are implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem<T> {
    pub kind: EquilibriumKind,
    pub variables: Vec<usize>,
    pub rows: Vec<DeviationRow<T>>,
}

pub fn build_clp<T: Scalar>(game: &SanitizedGame<T>, kind: EquilibriumKind) -> ConstraintSystem<T> {
    let joint = &game.joint;
    let mut rows = Vec::new();
    for i in 0..joint.players() {
        match kind {
            EquilibriumKind::Cce => {
                for to in 0..joint.size(i) {
                    let coefficients = game
                        .allowed
                        .iter()
                        .map(|&a| game.utilities[a][i].clone() - game.utilities[joint.replace(a, i, to)][i].clone())
                        .collect();
                    rows.push(DeviationRow {
                        player: i,
                        from: None,
                        to,
                        coefficients,
                    });
                }
            }
            EquilibriumKind::Ce => {
                for from in 0..joint.size(i) {
                    for to in (0..joint.size(i)).filter(|&t| t != from) {
                        let coefficients = game
                            .allowed
                            .iter()
                            .map(|&a| {
                                if joint.component(a, i) == from {
                                    game.utilities[a][i].clone() - game.utilities[joint.replace(a, i, to)][i].clone()
                                } else {
                                    T::zero()
                                }
                            })
                            .collect();
                        rows.push(DeviationRow {
                            player: i,
                            from: Some(from),
                            to,
                            coefficients,
                        });
                    }
                }
            }
        }
    }
    ConstraintSystem {
        kind,
        variables: game.allowed.clone(),
        rows,
    }
}

/// Probability over joint actions, stored as its ascending support.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<T> {
    pub entries: Vec<(usize, T)>,
}

impl<T: Scalar> JointDistribution<T> {
    pub fn point(action: usize) -> Self {
        JointDistribution {
            entries: vec![(action, T::one())],
        }
    }

    pub fn prob(&self, action: usize) -> T {
        self.entries
            .binary_search_by_key(&action, |(a, _)| *a)
            .map(|k| self.entries[k].1.clone())
            .unwrap_or_else(|_| T::zero())
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(a, _)| *a)
    }

    pub fn total(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone())
    }
}

/// Drops entries at or below the pivot tolerance and lets the largest entry
/// absorb the residual so the total is one.
pub fn renormalize<T: Scalar>(variables: &[usize], x: &[T]) -> JointDistribution<T> {
    let floor = T::pivot_tolerance();
    let mut entries: Vec<(usize, T)> = variables
        .iter()
        .zip(x)
        .filter(|(_, p)| **p > floor)
        .map(|(a, p)| (*a, p.clone()))
        .collect();
    if entries.is_empty() {
        return JointDistribution { entries };
    }
    let total = entries.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone());
    let mut largest = 0;
    for (k, (_, p)) in entries.iter().enumerate() {
        if *p > entries[largest].1 {
            largest = k;
        }
    }
    let residual = T::one() - total;
    entries[largest].1 = entries[largest].1.clone() + residual;
    JointDistribution { entries }
}

fn pivot_budget(system_rows: usize, vars: usize) -> usize {
    (50 * (system_rows + vars + 1)).max(10_000)
}

/// Runs the simplex on `system` and renormalizes the point it returns.
pub fn solve_feasibility<T: Scalar>(system: &ConstraintSystem<T>) -> Result<JointDistribution<T>> {
    let rows: Vec<Vec<T>> = system.rows.iter().map(|r| r.coefficients.clone()).collect();
    let vars = system.variables.len();
    match find_feasible_point(&rows, vars, pivot_budget(rows.len(), vars))? {
        Some(x) => Ok(renormalize(&system.variables, &x)),
        None => Err(Error::NoSolution(format!(
            "{} constraint system with {} variables",
            system.kind,
            system.variables.len()
        ))),
    }
}

/// Smallest row slack `min_r Σ_j coef σ_j` of `dist` (non-negative when all
/// constraints hold), or `None` if `dist` puts mass outside `X` or does not
/// sum to one within `tolerance`.
pub fn min_row_slack<T: Scalar>(
    system: &ConstraintSystem<T>,
    dist: &JointDistribution<T>,
    tolerance: f64,
) -> Option<f64> {
    let mut sigma = Vec::with_capacity(system.variables.len());
    for &a in &system.variables {
        sigma.push(dist.prob(a));
    }
    if dist.support().any(|a| system.variables.binary_search(&a).is_err()) {
        return None;
    }
    if dist.entries.iter().any(|(_, p)| p.is_negative()) || (dist.total().to_f64() - 1.0).abs() > tolerance {
        return None;
    }
    let mut worst = f64::INFINITY;
    for row in &system.rows {
        let value = row
            .coefficients
            .iter()
            .zip(&sigma)
            .fold(T::zero(), |acc, (c, s)| acc + c.clone() * s.clone());
        worst = worst.min(value.to_f64());
    }
    Some(worst)
}

fn to_exact<T: Scalar>(system: &ConstraintSystem<T>) -> ConstraintSystem<Rational> {
    ConstraintSystem {
        kind: system.kind,
        variables: system.variables.clone(),
        rows: system
            .rows
            .iter()
            .map(|r| DeviationRow {
                player: r.player,
                from: r.from,
                to: r.to,
                coefficients: r.coefficients.iter().map(Scalar::to_rational).collect(),
            })
            .collect(),
    }
}

/// Sanitizes, builds and solves the stage system. In inexact arithmetic a
/// result that misses the tolerance is recomputed in exact rationals.
pub fn solve_stage<T: Scalar>(game: &MatrixGame<T>, kind: EquilibriumKind) -> Result<JointDistribution<T>> {
    if game.allowed.len() == 1 {
        return Ok(JointDistribution::point(game.allowed[0]));
    }
    let sanitized = sanitize_utilities(game)?;
    let system = build_clp(&sanitized, kind);
    if T::EXACT {
        return solve_feasibility(&system);
    }
    let tolerance = T::tolerance().to_f64();
    let first = solve_feasibility(&system);
    if let Ok(dist) = &first {
        if min_row_slack(&system, dist, tolerance).is_some_and(|s| s >= -tolerance) {
            return first;
        }
    }
    let exact = solve_feasibility(&to_exact(&system))?;
    let entries: Vec<(usize, T)> = exact.entries.iter().map(|(a, p)| (*a, T::from_rational(p))).collect();
    let values: Vec<T> = entries.iter().map(|(_, p)| p.clone()).collect();
    let actions: Vec<usize> = entries.iter().map(|(a, _)| *a).collect();
    Ok(renormalize(&actions, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn full(joint: JointSpace, utilities: Vec<Vec<f64>>) -> MatrixGame<f64> {
        let allowed = (0..joint.len()).collect();
        MatrixGame::new(
            joint,
            allowed,
            utilities
                .into_iter()
                .map(|u| u.into_iter().map(Some).collect())
                .collect(),
        )
    }

    #[test]
    fn all_finite_sanitization_is_identity() {
        let game = full(JointSpace::new(vec![2]), vec![vec![0.0], vec![1.0]]);
        let s = sanitize_utilities(&game).unwrap();
        assert_eq!(s.utilities, vec![vec![0.0], vec![1.0]]);
    }

    #[test]
    fn replacement_value() {
        let game = MatrixGame::new(
            JointSpace::new(vec![3]),
            vec![0, 1],
            vec![vec![Some(0.0)], vec![Some(1.0)], vec![None]],
        );
        let s = sanitize_utilities(&game).unwrap();
        assert_eq!(s.utilities[2], vec![-2.0]);
    }

    #[test]
    fn row_counts() {
        let game = full(JointSpace::new(vec![2, 2]), vec![vec![0.0, 0.0]; 4]);
        let s = sanitize_utilities(&game).unwrap();
        assert_eq!(build_clp(&s, EquilibriumKind::Cce).rows.len(), 4);
        assert_eq!(build_clp(&s, EquilibriumKind::Ce).rows.len(), 4);
        let game = full(JointSpace::new(vec![3, 2]), vec![vec![0.0, 0.0]; 6]);
        let s = sanitize_utilities(&game).unwrap();
        assert_eq!(build_clp(&s, EquilibriumKind::Cce).rows.len(), 5);
        assert_eq!(build_clp(&s, EquilibriumKind::Ce).rows.len(), 8);
    }

    #[test]
    fn single_allowed_action_is_point_mass() {
        let game = MatrixGame::new(
            JointSpace::new(vec![2, 2]),
            vec![2],
            vec![
                vec![None, None],
                vec![None, None],
                vec![Some(0.0), Some(0.0)],
                vec![None, None],
            ],
        );
        for kind in [EquilibriumKind::Cce, EquilibriumKind::Ce] {
            assert_eq!(solve_stage(&game, kind).unwrap(), JointDistribution::point(2));
            let s = sanitize_utilities(&game).unwrap();
            assert_eq!(
                solve_feasibility(&build_clp(&s, kind)).unwrap(),
                JointDistribution::point(2)
            );
        }
    }

    #[test]
    fn matching_pennies_exact() {
        let u = |x: i64| vec![Some(int(x)), Some(int(-x))];
        let game = MatrixGame::new(
            JointSpace::new(vec![2, 2]),
            vec![0, 1, 2, 3],
            vec![u(1), u(-1), u(-1), u(1)],
        );
        for kind in [EquilibriumKind::Cce, EquilibriumKind::Ce] {
            let dist = solve_stage(&game, kind).unwrap();
            assert_eq!(dist.total(), int(1));
            let system = build_clp(&sanitize_utilities(&game).unwrap(), kind);
            assert!(min_row_slack(&system, &dist, 0.0).unwrap() >= 0.0);
            // Each player's marginal must be uniform.
            assert_eq!(dist.prob(0) + dist.prob(1), ratio(1, 2));
            assert_eq!(dist.prob(0) + dist.prob(2), ratio(1, 2));
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("CCE".parse::<EquilibriumKind>().unwrap(), EquilibriumKind::Cce);
        assert_eq!("ce".parse::<EquilibriumKind>().unwrap(), EquilibriumKind::Ce);
        assert!("nash".parse::<EquilibriumKind>().is_err());
    }

    #[test]
    fn renormalize_absorbs_residual() {
        let dist = renormalize(&[3, 5, 7], &[0.5 - 1e-13, 1e-14, 0.5]);
        assert_eq!(dist.entries.len(), 2);
        assert_eq!(dist.total(), 1.0);
    }
}

//! Combined verification of a solver output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;

use super::deviation::{best_feasible_deviation, DeviationReport};
use super::oracle::{brute_force_feasible_sets, compare_feasible_sets};
use super::rollout::{
    simulate_rollouts, simulate_surrogate_rollouts, LiftedController, RolloutStats, SurrogateController,
};
use crate::approximation::ApproxSolution;
use crate::config::Limits;
use crate::equilibrium::{evaluate_policy, AceSolution};
use crate::error::{Error, Result};
use crate::feasibility::{AugState, FeasibleSets};
use crate::game::Game;
use crate::rational::Rational;
use crate::reduction::ReducedGame;
use crate::scalar::Scalar;

pub const LP_TOLERANCE: f64 = 1e-9;
pub const VALUE_TOLERANCE: f64 = 1e-8;
pub const DEVIATION_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub rollouts: usize,
    pub seed: u64,
    pub limits: Limits,
    pub deviation_tolerance: f64,
    pub value_tolerance: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            rollouts: 10_000,
            seed: 42,
            limits: Limits::default(),
            deviation_tolerance: DEVIATION_TOLERANCE,
            value_tolerance: VALUE_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Match,
    Mismatch(String),
    Skipped(String),
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub oracle: OracleVerdict,
    pub rollouts: RolloutStats,
    pub deviation: DeviationReport,
    pub consistency_gap: f64,
    pub value_tolerance: f64,
    pub support_ok: bool,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        !matches!(self.oracle, OracleVerdict::Mismatch(_))
            && self.rollouts.passed()
            && self.deviation.passed()
            && self.consistency_gap <= self.value_tolerance
            && self.support_ok
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let oracle = match &self.oracle {
            OracleVerdict::Match => "PASS".to_string(),
            OracleVerdict::Mismatch(m) => format!("FAIL ({m})"),
            OracleVerdict::Skipped(why) => format!("skipped ({why})"),
        };
        writeln!(f, "feasible-set oracle: {oracle}")?;
        let overshoot: Vec<String> = self
            .rollouts
            .max_overshoot
            .iter()
            .map(crate::rational::format_rational)
            .collect();
        writeln!(
            f,
            "rollouts: {} ({} of {} violate, {} leave the feasible set, max overshoot [{}], seed {})",
            verdict(self.rollouts.passed()),
            self.rollouts.violations,
            self.rollouts.n,
            self.rollouts.off_feasible,
            overshoot.join(", "),
            self.rollouts.seed
        )?;
        writeln!(
            f,
            "deviation: {} (max gap {:.3e}, tolerance {:.0e})",
            verdict(self.deviation.passed()),
            self.deviation.max_gap,
            self.deviation.tolerance
        )?;
        writeln!(
            f,
            "value consistency: {} (max difference {:.3e})",
            verdict(self.consistency_gap <= self.value_tolerance),
            self.consistency_gap
        )?;
        write!(f, "support containment: {}", verdict(self.support_ok))
    }
}

/// Feasible sets as recorded in a reduced game.
pub fn sets_of(reduced: &ReducedGame) -> FeasibleSets {
    let layers: Vec<BTreeMap<AugState, Vec<usize>>> = (1..=reduced.horizon)
        .map(|h| {
            reduced
                .layer(h)
                .iter()
                .map(|n| (n.key.clone(), n.allowed.clone()))
                .collect()
        })
        .collect();
    let terminal: BTreeSet<AugState> = reduced.terminal().iter().cloned().collect();
    FeasibleSets::from_parts(layers, terminal)
}

fn oracle_verdict(game: &Game, sets: Option<&FeasibleSets>, limits: &Limits) -> OracleVerdict {
    if game.has_continuous_costs() {
        return OracleVerdict::Skipped("continuous costs".into());
    }
    match brute_force_feasible_sets(game, limits) {
        Ok(oracle) => match compare_feasible_sets(game, oracle.as_ref(), sets) {
            Ok(()) => OracleVerdict::Match,
            Err(m) => OracleVerdict::Mismatch(m),
        },
        Err(Error::CapExceeded(m)) => OracleVerdict::Skipped(m),
        Err(e) => OracleVerdict::Mismatch(e.to_string()),
    }
}

/// Deviation and value checks; both are reported as infinite gaps when the
/// policy plays outside the allowed sets.
fn policy_checks<T: Scalar>(
    solution: &AceSolution<T>,
    options: &CheckOptions,
    support_ok: bool,
) -> (DeviationReport, f64) {
    if !support_ok {
        let deviation = DeviationReport {
            kind: solution.kind,
            entries: Vec::new(),
            max_gap: f64::INFINITY,
            tolerance: options.deviation_tolerance,
        };
        return (deviation, f64::INFINITY);
    }
    let deviation = best_feasible_deviation(
        &solution.reduced,
        &solution.policy,
        &solution.values,
        solution.kind,
        options.deviation_tolerance,
    );
    let gap = evaluate_policy(&solution.reduced, &solution.policy).max_difference(&solution.values);
    (deviation, gap)
}

/// Oracle comparison (when small enough), rollouts, deviation check, value
/// re-evaluation and support containment for an exact solution.
pub fn check_solution<T: Scalar>(
    game: &Game,
    solution: &AceSolution<T>,
    options: &CheckOptions,
) -> Result<CheckReport> {
    let reduced = &solution.reduced;
    let sets = sets_of(reduced);
    let oracle = oracle_verdict(game, Some(&sets), &options.limits);
    let controller = LiftedController::new(reduced, &solution.policy);
    let rollouts = simulate_rollouts(
        game,
        &controller,
        options.rollouts,
        options.seed,
        vec![Rational::zero(); game.players],
    )?;
    let support_ok = solution.policy.is_subgame_feasible(reduced, LP_TOLERANCE);
    let (deviation, consistency_gap) = policy_checks(solution, options, support_ok);
    Ok(CheckReport {
        oracle,
        rollouts,
        deviation,
        consistency_gap,
        value_tolerance: options.value_tolerance,
        support_ok,
    })
}

/// Same checks for a rounded-game solution: rollouts run in the original
/// game with the surrogate tracker and may overshoot by `H ℓ_i`; the
/// oracle, deviation and value checks apply to the rounded game.
pub fn check_approx_solution<T: Scalar>(
    game: &Game,
    approx: &ApproxSolution<T>,
    options: &CheckOptions,
) -> Result<Option<CheckReport>> {
    let Some(solution) = approx.outcome.solution() else {
        return Ok(None);
    };
    let reduced = &solution.reduced;
    let sets = sets_of(reduced);
    let oracle = oracle_verdict(&approx.approx_game, Some(&sets), &options.limits);
    let spec = &approx.spec;
    let controller = SurrogateController::new(reduced, &solution.policy, spec);
    let allowance = (0..game.players).map(|i| spec.guarantee(i) - &spec.budget[i]).collect();
    let rollouts = simulate_surrogate_rollouts(game, &controller, options.rollouts, options.seed, allowance)?;
    let support_ok = solution.policy.is_subgame_feasible(reduced, LP_TOLERANCE);
    let (deviation, consistency_gap) = policy_checks(solution, options, support_ok);
    Ok(Some(CheckReport {
        oracle,
        rollouts,
        deviation,
        consistency_gap,
        value_tolerance: options.value_tolerance,
        support_ok,
    }))
}

//! Independent checks of solver output: brute-force feasible sets, seeded
//! rollouts, deviation dynamic programming and value re-evaluation.

pub mod check;
pub mod deviation;
pub mod oracle;
pub mod rollout;

pub use check::{
    check_approx_solution, check_solution, sets_of, CheckOptions, CheckReport, OracleVerdict, DEVIATION_TOLERANCE,
    LP_TOLERANCE, VALUE_TOLERANCE,
};
pub use deviation::{best_feasible_deviation, stage_deviation_gain, DeviationEntry, DeviationReport};
pub use oracle::{brute_force_feasible_sets, compare_feasible_sets, constrained_dp_optimum, OracleSets};
pub use rollout::{
    exhaustive_evaluate, rollout_rng, simulate_rollouts, simulate_surrogate_rollouts, Controller, Episode,
    ExhaustiveReport, FixedAction, LiftedController, RolloutStats, SurrogateController,
};

use ace_core::equilibrium::solve_acmg;
use ace_core::feasibility::analyze;
use ace_core::game::{parse_game, serialize_game, CostModel, CostSource, History};
use ace_core::generate::{random_game, random_matrix_game, Shape};
use ace_core::rational::ratio;
use ace_core::reduction::{invert_history, translate_history, LiftedPolicy};
use ace_core::stage_lp::{sanitize_utilities, solve_stage};
use ace_core::verify::{exhaustive_evaluate, simulate_rollouts, stage_deviation_gain, LiftedController};
use ace_core::{EquilibriumKind, Game, Limits, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = EquilibriumKind> {
    prop_oneof![Just(EquilibriumKind::Cce), Just(EquilibriumKind::Ce)]
}

fn scaled(game: &Game, factor: &Rational) -> Game {
    let mut out = game.clone();
    out.budget = game.budget.iter().map(|b| b * factor).collect();
    for cell in &mut out.dynamics {
        if let CostModel::Product(sources) = &mut cell.cost {
            for source in sources {
                if let CostSource::Finite(atoms) = source {
                    for (v, _) in atoms.iter_mut() {
                        *v = &*v * factor;
                    }
                }
            }
        }
    }
    out.cost_scale = out.compute_cost_scale();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_costs_preserves_feasible_sets_and_values(seed in 0u64..10_000, p in 1i64..9, q in 1i64..9) {
        let limits = Limits::default();
        let game = random_game(&Shape::small_pair(), seed);
        let factor = ratio(p, q);
        let other = scaled(&game, &factor);
        let a = analyze(&game, &limits).unwrap();
        let b = analyze(&other, &limits).unwrap();
        prop_assert_eq!(a.sets.as_ref().map(|s| s.sizes()), b.sets.as_ref().map(|s| s.sizes()));
        let x = solve_acmg::<Rational>(&game, EquilibriumKind::Cce, &limits).unwrap();
        let y = solve_acmg::<Rational>(&other, EquilibriumKind::Cce, &limits).unwrap();
        prop_assert_eq!(x.solution().map(|s| s.values.root().to_vec()), y.solution().map(|s| s.values.root().to_vec()));
    }

    #[test]
    fn reduced_transitions_are_distributions(seed in 0u64..10_000) {
        let game = random_game(&Shape::small_pair(), seed);
        let outcome = solve_acmg::<f64>(&game, EquilibriumKind::Cce, &Limits::default()).unwrap();
        if let Some(solution) = outcome.solution() {
            let reduced = &solution.reduced;
            for h in 1..=reduced.horizon {
                let successors = reduced.layer_len(h + 1);
                for node in reduced.layer(h) {
                    prop_assert!(!node.allowed.is_empty());
                    for row in &node.outcomes {
                        let total = row.iter().fold(Rational::zero(), |acc, (_, p)| acc + p);
                        prop_assert!(total.is_one());
                        prop_assert!(row.iter().all(|(j, p)| *j < successors && *p > Rational::zero()));
                    }
                }
            }
        }
    }

    #[test]
    fn stage_solution_stays_on_allowed_set(seed in 0u64..100_000, kind in kind_strategy()) {
        let game = random_matrix_game::<Rational>(seed);
        sanitize_utilities(&game).unwrap();
        let dist = solve_stage(&game, kind).unwrap();
        prop_assert!(dist.support().all(|a| game.is_allowed(a)));
        prop_assert!(dist.total().is_one());
        prop_assert!(stage_deviation_gain(&game, &dist, kind) <= 0.0);
    }

    #[test]
    fn history_translation_round_trips(
        start in 0usize..4,
        steps in prop::collection::vec((0usize..6, prop::collection::vec((-20i64..20, 1i64..8), 2), 0usize..4), 0..6),
    ) {
        let mut history = History::start(start);
        for (action, cost, next) in steps {
            history.push(action, cost.into_iter().map(|(p, q)| ratio(p, q)).collect(), next);
        }
        let augmented = translate_history(&history, 2);
        prop_assert_eq!(augmented.states.last().unwrap().1.clone(), history.cumulative_cost(2));
        prop_assert_eq!(invert_history(&augmented), history);
    }

    #[test]
    fn rollouts_are_reproducible(seed in 0u64..1_000, rollout_seed in any::<u64>()) {
        let game = random_game(&Shape::small_pair(), seed);
        let outcome = solve_acmg::<f64>(&game, EquilibriumKind::Ce, &Limits::default()).unwrap();
        if let Some(solution) = outcome.solution() {
            let controller = LiftedController::new(&solution.reduced, &solution.policy);
            let allowance = vec![Rational::zero(); 2];
            let a = simulate_rollouts(&game, &controller, 200, rollout_seed, allowance.clone()).unwrap();
            let b = simulate_rollouts(&game, &controller, 200, rollout_seed, allowance).unwrap();
            prop_assert_eq!(a.violations, 0);
            prop_assert_eq!(a.off_feasible, 0);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn lifted_policy_value_equals_reduced_value(seed in 0u64..10_000, kind in kind_strategy()) {
        let game = random_game(&Shape::small_pair(), seed);
        let outcome = solve_acmg::<Rational>(&game, kind, &Limits::default()).unwrap();
        if let Some(solution) = outcome.solution() {
            let lifted = LiftedPolicy::new(&solution.reduced, &solution.policy);
            let report = exhaustive_evaluate(&game, &lifted, 1_000_000).unwrap();
            prop_assert_eq!(&report.values[..], solution.values.root());
            prop_assert!(report.max_overshoot.iter().all(|o| *o <= Rational::zero()));
        }
    }

    #[test]
    fn game_documents_round_trip(seed in 0u64..10_000) {
        let game = random_game(&Shape::sevenths(), seed);
        prop_assert_eq!(parse_game(&serialize_game(&game)).unwrap(), game);
    }
}

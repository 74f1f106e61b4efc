use ace_core::approximation::{approx_solve, ApproxMode};
use ace_core::corpus;
use ace_core::equilibrium::{evaluate_policy, solve_acmg, stage_q};
use ace_core::game::{parse_game, parse_game_checked, JointSpace};
use ace_core::generate::{random_game, Shape};
use ace_core::rational::{int, ratio, to_f64};
use ace_core::reduction::AugmentedPolicy;
use ace_core::stage_lp::{solve_stage, MatrixGame};
use ace_core::verify::{
    best_feasible_deviation, constrained_dp_optimum, simulate_rollouts, simulate_surrogate_rollouts,
    stage_deviation_gain, FixedAction, SurrogateController,
};
use ace_core::{EquilibriumKind, Error, Game, Limits, Rational};
use num_traits::Zero;

const KINDS: [EquilibriumKind; 2] = [EquilibriumKind::Cce, EquilibriumKind::Ce];

fn corpus_game(name: &str) -> Game {
    corpus::instance(name).unwrap().game().unwrap()
}

fn matrix(sizes: Vec<usize>, utilities: &[[i64; 2]]) -> MatrixGame<Rational> {
    let joint = JointSpace::new(sizes);
    let allowed = (0..joint.len()).collect();
    let utilities = utilities
        .iter()
        .map(|u| u.iter().map(|x| Some(int(*x))).collect())
        .collect();
    MatrixGame::new(joint, allowed, utilities)
}

/// Plain backward induction on the original game with every action allowed.
fn unconstrained_values(game: &Game, kind: EquilibriumKind) -> Vec<Rational> {
    let joint = game.joint();
    let mut next = vec![vec![Rational::zero(); game.players]; game.num_states()];
    for h in (1..=game.horizon).rev() {
        next = (0..game.num_states())
            .map(|s| {
                let utilities: Vec<Vec<Option<Rational>>> = (0..joint.len())
                    .map(|a| {
                        let cell = game.cell(h, s, a);
                        (0..game.players)
                            .map(|i| {
                                let future = cell
                                    .next
                                    .iter()
                                    .fold(Rational::zero(), |acc, (t, p)| acc + p * &next[*t][i]);
                                Some(&cell.reward[i] + future)
                            })
                            .collect()
                    })
                    .collect();
                let stage = MatrixGame::new(joint.clone(), (0..joint.len()).collect(), utilities);
                let dist = solve_stage(&stage, kind).unwrap();
                (0..game.players)
                    .map(|i| {
                        dist.support().fold(Rational::zero(), |acc, a| {
                            acc + dist.prob(a) * stage.utilities[a][i].clone().unwrap()
                        })
                    })
                    .collect()
            })
            .collect();
    }
    next.swap_remove(game.initial_state)
}

fn uniform_policy(solution: &ace_core::ExactSolution) -> AugmentedPolicy<Rational> {
    let reduced = &solution.reduced;
    AugmentedPolicy {
        layers: (1..=reduced.horizon)
            .map(|h| {
                reduced
                    .layer(h)
                    .iter()
                    .map(|node| {
                        let p = ratio(1, node.allowed.len() as i64);
                        node.allowed.iter().map(|a| (*a, p.clone())).collect()
                    })
                    .collect()
            })
            .collect(),
    }
}

#[test]
fn unconstrained_game_matches_plain_backward_induction() {
    let limits = Limits::default();
    for seed in 0..40 {
        let mut game = random_game(&Shape::small_pair(), seed);
        let reach = int(game.horizon as i64) * int(3);
        game.budget = vec![reach; game.players];
        for kind in KINDS {
            let outcome = solve_acmg::<Rational>(&game, kind, &limits).unwrap();
            let solution = outcome.solution().expect("every policy is feasible");
            assert!(solution.reduced.layer(1)[0].allowed.len() == game.num_joint_actions());
            assert_eq!(
                solution.values.root(),
                &unconstrained_values(&game, kind)[..],
                "seed {seed}"
            );
            let report = best_feasible_deviation(&solution.reduced, &solution.policy, &solution.values, kind, 0.0);
            assert!(report.passed(), "seed {seed}: gap {}", report.max_gap);
        }
    }
}

#[test]
fn prisoners_dilemma_stage_game() {
    let game = matrix(vec![2, 2], &[[3, 3], [0, 5], [5, 0], [1, 1]]);
    for kind in KINDS {
        let dist = solve_stage(&game, kind).unwrap();
        assert!(stage_deviation_gain(&game, &dist, kind) <= 1e-9);
        assert_eq!(dist.support().collect::<Vec<_>>(), vec![3]);
    }
}

#[test]
fn matching_pennies_stage_game() {
    let game = matrix(vec![2, 2], &[[1, -1], [-1, 1], [-1, 1], [1, -1]]);
    for kind in KINDS {
        let dist = solve_stage(&game, kind).unwrap();
        assert!(stage_deviation_gain(&game, &dist, kind) <= 1e-9);
        // Any equilibrium has the game's value, zero, for both players.
        let value = |i: usize| -> Rational {
            dist.support().fold(Rational::zero(), |acc, a| {
                acc + dist.prob(a) * game.utilities[a][i].clone().unwrap()
            })
        };
        assert!(value(0).is_zero() && value(1).is_zero());
    }
    let uniform = ace_core::stage_lp::JointDistribution {
        entries: (0..4).map(|a| (a, ratio(1, 4))).collect(),
    };
    assert!(stage_deviation_gain(&game, &uniform, EquilibriumKind::Ce) <= 0.0);
}

#[test]
fn stage_values_match_direct_recomputation() {
    let limits = Limits::default();
    for seed in 0..30 {
        let game = random_game(&Shape::small_pair(), 500 + seed);
        let Some(solution) = solve_acmg::<Rational>(&game, EquilibriumKind::Ce, &limits)
            .unwrap()
            .into_solution()
        else {
            continue;
        };
        let reduced = &solution.reduced;
        for h in 1..=game.horizon {
            for (index, node) in reduced.layer(h).iter().enumerate() {
                let q = stage_q(reduced, h, index, &solution.values.values[h]);
                for a in 0..reduced.joint.len() {
                    let Some(k) = node.position(a) else {
                        assert!(q.q[a].is_none());
                        continue;
                    };
                    let expected: Vec<Rational> = (0..game.players)
                        .map(|i| {
                            node.outcomes[k].iter().fold(node.rewards[k][i].clone(), |acc, (j, p)| {
                                acc + p * &solution.values.at(h + 1, *j)[i]
                            })
                        })
                        .collect();
                    assert_eq!(q.q[a].as_ref().unwrap(), &expected);
                }
            }
        }
        assert_eq!(evaluate_policy(reduced, &solution.policy), solution.values);
    }
}

#[test]
fn solver_values_survive_reevaluation() {
    let limits = Limits::default();
    for instance in corpus::INSTANCES.iter().filter(|i| i.feasible == Some(true)) {
        let game = instance.game().unwrap();
        for kind in KINDS {
            let solution = solve_acmg::<f64>(&game, kind, &limits)
                .unwrap()
                .into_solution()
                .unwrap();
            let values = evaluate_policy(&solution.reduced, &solution.policy);
            assert!(values.max_difference(&solution.values) <= 1e-8, "{}", instance.name);
        }
    }
}

#[test]
fn infeasible_fixed_policy_is_caught() {
    // Taking every item weighs 10 against a budget of 5.
    let game = corpus_game("knapsack");
    let stats = simulate_rollouts(&game, &FixedAction(1), 1000, 42, vec![Rational::zero()]).unwrap();
    assert_eq!(stats.violations, 1000);
    assert_eq!(stats.max_overshoot, vec![int(5)]);
}

#[test]
fn uniform_policy_with_dominant_action_has_positive_gap() {
    let game = corpus_game("prisoners_dilemma");
    let solution = solve_acmg::<Rational>(&game, EquilibriumKind::Cce, &Limits::default())
        .unwrap()
        .into_solution()
        .unwrap();
    let uniform = uniform_policy(&solution);
    let values = evaluate_policy(&solution.reduced, &uniform);
    let report = best_feasible_deviation(&solution.reduced, &uniform, &values, EquilibriumKind::Cce, 1e-6);
    assert!(report.max_gap > 0.1, "gap {}", report.max_gap);
    assert!(!report.passed());
}

#[test]
fn single_player_gap_is_optimum_minus_value() {
    let limits = Limits::default();
    let mut checked = 0;
    for seed in 0..60 {
        let game = random_game(&Shape::single_agent(), 4000 + seed);
        let Some(optimum) = constrained_dp_optimum(&game, &limits).unwrap() else {
            continue;
        };
        let solution = solve_acmg::<Rational>(&game, EquilibriumKind::Cce, &limits)
            .unwrap()
            .into_solution()
            .unwrap();
        let uniform = uniform_policy(&solution);
        let values = evaluate_policy(&solution.reduced, &uniform);
        let report = best_feasible_deviation(&solution.reduced, &uniform, &values, EquilibriumKind::Cce, 1e-6);
        let root = report.entries.iter().find(|e| e.h == 1).unwrap();
        let expected = to_f64(&(&optimum - &values.root()[0]));
        assert!(
            (root.gap - expected).abs() <= 1e-9,
            "seed {}: {} vs {expected}",
            4000 + seed,
            root.gap
        );

        let own = best_feasible_deviation(
            &solution.reduced,
            &solution.policy,
            &solution.values,
            EquilibriumKind::Cce,
            1e-6,
        );
        assert!(own.passed());
        checked += 1;
    }
    assert!(checked >= 20);
}

#[test]
fn grid_games_stay_feasible_after_rounding() {
    let limits = Limits::default();
    for seed in 0..60 {
        let game = random_game(&Shape::on_grid(ratio(1, 10)), 7000 + seed);
        let exact = solve_acmg::<f64>(&game, EquilibriumKind::Cce, &limits).unwrap();
        if exact.solution().is_none() {
            continue;
        }
        for eps in [ratio(1, 2), ratio(1, 10), ratio(1, 50)] {
            let approx = approx_solve::<f64>(&game, &eps, ApproxMode::Additive, EquilibriumKind::Cce, &limits).unwrap();
            assert!(approx.outcome.solution().is_some(), "seed {}", 7000 + seed);
        }
    }
}

#[test]
fn fine_rational_costs_need_approximation() {
    let mut cells = Vec::new();
    for h in 1..=3 {
        for (x, y) in [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")] {
            let c0 = if x == "a" {
                r#"[{"value": "300001/1000003", "prob": "1/2"}, {"value": "40000/65537", "prob": "1/2"}]"#
            } else {
                r#"[{"value": 0, "prob": 1}]"#
            };
            let c1 = if y == "a" {
                r#"[{"value": "700001/999983", "prob": 1}]"#
            } else {
                r#"[{"value": 0, "prob": 1}]"#
            };
            let r0 = if x == "a" { 2 } else { 1 };
            let r1 = if y == "a" { 2 } else { 1 };
            cells.push(format!(
                r#"{{"h": {h}, "s": "s", "a": ["{x}", "{y}"], "next": {{"s": 1}}, "reward": [{r0}, {r1}], "cost": [{c0}, {c1}]}}"#
            ));
        }
    }
    let text = format!(
        r#"{{"players": 2, "states": ["s"], "initial_state": "s", "horizon": 3, "budget": [1, "3/2"],
            "actions": [["a", "b"], ["a", "b"]], "dynamics": [{}]}}"#,
        cells.join(",")
    );
    let limits = Limits::default();
    assert!(matches!(parse_game_checked(&text, &limits), Err(Error::Precision(_))));

    let game = parse_game(&text).unwrap();
    let eps = ratio(1, 10);
    let approx = approx_solve::<f64>(&game, &eps, ApproxMode::Additive, EquilibriumKind::Cce, &limits).unwrap();
    let solution = approx.outcome.solution().expect("rounded game is feasible");
    let controller = SurrogateController::new(&solution.reduced, &solution.policy, &approx.spec);
    let stats = simulate_surrogate_rollouts(&game, &controller, 10_000, 42, vec![eps.clone(); 2]).unwrap();
    assert_eq!(stats.violations, 0);
    assert!(stats.max_overshoot.iter().all(|o| *o <= eps));
}

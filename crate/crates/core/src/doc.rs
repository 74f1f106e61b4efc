//! JSON documents for solver inputs and outputs other than games.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::approximation::{build_approx_game, ApproxSolution, RoundingSpec};
use crate::config::Limits;
use crate::equilibrium::{AceSolution, AcmgOutcome, SolveMetadata, ValueTable};
use crate::error::{Error, Result};
use crate::feasibility::{analyze, AugState, FeasibilityAnalysis};
use crate::game::{Game, JointSpace, NumLit, ValidationReport, ViolationKind};
use crate::rational::{format_rational, Rational};
use crate::reduction::{build_reduced_game, AugmentedPolicy, ReducedGame};
use crate::scalar::Scalar;
use crate::stage_lp::{EquilibriumKind, JointDistribution, MatrixGame};
use crate::verify::{CheckReport, OracleVerdict};

/// Exact scalars print as `"p/q"` strings, floats as JSON numbers.
pub fn number<T: Scalar>(value: &T) -> NumLit {
    if T::EXACT {
        NumLit::from_rational(&value.to_rational())
    } else {
        serde_json::Number::from_f64(value.to_f64())
            .map(NumLit::Number)
            .unwrap_or_else(|| NumLit::Text(value.to_f64().to_string()))
    }
}

fn rationals(values: &[Rational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationDoc {
    pub kind: String,
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationDoc {
    pub valid: bool,
    pub violations: Vec<ViolationDoc>,
}

pub fn validation_doc(report: &ValidationReport) -> ValidationDoc {
    ValidationDoc {
        valid: report.valid,
        violations: report
            .violations
            .iter()
            .map(|v| ViolationDoc {
                kind: match v.kind {
                    ViolationKind::Structure => "structure",
                    ViolationKind::Probability => "probability",
                    ViolationKind::Precision => "precision",
                }
                .into(),
                location: v.location.clone(),
                message: v.message.clone(),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleStateDoc {
    pub h: usize,
    pub state: String,
    /// Cumulative cost in original units.
    pub cost: Vec<String>,
    /// Cumulative cost on the integer lattice.
    pub lattice: Vec<i64>,
    pub actions: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityDoc {
    pub feasible: bool,
    pub lattice_scale: String,
    pub precision_bits: u64,
    pub distinct_costs: usize,
    pub distinct_cost_bound: f64,
    pub or_nodes: usize,
    pub and_nodes: usize,
    pub sets: Vec<FeasibleStateDoc>,
    pub terminal: Vec<FeasibleStateDoc>,
}

fn label(joint: &JointSpace, names: &[Vec<String>], action: usize) -> Vec<String> {
    joint
        .decode(action)
        .iter()
        .enumerate()
        .map(|(i, &a)| names[i][a].clone())
        .collect()
}

pub fn feasibility_doc(analysis: &FeasibilityAnalysis, action_names: &[Vec<String>]) -> FeasibilityDoc {
    let stats = analysis.dag.stats();
    let model = &analysis.model;
    let entry = |h: usize, key: &AugState, actions: &[usize]| FeasibleStateDoc {
        h,
        state: model.state_names[key.state].clone(),
        cost: rationals(&model.from_lattice(&key.cost)),
        lattice: key.cost.clone(),
        actions: actions.iter().map(|&a| label(&model.joint, action_names, a)).collect(),
    };
    let (sets, terminal) = match &analysis.sets {
        Some(sets) => (
            (1..=model.horizon)
                .flat_map(|h| sets.layer(h).iter().map(move |(k, a)| (h, k, a)))
                .map(|(h, k, a)| entry(h, k, a))
                .collect(),
            sets.terminal()
                .iter()
                .map(|k| entry(model.horizon + 1, k, &[]))
                .collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    FeasibilityDoc {
        feasible: analysis.is_feasible(),
        lattice_scale: model.scale.to_string(),
        precision_bits: analysis.precision_bits,
        distinct_costs: stats.distinct_costs,
        distinct_cost_bound: analysis.distinct_cost_bound(),
        or_nodes: stats.or_nodes,
        and_nodes: stats.and_nodes,
        sets,
        terminal,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub action: Vec<String>,
    pub reward: Vec<NumLit>,
    pub next: BTreeMap<String, NumLit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedStateDoc {
    pub h: usize,
    pub name: String,
    pub product: bool,
    pub allowed_actions: Vec<Vec<String>>,
    pub transitions: Vec<TransitionDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedDoc {
    pub augmented: bool,
    pub players: usize,
    pub horizon: usize,
    pub actions: Vec<Vec<String>>,
    pub initial_state: String,
    pub states: Vec<ReducedStateDoc>,
    pub terminal_states: Vec<String>,
    pub non_product_states: usize,
}

pub fn reduced_doc(reduced: &ReducedGame) -> ReducedDoc {
    let mut states = Vec::new();
    for h in 1..=reduced.horizon {
        for node in reduced.layer(h) {
            let transitions = node
                .allowed
                .iter()
                .enumerate()
                .map(|(k, &a)| TransitionDoc {
                    action: reduced.action_label(a),
                    reward: node.rewards[k].iter().map(NumLit::from_rational).collect(),
                    next: node.outcomes[k]
                        .iter()
                        .map(|(j, p)| (reduced.state_name(reduced.key(h + 1, *j)), NumLit::from_rational(p)))
                        .collect(),
                })
                .collect();
            states.push(ReducedStateDoc {
                h,
                name: reduced.state_name(&node.key),
                product: node.product,
                allowed_actions: node.allowed.iter().map(|&a| reduced.action_label(a)).collect(),
                transitions,
            });
        }
    }
    ReducedDoc {
        augmented: true,
        players: reduced.players,
        horizon: reduced.horizon,
        actions: reduced.action_names.clone(),
        initial_state: reduced.state_name(reduced.key(1, 0)),
        states,
        terminal_states: reduced.terminal().iter().map(|k| reduced.state_name(k)).collect(),
        non_product_states: reduced.non_product_count(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionProbDoc {
    pub action: Vec<String>,
    pub prob: NumLit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntryDoc {
    pub h: usize,
    pub state: String,
    pub cost: Vec<String>,
    pub actions: Vec<ActionProbDoc>,
    pub value: Vec<NumLit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingsDoc {
    pub feasibility_ms: f64,
    pub solve_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetadataDoc {
    pub distinct_costs: usize,
    pub distinct_cost_bound: f64,
    pub or_nodes: usize,
    pub and_nodes: usize,
    pub precision_bits: u64,
    pub reduced_states: usize,
    pub non_product_states: usize,
    pub lattice_scale: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<TimingsDoc>,
}

impl MetadataDoc {
    pub fn new(meta: &SolveMetadata, with_timings: bool) -> Self {
        MetadataDoc {
            distinct_costs: meta.distinct_costs,
            distinct_cost_bound: meta.distinct_cost_bound,
            or_nodes: meta.or_nodes,
            and_nodes: meta.and_nodes,
            precision_bits: meta.precision_bits,
            reduced_states: meta.reduced_states,
            non_product_states: meta.non_product_states,
            lattice_scale: meta.lattice_scale.clone(),
            timings: with_timings.then_some(TimingsDoc {
                feasibility_ms: meta.timings.feasibility.as_secs_f64() * 1e3,
                solve_ms: meta.timings.solve.as_secs_f64() * 1e3,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxDoc {
    pub eps: String,
    pub mode: String,
    pub ell: Vec<String>,
    pub floor: Vec<String>,
    pub exempt: Vec<bool>,
    /// `B_i + H ℓ_i`.
    pub guarantee: Vec<String>,
    pub nominal_bound: Vec<String>,
    pub atom_counts: Vec<usize>,
    pub atom_bound: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub status: String,
    pub kind: String,
    pub concept: String,
    pub exact: bool,
    pub players: usize,
    pub horizon: usize,
    pub root_value: Option<Vec<NumLit>>,
    pub policy: Vec<PolicyEntryDoc>,
    pub metadata: MetadataDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approximation: Option<ApproxDoc>,
}

impl SolutionDoc {
    pub fn is_solved(&self) -> bool {
        self.status == "solved"
    }

    pub fn kind(&self) -> Result<EquilibriumKind> {
        self.kind.parse()
    }
}

fn policy_entries<T: Scalar>(solution: &AceSolution<T>) -> Vec<PolicyEntryDoc> {
    let reduced = &solution.reduced;
    let mut entries = Vec::new();
    for h in 1..=reduced.horizon {
        for (index, node) in reduced.layer(h).iter().enumerate() {
            entries.push(PolicyEntryDoc {
                h,
                state: reduced.state_names[node.key.state].clone(),
                cost: rationals(&reduced.cost_in_units(&node.key.cost)),
                actions: solution
                    .policy
                    .get(h, index)
                    .iter()
                    .map(|(a, p)| ActionProbDoc {
                        action: reduced.action_label(*a),
                        prob: number(p),
                    })
                    .collect(),
                value: solution.values.at(h, index).iter().map(number).collect(),
            });
        }
    }
    entries
}

pub fn solution_doc<T: Scalar>(
    outcome: &AcmgOutcome<T>,
    kind: EquilibriumKind,
    players: usize,
    horizon: usize,
    with_timings: bool,
) -> SolutionDoc {
    let (status, root_value, policy) = match outcome.solution() {
        Some(s) => (
            "solved",
            Some(s.values.root().iter().map(number).collect()),
            policy_entries(s),
        ),
        None => ("infeasible", None, Vec::new()),
    };
    SolutionDoc {
        status: status.into(),
        kind: kind.as_str().into(),
        concept: kind.concept().into(),
        exact: T::EXACT,
        players,
        horizon,
        root_value,
        policy,
        metadata: MetadataDoc::new(outcome.metadata(), with_timings),
        approximation: None,
    }
}

pub fn approx_solution_doc<T: Scalar>(
    approx: &ApproxSolution<T>,
    kind: EquilibriumKind,
    with_timings: bool,
) -> SolutionDoc {
    let game = &approx.approx_game;
    let spec = &approx.spec;
    let mut doc = solution_doc(&approx.outcome, kind, game.players, game.horizon, with_timings);
    let players = 0..game.players;
    doc.approximation = Some(ApproxDoc {
        eps: format_rational(&spec.eps),
        mode: spec.mode.as_str().into(),
        ell: rationals(&spec.ell),
        floor: rationals(&spec.floor),
        exempt: spec.exempt.clone(),
        guarantee: players.clone().map(|i| format_rational(&spec.guarantee(i))).collect(),
        nominal_bound: players
            .clone()
            .map(|i| format_rational(&spec.nominal_bound(i)))
            .collect(),
        atom_counts: approx.atom_counts.clone(),
        atom_bound: players.map(|i| format_rational(&spec.atom_bound(i))).collect(),
    });
    doc
}

/// Reads a policy and value table back from a solution document, matching
/// entries to the reduced game by `(h, state, cost)`.
pub fn policy_from_doc<T: Scalar>(
    reduced: &ReducedGame,
    doc: &SolutionDoc,
) -> Result<(AugmentedPolicy<T>, ValueTable<T>)> {
    let state_index: BTreeMap<&str, usize> = reduced
        .state_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut policy: Vec<Vec<Option<Vec<(usize, T)>>>> = (1..=reduced.horizon)
        .map(|h| vec![None; reduced.layer_len(h)])
        .collect();
    let mut values: Vec<Vec<Vec<T>>> = (1..=reduced.horizon + 1)
        .map(|h| vec![vec![T::zero(); reduced.players]; reduced.layer_len(h)])
        .collect();
    let action_index = |names: &[String]| -> Result<usize> {
        if names.len() != reduced.players {
            return Err(Error::Schema(format!("joint action {names:?} has wrong length")));
        }
        let mut profile = Vec::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            let a = reduced.action_names[i]
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Schema(format!("unknown action {name:?} for player {i}")))?;
            profile.push(a);
        }
        Ok(reduced.joint.encode(&profile))
    };
    for entry in &doc.policy {
        if entry.h == 0 || entry.h > reduced.horizon {
            return Err(Error::Schema(format!("policy entry at time {} out of range", entry.h)));
        }
        let state = *state_index
            .get(entry.state.as_str())
            .ok_or_else(|| Error::Schema(format!("unknown state {:?}", entry.state)))?;
        let cost = entry
            .cost
            .iter()
            .map(|c| crate::rational::parse_rational(c).ok_or_else(|| Error::Schema(format!("bad cost {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let lattice = reduced
            .to_lattice(&cost)
            .ok_or_else(|| Error::Schema(format!("cost {:?} is off the lattice", entry.cost)))?;
        let index = reduced.find(entry.h, &AugState::new(state, lattice)).ok_or_else(|| {
            Error::Schema(format!(
                "({}, {:?}) at time {} is not a feasible state",
                entry.state, entry.cost, entry.h
            ))
        })?;
        let mut dist = Vec::with_capacity(entry.actions.len());
        for ap in &entry.actions {
            dist.push((action_index(&ap.action)?, T::from_rational(&ap.prob.to_rational()?)));
        }
        dist.sort_by_key(|(a, _)| *a);
        policy[entry.h - 1][index] = Some(dist);
        let value: Vec<T> = entry
            .value
            .iter()
            .map(|v| v.to_rational().map(|r| T::from_rational(&r)))
            .collect::<Result<Vec<_>>>()?;
        if value.len() != reduced.players {
            return Err(Error::Schema("value vector has wrong length".into()));
        }
        values[entry.h - 1][index] = value;
    }
    let layers = policy
        .into_iter()
        .enumerate()
        .map(|(h, layer)| {
            layer
                .into_iter()
                .enumerate()
                .map(|(index, d)| {
                    d.ok_or_else(|| {
                        Error::Schema(format!(
                            "no policy entry for {} at time {}",
                            reduced.state_name(reduced.key(h + 1, index)),
                            h + 1
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((AugmentedPolicy { layers }, ValueTable { values }))
}

/// Rebuilds the solution a document describes for `game`: the reduced game
/// is recomputed and the policy and values are read from the document.
pub fn load_solution<T: Scalar>(game: &Game, doc: &SolutionDoc, limits: &Limits) -> Result<AceSolution<T>> {
    let analysis = analyze(game, limits)?;
    let sets = analysis
        .sets
        .as_ref()
        .ok_or_else(|| Error::NoSolution("the game admits no feasible policy".into()))?;
    let reduced = build_reduced_game(&analysis.model, sets, game.actions.clone());
    let (policy, values) = policy_from_doc(&reduced, doc)?;
    Ok(AceSolution {
        kind: doc.kind()?,
        reduced,
        policy,
        values,
        metadata: SolveMetadata::default(),
    })
}

/// Rebuilds a rounded-game solution from a document carrying approximation
/// settings.
pub fn load_approx_solution<T: Scalar>(game: &Game, doc: &SolutionDoc, limits: &Limits) -> Result<ApproxSolution<T>> {
    let settings = doc
        .approximation
        .as_ref()
        .ok_or_else(|| Error::Schema("document has no approximation section".into()))?;
    let eps = crate::rational::parse_rational(&settings.eps)
        .ok_or_else(|| Error::Schema(format!("bad eps {:?}", settings.eps)))?;
    let spec = RoundingSpec::new(game, &eps, settings.mode.parse()?)?;
    let (approx_game, atom_counts) = build_approx_game(game, &spec)?;
    let outcome = if doc.is_solved() {
        AcmgOutcome::Solved(Box::new(load_solution(&approx_game, doc, limits)?))
    } else {
        AcmgOutcome::Infeasible(SolveMetadata::default())
    };
    Ok(ApproxSolution {
        spec,
        approx_game,
        atom_counts,
        outcome,
    })
}

/// Matrix-game input: `utilities` lists one entry per joint action in
/// row-major order (first player slowest), `null` marking infeasible
/// entries. `allowed` defaults to the entries with utilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub actions: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed: Option<Vec<Vec<String>>>,
    pub utilities: Vec<Option<Vec<NumLit>>>,
}

pub fn parse_matrix<T: Scalar>(doc: &MatrixDoc) -> Result<MatrixGame<T>> {
    if doc.actions.is_empty() || doc.actions.iter().any(Vec::is_empty) {
        return Err(Error::Schema("every player needs at least one action".into()));
    }
    let joint = JointSpace::new(doc.actions.iter().map(Vec::len).collect());
    let expected: usize = joint.len();
    if doc.utilities.len() != expected {
        return Err(Error::Schema(format!(
            "expected {} utility entries, found {}",
            joint.len(),
            doc.utilities.len()
        )));
    }
    let n: usize = joint.players();
    let mut utilities = Vec::with_capacity(joint.len());
    for entry in &doc.utilities {
        utilities.push(match entry {
            None => vec![None; n],
            Some(values) => {
                if values.len() != n {
                    return Err(Error::Schema("utility entry has wrong length".into()));
                }
                values
                    .iter()
                    .map(|v| v.to_rational().map(|r| Some(T::from_rational(&r))))
                    .collect::<Result<Vec<_>>>()?
            }
        });
    }
    let allowed = match &doc.allowed {
        None => (0..joint.len()).filter(|&a| doc.utilities[a].is_some()).collect(),
        Some(list) => {
            let mut allowed = Vec::with_capacity(list.len());
            for names in list {
                if names.len() != n {
                    return Err(Error::Schema(format!("allowed action {names:?} has wrong length")));
                }
                let mut profile = Vec::with_capacity(n);
                for (i, name) in names.iter().enumerate() {
                    profile.push(
                        doc.actions[i]
                            .iter()
                            .position(|x| x == name)
                            .ok_or_else(|| Error::Schema(format!("unknown action {name:?}")))?,
                    );
                }
                let a = joint.encode(&profile);
                if doc.utilities[a].is_none() {
                    return Err(Error::Schema(format!("allowed action {names:?} has no utility")));
                }
                allowed.push(a);
            }
            allowed
        }
    };
    if allowed.is_empty() {
        return Err(Error::Schema("allowed set is empty".into()));
    }
    Ok(MatrixGame::new(joint, allowed, utilities))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSolutionDoc {
    pub kind: String,
    pub distribution: Vec<ActionProbDoc>,
    pub max_deviation_gain: f64,
}

pub fn stage_solution_doc<T: Scalar>(
    doc: &MatrixDoc,
    game: &MatrixGame<T>,
    dist: &JointDistribution<T>,
    kind: EquilibriumKind,
    gain: f64,
) -> StageSolutionDoc {
    StageSolutionDoc {
        kind: kind.as_str().into(),
        distribution: dist
            .entries
            .iter()
            .map(|(a, p)| ActionProbDoc {
                action: label(&game.joint, &doc.actions, *a),
                prob: number(p),
            })
            .collect(),
        max_deviation_gain: gain,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutDoc {
    pub passed: bool,
    pub n: usize,
    pub seed: u64,
    pub violations: usize,
    pub off_feasible: usize,
    pub max_overshoot: Vec<String>,
    pub allowance: Vec<String>,
    pub return_mean: Vec<f64>,
    pub return_stderr: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyDoc {
    pub passed: bool,
    /// `match`, `mismatch: ...` or `skipped: ...`.
    pub oracle: String,
    pub rollouts: RolloutDoc,
    pub deviation_passed: bool,
    /// `None` when the deviation check could not run.
    pub max_deviation_gap: Option<f64>,
    pub deviation_tolerance: f64,
    pub consistency_gap: Option<f64>,
    pub value_tolerance: f64,
    pub support_ok: bool,
}

pub fn verify_doc(report: &CheckReport) -> VerifyDoc {
    let r = &report.rollouts;
    VerifyDoc {
        passed: report.passed(),
        oracle: match &report.oracle {
            OracleVerdict::Match => "match".into(),
            OracleVerdict::Mismatch(m) => format!("mismatch: {m}"),
            OracleVerdict::Skipped(m) => format!("skipped: {m}"),
        },
        rollouts: RolloutDoc {
            passed: r.passed(),
            n: r.n,
            seed: r.seed,
            violations: r.violations,
            off_feasible: r.off_feasible,
            max_overshoot: rationals(&r.max_overshoot),
            allowance: rationals(&r.allowance),
            return_mean: r.return_mean.clone(),
            return_stderr: r.return_stderr.clone(),
        },
        deviation_passed: report.deviation.passed(),
        max_deviation_gap: Some(report.deviation.max_gap).filter(|g| g.is_finite()),
        deviation_tolerance: report.deviation.tolerance,
        consistency_gap: Some(report.consistency_gap).filter(|g| g.is_finite()),
        value_tolerance: report.value_tolerance,
        support_ok: report.support_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Limits;
    use crate::equilibrium::solve_acmg;
    use crate::game::parse_game;

    const GAME: &str = r#"{"players": 1, "states": ["s"], "initial_state": "s", "horizon": 2,
        "budget": ["1/2"], "actions": [["a", "b"]],
        "dynamics": [
          {"h": 1, "s": "s", "a": ["a"], "next": {"s": 1}, "reward": [1], "cost": [[{"value": "1/2", "prob": 1}]]},
          {"h": 1, "s": "s", "a": ["b"], "next": {"s": 1}, "reward": [0], "cost": [[{"value": 0, "prob": 1}]]},
          {"h": 2, "s": "s", "a": ["a"], "next": {"s": 1}, "reward": [1], "cost": [[{"value": "1/2", "prob": 1}]]},
          {"h": 2, "s": "s", "a": ["b"], "next": {"s": 1}, "reward": [0], "cost": [[{"value": 0, "prob": 1}]]}]}"#;

    #[test]
    fn solution_round_trips() {
        let game = parse_game(GAME).unwrap();
        let outcome = solve_acmg::<Rational>(&game, EquilibriumKind::Cce, &Limits::default()).unwrap();
        let doc = solution_doc(&outcome, EquilibriumKind::Cce, 1, 2, false);
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let back: SolutionDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        let solution = outcome.solution().unwrap();
        let (policy, values) = policy_from_doc::<Rational>(&solution.reduced, &back).unwrap();
        assert_eq!(policy, solution.policy);
        assert_eq!(values, solution.values);
        assert_eq!(doc.root_value, Some(vec![NumLit::Text("1".into())]));
        assert!(text.contains("\"1/2\""));
    }

    #[test]
    fn reduced_names_use_original_units() {
        let game = parse_game(GAME).unwrap();
        let outcome = solve_acmg::<f64>(&game, EquilibriumKind::Cce, &Limits::default()).unwrap();
        let doc = reduced_doc(&outcome.solution().unwrap().reduced);
        assert!(doc.augmented);
        assert_eq!(doc.initial_state, "(s,[0])");
        assert!(doc.terminal_states.contains(&"(s,[1/2])".to_string()));
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(serde_json::from_str::<ReducedDoc>(&text).unwrap(), doc);
    }

    #[test]
    fn matrix_defaults_allowed_to_finite_entries() {
        let doc: MatrixDoc = serde_json::from_str(r#"{"actions": [["x", "y"]], "utilities": [[1], null]}"#).unwrap();
        let game = parse_matrix::<f64>(&doc).unwrap();
        assert_eq!(game.allowed, vec![0]);
        let bad: MatrixDoc = serde_json::from_str(r#"{"actions": [["x"]], "utilities": [null]}"#).unwrap();
        assert!(parse_matrix::<f64>(&bad).is_err());
    }
}

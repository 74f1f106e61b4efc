//! The bundled instance suite and its batch runner.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::approximation::{approx_solve, ApproxMode};
use crate::config::Limits;
use crate::equilibrium::solve_acmg;
use crate::error::Result;
use crate::game::{parse_game, Game};
use crate::rational::{format_rational, ratio, Rational};
use crate::scalar::Scalar;
use crate::stage_lp::EquilibriumKind;
use crate::verify::{check_approx_solution, check_solution, CheckOptions};

#[derive(Clone, Copy, Debug)]
pub struct CorpusInstance {
    pub name: &'static str,
    pub source: &'static str,
    /// Known exact feasibility; `None` for continuous-cost instances.
    pub feasible: Option<bool>,
}

impl CorpusInstance {
    pub fn game(&self) -> Result<Game> {
        parse_game(self.source)
    }
}

macro_rules! instance {
    ($name:literal, $feasible:expr) => {
        CorpusInstance {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".json")),
            feasible: $feasible,
        }
    };
}

pub const INSTANCES: &[CorpusInstance] = &[
    instance!("minimal", Some(true)),
    instance!("dead_end", Some(true)),
    instance!("non_product", Some(true)),
    instance!("prisoners_dilemma", Some(true)),
    instance!("two_state_resource", Some(true)),
    instance!("knapsack", Some(true)),
    instance!("infeasible", Some(false)),
    instance!("three_player", Some(true)),
    instance!("fractional", Some(true)),
    instance!("stochastic_costs", Some(true)),
    instance!("uniform_costs", None),
];

pub fn instance(name: &str) -> Option<&'static CorpusInstance> {
    INSTANCES.iter().find(|i| i.name == name)
}

/// Approximation levels exercised by the corpus run.
pub fn default_eps() -> Vec<Rational> {
    vec![ratio(1, 2), ratio(1, 10), ratio(1, 50)]
}

#[derive(Clone, Debug)]
pub struct CorpusOptions {
    pub check: CheckOptions,
    pub eps: Vec<Rational>,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            check: CheckOptions::default(),
            eps: default_eps(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindResult {
    pub kind: String,
    pub check: bool,
    pub violations: usize,
    pub max_gap: f64,
    pub consistency_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxResult {
    pub eps: String,
    /// `solved` or `infeasible`.
    pub status: String,
    pub check: Option<bool>,
    pub max_overshoot: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub name: String,
    pub players: usize,
    pub horizon: usize,
    pub expected_feasible: Option<bool>,
    pub feasible: Option<bool>,
    pub distinct_costs: Option<usize>,
    pub distinct_cost_bound: Option<f64>,
    pub kinds: Vec<KindResult>,
    pub approx: Vec<ApproxResult>,
    pub passed: bool,
}

/// Solves one instance with both equilibrium kinds and every `eps`, running
/// the full verification on each solution.
pub fn run_instance<T: Scalar>(instance: &CorpusInstance, options: &CorpusOptions) -> Result<InstanceResult> {
    let game = instance.game()?;
    let limits: &Limits = &options.check.limits;
    let mut result = InstanceResult {
        name: instance.name.into(),
        players: game.players,
        horizon: game.horizon,
        expected_feasible: instance.feasible,
        feasible: None,
        distinct_costs: None,
        distinct_cost_bound: None,
        kinds: Vec::new(),
        approx: Vec::new(),
        passed: true,
    };
    if !game.has_continuous_costs() {
        for kind in [EquilibriumKind::Cce, EquilibriumKind::Ce] {
            let outcome = solve_acmg::<T>(&game, kind, limits)?;
            let meta = outcome.metadata();
            result.feasible = Some(outcome.solution().is_some());
            result.distinct_costs = Some(meta.distinct_costs);
            result.distinct_cost_bound = Some(meta.distinct_cost_bound);
            if let Some(solution) = outcome.solution() {
                let report = check_solution(&game, solution, &options.check)?;
                result.kinds.push(KindResult {
                    kind: kind.as_str().into(),
                    check: report.passed(),
                    violations: report.rollouts.violations,
                    max_gap: report.deviation.max_gap,
                    consistency_gap: report.consistency_gap,
                });
            }
        }
        result.passed &= result.feasible == instance.feasible;
        result.passed &= result.kinds.iter().all(|k| k.check);
        if let (Some(d), Some(bound)) = (result.distinct_costs, result.distinct_cost_bound) {
            result.passed &= d as f64 <= bound;
        }
    }
    for eps in &options.eps {
        let approx = approx_solve::<T>(&game, eps, ApproxMode::Additive, EquilibriumKind::Cce, limits)?;
        let report = check_approx_solution(&game, &approx, &options.check)?;
        let solved = approx.outcome.solution().is_some();
        if result.feasible == Some(true) && !solved {
            result.passed = false;
        }
        if let Some(report) = &report {
            result.passed &= report.passed();
        }
        result.approx.push(ApproxResult {
            eps: format_rational(eps),
            status: if solved { "solved" } else { "infeasible" }.into(),
            check: report.as_ref().map(|r| r.passed()),
            max_overshoot: report
                .map(|r| r.rollouts.max_overshoot.iter().map(format_rational).collect())
                .unwrap_or_default(),
        });
    }
    Ok(result)
}

pub fn run_corpus<T: Scalar>(options: &CorpusOptions) -> Result<Vec<InstanceResult>> {
    INSTANCES.iter().map(|i| run_instance::<T>(i, options)).collect()
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Fixed-width results table, one row per instance. Contains no timings.
pub fn format_table(results: &[InstanceResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>2} {:>2} {:<10} {:>12} {:<5} {:<5} {:<24} verdict",
        "instance", "n", "H", "feasible", "D_G/bound", "cce", "ce", "approx"
    );
    for r in results {
        let feasible = match r.feasible {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        let envelope = match (r.distinct_costs, r.distinct_cost_bound) {
            (Some(d), Some(b)) => format!("{d}/{b}"),
            _ => "-".into(),
        };
        let kind = |name: &str| r.kinds.iter().find(|k| k.kind == name).map_or("-", |k| mark(k.check));
        let approx: Vec<&str> = r
            .approx
            .iter()
            .map(|a| match a.check {
                Some(ok) => mark(ok),
                None => "inf",
            })
            .collect();
        let _ = writeln!(
            out,
            "{:<20} {:>2} {:>2} {:<10} {:>12} {:<5} {:<5} {:<24} {}",
            r.name,
            r.players,
            r.horizon,
            feasible,
            envelope,
            kind("cce"),
            kind("ce"),
            approx.join(","),
            mark(r.passed)
        );
    }
    let passed = results.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "{passed}/{} instances pass", results.len());
    out
}

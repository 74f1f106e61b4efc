//! `ace`: command-line front end for the anytime-constrained game solver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ace_core::approximation::{approx_solve, ApproxMode};
use ace_core::config::MAX_NODES_ENV;
use ace_core::corpus::{format_table, run_corpus, CorpusOptions};
use ace_core::doc::{
    approx_solution_doc, feasibility_doc, load_approx_solution, load_solution, parse_matrix, reduced_doc, solution_doc,
    stage_solution_doc, validation_doc, verify_doc, MatrixDoc, SolutionDoc,
};
use ace_core::equilibrium::solve_acmg;
use ace_core::feasibility::analyze;
use ace_core::game::{parse_game, parse_game_checked, parse_game_unvalidated, validate_game};
use ace_core::rational::parse_rational;
use ace_core::reduction::build_reduced_game;
use ace_core::stage_lp::solve_stage;
use ace_core::verify::{check_approx_solution, check_solution, stage_deviation_gain, CheckOptions, CheckReport};
use ace_core::{EquilibriumKind, Error, Game, Limits, Rational, Scalar};
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "ace",
    version,
    about = "Equilibria of Markov games under anytime budget constraints"
)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    /// Equilibrium kind: cce or ce.
    #[arg(long, default_value = "cce", value_parser = parse_kind)]
    kind: EquilibriumKind,

    /// Solve in exact rational arithmetic.
    #[arg(long)]
    exact: bool,

    /// Write the solution document here.
    #[arg(short, long, visible_alias = "out")]
    output: Option<PathBuf>,

    /// Include wall-clock timings in the solution document.
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a game file against the model invariants.
    Validate { game: PathBuf },

    /// Build the feasibility DAG and report the feasible sets.
    Feasibility {
        game: PathBuf,
        /// List every feasible augmented state.
        #[arg(long)]
        sets: bool,
        /// Write the feasible sets document here.
        #[arg(long)]
        dump_sets: Option<PathBuf>,
    },

    /// Write the cost-augmented reduced game.
    Reduce {
        game: PathBuf,
        #[arg(short, long, visible_alias = "out")]
        output: Option<PathBuf>,
    },

    /// Solve one action-constrained matrix game.
    StageLp {
        matrix: PathBuf,
        #[arg(long, default_value = "cce", value_parser = parse_kind)]
        kind: EquilibriumKind,
        #[arg(long)]
        exact: bool,
    },

    /// Compute a feasible Markov perfect equilibrium.
    Solve {
        game: PathBuf,
        #[command(flatten)]
        args: SolveArgs,
    },

    /// Round costs to an ε-grid and solve the rounded game.
    Approx {
        game: PathBuf,
        #[arg(long, value_parser = parse_eps)]
        eps: Rational,
        /// additive or relative.
        #[arg(long, default_value = "additive", value_parser = parse_mode)]
        mode: ApproxMode,
        #[command(flatten)]
        args: SolveArgs,
    },

    /// Check a solution document against a game.
    Verify {
        game: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        rollouts: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Read probabilities and values as exact rationals.
        #[arg(long)]
        exact: bool,
    },

    /// Run the bundled instance suite and print a results table.
    Corpus {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        rollouts: usize,
        #[arg(long)]
        exact: bool,
    },
}

/// Bad invocation: mapped to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn parse_kind(text: &str) -> Result<EquilibriumKind, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(text: &str) -> Result<ApproxMode, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

fn parse_eps(text: &str) -> Result<Rational, String> {
    match parse_rational(text) {
        Some(eps) if eps > Rational::from_integer(0.into()) => Ok(eps),
        _ => Err(format!("eps must be a positive rational, got {text:?}")),
    }
}

fn limits() -> anyhow::Result<Limits> {
    if let Ok(value) = std::env::var(MAX_NODES_ENV) {
        if value.trim().parse::<usize>().is_err() {
            return Err(Usage(format!("{MAX_NODES_ENV}={value:?} is not a node count")).into());
        }
    }
    Ok(Limits::from_env())
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())).into())
}

fn load_game(path: &Path, limits: &Limits) -> anyhow::Result<Game> {
    let text = read(path)?;
    parse_game_checked(&text, limits).with_context(|| format!("loading {}", path.display()))
}

/// Loads a game for the approximation solver, which accepts continuous costs
/// and applies the precision cap to the rounded game instead.
fn load_game_for_rounding(path: &Path) -> anyhow::Result<Game> {
    let text = read(path)?;
    parse_game(&text).with_context(|| format!("loading {}", path.display()))
}

fn write_doc<T: Serialize>(path: &Path, doc: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    fs::write(path, text + "\n").map_err(|e| Usage(format!("cannot write {}: {e}", path.display())).into())
}

fn print_json<T: Serialize>(doc: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, doc)?;
    writeln!(out)?;
    Ok(())
}

fn join(values: &[String]) -> String {
    values.join(", ")
}

fn validate(cli: &Cli, path: &Path) -> anyhow::Result<bool> {
    let text = read(path)?;
    let game = parse_game_unvalidated(&text).with_context(|| format!("loading {}", path.display()))?;
    let mut report = validate_game(&game);
    if report.valid && !game.has_continuous_costs() {
        if let Err(e) = ace_core::game::check_precision(&game, &limits()?) {
            report.valid = false;
            report.violations.push(ace_core::game::Violation {
                kind: ace_core::game::ViolationKind::Precision,
                location: "costs".into(),
                message: e.to_string(),
            });
        }
    }
    if cli.json {
        print_json(&validation_doc(&report))?;
    } else if report.valid {
        println!("valid");
    } else {
        println!("invalid");
        for v in &report.violations {
            println!("  {}: {}", v.location, v.message);
        }
    }
    Ok(report.valid)
}

fn feasibility(cli: &Cli, path: &Path, list: bool, dump: Option<&Path>) -> anyhow::Result<bool> {
    let limits = limits()?;
    let game = load_game(path, &limits)?;
    let analysis = analyze(&game, &limits)?;
    let doc = feasibility_doc(&analysis, &game.actions);
    if let Some(out) = dump {
        write_doc(out, &doc)?;
    }
    if cli.json {
        print_json(&doc)?;
        return Ok(doc.feasible);
    }
    println!("{}", if doc.feasible { "feasible" } else { "infeasible" });
    println!("lattice scale: {}", doc.lattice_scale);
    if let Some(sets) = &analysis.sets {
        let sizes: Vec<String> = sets.sizes().iter().map(usize::to_string).collect();
        println!("|FS_h|: {}", sizes.join(" "));
    }
    println!("DAG: {} OR nodes, {} AND nodes", doc.or_nodes, doc.and_nodes);
    println!(
        "distinct cumulative costs: {} (bound {})",
        doc.distinct_costs, doc.distinct_cost_bound
    );
    if list {
        for entry in &doc.sets {
            let actions: Vec<String> = entry.actions.iter().map(|a| format!("({})", join(a))).collect();
            println!(
                "  h={} ({}, [{}]): {}",
                entry.h,
                entry.state,
                join(&entry.cost),
                actions.join(" ")
            );
        }
    }
    Ok(doc.feasible)
}

fn reduce(cli: &Cli, path: &Path, output: Option<&Path>) -> anyhow::Result<bool> {
    let limits = limits()?;
    let game = load_game(path, &limits)?;
    let analysis = analyze(&game, &limits)?;
    let Some(sets) = &analysis.sets else {
        if cli.json {
            print_json(&serde_json::json!({ "status": "infeasible" }))?;
        } else {
            println!("infeasible");
        }
        return Ok(false);
    };
    let reduced = build_reduced_game(&analysis.model, sets, game.actions.clone());
    let doc = reduced_doc(&reduced);
    if let Some(out) = output {
        write_doc(out, &doc)?;
    }
    if cli.json {
        print_json(&doc)?;
    } else {
        println!(
            "reduced game: {} augmented states, {} terminal, {} with non-product allowed sets",
            doc.states.len(),
            doc.terminal_states.len(),
            doc.non_product_states
        );
    }
    Ok(true)
}

fn stage_lp<T: Scalar>(cli: &Cli, path: &Path, kind: EquilibriumKind) -> anyhow::Result<bool> {
    let text = read(path)?;
    let doc: MatrixDoc = serde_json::from_str(&text).with_context(|| format!("loading {}", path.display()))?;
    let game = parse_matrix::<T>(&doc)?;
    let dist = solve_stage(&game, kind)?;
    let gain = stage_deviation_gain(&game, &dist, kind);
    let out = stage_solution_doc(&doc, &game, &dist, kind, gain);
    if cli.json {
        print_json(&out)?;
    } else {
        println!("{} distribution:", kind.concept());
        for (entry, (_, p)) in out.distribution.iter().zip(&dist.entries) {
            println!("  ({}): {p}", join(&entry.action));
        }
        println!("max deviation gain: {gain:.3e}");
    }
    Ok(true)
}

fn print_solution(doc: &SolutionDoc) {
    if !doc.is_solved() {
        println!("infeasible");
        return;
    }
    let value = |v: &[ace_core::game::NumLit]| -> String {
        v.iter()
            .map(|x| match x {
                ace_core::game::NumLit::Text(t) => t.clone(),
                ace_core::game::NumLit::Number(n) => n.to_string(),
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!("solved ({})", doc.concept);
    if let Some(root) = &doc.root_value {
        println!("root value: [{}]", value(root));
    }
    let m = &doc.metadata;
    println!(
        "augmented states: {} ({} non-product), distinct costs {} of bound {}",
        m.reduced_states, m.non_product_states, m.distinct_costs, m.distinct_cost_bound
    );
    if let Some(t) = &m.timings {
        println!(
            "timings: feasibility {:.3} ms, solve {:.3} ms",
            t.feasibility_ms, t.solve_ms
        );
    }
    if let Some(a) = &doc.approximation {
        println!(
            "approximation: {} eps={} ell=[{}] guarantee=[{}]",
            a.mode,
            a.eps,
            join(&a.ell),
            join(&a.guarantee)
        );
    }
    for entry in &doc.policy {
        let actions: Vec<String> = entry
            .actions
            .iter()
            .map(|a| format!("({}) {}", join(&a.action), value(std::slice::from_ref(&a.prob))))
            .collect();
        println!(
            "  h={} ({}, [{}]): {}",
            entry.h,
            entry.state,
            join(&entry.cost),
            actions.join("; ")
        );
    }
}

fn emit_solution(cli: &Cli, doc: &SolutionDoc, output: Option<&Path>) -> anyhow::Result<bool> {
    if let Some(out) = output {
        write_doc(out, doc)?;
    }
    if cli.json {
        print_json(doc)?;
    } else {
        print_solution(doc);
    }
    Ok(doc.is_solved())
}

fn solve<T: Scalar>(cli: &Cli, path: &Path, args: &SolveArgs) -> anyhow::Result<bool> {
    let limits = limits()?;
    let game = load_game(path, &limits)?;
    let outcome = solve_acmg::<T>(&game, args.kind, &limits)?;
    let doc = solution_doc(&outcome, args.kind, game.players, game.horizon, args.timings);
    emit_solution(cli, &doc, args.output.as_deref())
}

fn approx<T: Scalar>(
    cli: &Cli,
    path: &Path,
    eps: &Rational,
    mode: ApproxMode,
    args: &SolveArgs,
) -> anyhow::Result<bool> {
    let limits = limits()?;
    let game = load_game_for_rounding(path)?;
    let solution = approx_solve::<T>(&game, eps, mode, args.kind, &limits)?;
    let doc = approx_solution_doc(&solution, args.kind, args.timings);
    emit_solution(cli, &doc, args.output.as_deref())
}

fn report_check(cli: &Cli, report: &CheckReport) -> anyhow::Result<bool> {
    if cli.json {
        print_json(&verify_doc(report))?;
    } else {
        println!("{report}");
        println!("{}", if report.passed() { "PASS" } else { "FAIL" });
    }
    Ok(report.passed())
}

fn verify<T: Scalar>(
    cli: &Cli,
    game_path: &Path,
    solution_path: &Path,
    rollouts: usize,
    seed: u64,
) -> anyhow::Result<bool> {
    let limits = limits()?;
    let text = read(solution_path)?;
    let doc: SolutionDoc =
        serde_json::from_str(&text).with_context(|| format!("loading {}", solution_path.display()))?;
    let game = match doc.approximation {
        Some(_) => load_game_for_rounding(game_path)?,
        None => load_game(game_path, &limits)?,
    };
    let options = CheckOptions {
        rollouts,
        seed,
        limits: limits.clone(),
        ..CheckOptions::default()
    };
    let approx = match &doc.approximation {
        Some(_) => Some(load_approx_solution::<T>(&game, &doc, &limits)?),
        None => None,
    };
    if !doc.is_solved() {
        let target = approx.as_ref().map_or(&game, |a| &a.approx_game);
        let confirmed = !analyze(target, &limits)?.is_feasible();
        if cli.json {
            print_json(&serde_json::json!({ "passed": confirmed, "status": "infeasible" }))?;
        } else if confirmed {
            println!("infeasible verdict confirmed\nPASS");
        } else {
            println!("document claims infeasible, but a feasible policy exists\nFAIL");
        }
        return Ok(confirmed);
    }
    match approx {
        Some(approx) => {
            let report = check_approx_solution(&game, &approx, &options)?
                .ok_or_else(|| anyhow!("approximate solution has no policy"))?;
            report_check(cli, &report)
        }
        None => {
            let solution = load_solution::<T>(&game, &doc, &limits)?;
            let report = check_solution(&game, &solution, &options)?;
            report_check(cli, &report)
        }
    }
}

fn corpus<T: Scalar>(cli: &Cli, seed: u64, rollouts: usize) -> anyhow::Result<bool> {
    let limits = limits()?;
    let mut options = CorpusOptions::default();
    options.check.seed = seed;
    options.check.rollouts = rollouts;
    options.check.limits = limits;
    let results = run_corpus::<T>(&options)?;
    if cli.json {
        print_json(&results)?;
    } else {
        print!("{}", format_table(&results));
    }
    Ok(results.iter().all(|r| r.passed))
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Validate { game } => validate(cli, game),
        Command::Feasibility { game, sets, dump_sets } => feasibility(cli, game, *sets, dump_sets.as_deref()),
        Command::Reduce { game, output } => reduce(cli, game, output.as_deref()),
        Command::StageLp { matrix, kind, exact } => {
            if *exact {
                stage_lp::<Rational>(cli, matrix, *kind)
            } else {
                stage_lp::<f64>(cli, matrix, *kind)
            }
        }
        Command::Solve { game, args } => {
            if args.exact {
                solve::<Rational>(cli, game, args)
            } else {
                solve::<f64>(cli, game, args)
            }
        }
        Command::Approx { game, eps, mode, args } => {
            if args.exact {
                approx::<Rational>(cli, game, eps, *mode, args)
            } else {
                approx::<f64>(cli, game, eps, *mode, args)
            }
        }
        Command::Verify {
            game,
            solution,
            rollouts,
            seed,
            exact,
        } => {
            if *exact {
                verify::<Rational>(cli, game, solution, *rollouts, *seed)
            } else {
                verify::<f64>(cli, game, solution, *rollouts, *seed)
            }
        }
        Command::Corpus { seed, rollouts, exact } => {
            if *exact {
                corpus::<Rational>(cli, *seed, *rollouts)
            } else {
                corpus::<f64>(cli, *seed, *rollouts)
            }
        }
    }
}

fn exit_code(error: &anyhow::Error) -> u8 {
    if error.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match error.downcast_ref::<Error>() {
        Some(Error::Argument(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_map_to_two() {
        assert_eq!(exit_code(&Usage("x".into()).into()), 2);
        assert_eq!(exit_code(&Error::Argument("x".into()).into()), 2);
        assert_eq!(exit_code(&Error::Schema("x".into()).into()), 1);
    }
}

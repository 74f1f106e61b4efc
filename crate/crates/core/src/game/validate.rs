use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{CostModel, CostSource, Game};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Structure,
    Probability,
    Precision,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub valid: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return write!(f, "valid");
        }
        let lines: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", lines.join("; "))
    }
}

struct Collector {
    violations: Vec<Violation>,
}

impl Collector {
    fn push(&mut self, kind: ViolationKind, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            location: location.into(),
            message: message.into(),
        });
    }

    fn distribution<'a>(&mut self, location: &str, what: &str, probs: impl Iterator<Item = &'a Rational>) {
        let mut total = Rational::zero();
        let mut count = 0;
        for p in probs {
            count += 1;
            if p.is_negative() {
                self.push(
                    ViolationKind::Probability,
                    location,
                    format!("negative {what} probability {p}"),
                );
            }
            total += p;
        }
        if count == 0 {
            self.push(
                ViolationKind::Probability,
                location,
                format!("empty {what} distribution"),
            );
        } else if total != Rational::one() {
            self.push(
                ViolationKind::Probability,
                location,
                format!("{what} probabilities sum to {total}"),
            );
        }
    }
}

fn is_on_scale(value: &Rational, scale: &num_bigint::BigInt) -> bool {
    (value * Rational::from_integer(scale.clone())).is_integer()
}

/// Lists every model invariant the game breaks.
pub fn validate_game(game: &Game) -> ValidationReport {
    let mut out = Collector { violations: Vec::new() };
    let n = game.players;
    if n == 0 {
        out.push(ViolationKind::Structure, "players", "at least one player required");
    }
    if game.horizon == 0 {
        out.push(ViolationKind::Structure, "horizon", "horizon must be at least 1");
    }
    if game.states.is_empty() {
        out.push(ViolationKind::Structure, "states", "no states");
    }
    if game.initial_state >= game.states.len() {
        out.push(ViolationKind::Structure, "initial_state", "out of range");
    }
    if game.actions.len() != n || game.actions.iter().any(Vec::is_empty) {
        out.push(
            ViolationKind::Structure,
            "actions",
            "need one nonempty action list per player",
        );
    }
    if game.budget.len() != n {
        out.push(ViolationKind::Structure, "budget", "need one budget entry per player");
    }
    if game.cost_scale <= num_bigint::BigInt::zero() {
        out.push(ViolationKind::Precision, "cost_scale", "must be a positive integer");
    }
    let expected_cells = game.horizon * game.states.len() * game.num_joint_actions();
    if game.dynamics.len() != expected_cells {
        out.push(
            ViolationKind::Structure,
            "dynamics",
            format!("expected {expected_cells} cells, found {}", game.dynamics.len()),
        );
    }
    if !out.violations.is_empty() {
        return ValidationReport {
            violations: out.violations,
            valid: false,
        };
    }

    let scale_ok = game.cost_scale > num_bigint::BigInt::zero();
    for (i, b) in game.budget.iter().enumerate() {
        if scale_ok && !is_on_scale(b, &game.cost_scale) {
            out.push(
                ViolationKind::Precision,
                format!("budget[{i}]"),
                format!("{b} is not a multiple of 1/{}", game.cost_scale),
            );
        }
    }

    let joint = game.joint();
    for h in 1..=game.horizon {
        for s in 0..game.states.len() {
            for a in 0..joint.len() {
                let cell = game.cell(h, s, a);
                let location = format!("(h={h}, s={}, a={:?})", game.states[s], game.action_label(a));
                if cell.next.iter().any(|(t, _)| *t >= game.states.len()) {
                    out.push(ViolationKind::Structure, &location, "successor state out of range");
                }
                out.distribution(&location, "transition", cell.next.iter().map(|(_, p)| p));
                if cell.reward.len() != n {
                    out.push(ViolationKind::Structure, &location, "reward vector has wrong length");
                }
                let check_value = |out: &mut Collector, v: &Rational| {
                    if scale_ok && !is_on_scale(v, &game.cost_scale) {
                        out.push(
                            ViolationKind::Precision,
                            &location,
                            format!("cost {v} is not a multiple of 1/{}", game.cost_scale),
                        );
                    }
                };
                match &cell.cost {
                    CostModel::Product(sources) => {
                        if sources.len() != n {
                            out.push(ViolationKind::Structure, &location, "cost needs one source per player");
                        }
                        for source in sources {
                            match source {
                                CostSource::Finite(atoms) => {
                                    out.distribution(&location, "cost", atoms.iter().map(|(_, p)| p));
                                    atoms.iter().for_each(|(v, _)| check_value(&mut out, v));
                                }
                                CostSource::Uniform { low, high } => {
                                    if low > high {
                                        out.push(ViolationKind::Structure, &location, "uniform cost with low > high");
                                    }
                                }
                            }
                        }
                    }
                    CostModel::Joint(atoms) => {
                        out.distribution(&location, "cost", atoms.iter().map(|a| &a.prob));
                        for atom in atoms {
                            if atom.value.len() != n {
                                out.push(ViolationKind::Structure, &location, "joint cost atom has wrong length");
                            }
                            atom.value.iter().for_each(|v| check_value(&mut out, v));
                        }
                    }
                }
            }
        }
    }

    let valid = out.violations.is_empty();
    ValidationReport {
        violations: out.violations,
        valid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::parse_game;
    use crate::rational::{int, ratio};

    fn sample() -> Game {
        parse_game(
            r#"{"players": 1, "states": ["s", "t"], "initial_state": "s", "horizon": 1,
                "budget": ["1/2"], "actions": [["x"]],
                "dynamics": [
                  {"h": 1, "s": "s", "a": ["x"], "next": {"s": "1/2", "t": "1/2"}, "reward": [0],
                   "cost": [[{"value": "1/2", "prob": 1}]]},
                  {"h": 1, "s": "t", "a": ["x"], "next": {"t": 1}, "reward": [0],
                   "cost": [[{"value": 0, "prob": 1}]]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn well_formed_game_is_valid() {
        let report = validate_game(&sample());
        assert!(report.valid);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn negative_probability_is_located() {
        let mut game = sample();
        game.dynamics[0].next = vec![(0, ratio(3, 2)), (1, ratio(-1, 2))];
        let report = validate_game(&game);
        assert!(!report.valid);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::Probability);
        assert!(report.violations[0].location.contains("h=1"));
        assert!(report.violations[0].location.contains("s=s"));
    }

    #[test]
    fn off_scale_budget_is_precision_violation() {
        let mut game = sample();
        game.budget = vec![ratio(1, 3)];
        let report = validate_game(&game);
        assert!(!report.valid);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Precision && v.location == "budget[0]"));
        game.budget = vec![int(1)];
        assert!(validate_game(&game).valid);
    }
}

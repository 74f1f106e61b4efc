//! JSON game documents.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{CostModel, CostSource, Dynamics, Game, JointCostAtom};
use crate::config::Limits;
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational};

/// A number written either as a JSON number or as a string (`"1/3"`,
/// `"0.25"`). JSON numbers are read through their decimal text, so `0.1`
/// becomes exactly `1/10`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumLit {
    Text(String),
    Number(serde_json::Number),
}

impl NumLit {
    pub fn to_rational(&self) -> Result<Rational> {
        let text = match self {
            NumLit::Text(t) => t.clone(),
            NumLit::Number(n) => n.to_string(),
        };
        parse_rational(&text).ok_or_else(|| Error::Schema(format!("not a rational number: {text:?}")))
    }

    pub fn from_rational(value: &Rational) -> Self {
        NumLit::Text(format_rational(value))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NameRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomDoc {
    pub value: NumLit,
    pub prob: NumLit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlayerCostDoc {
    Atoms(Vec<AtomDoc>),
    Uniform { uniform: [NumLit; 2] },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointAtomDoc {
    pub value: Vec<NumLit>,
    pub prob: NumLit,
}

/// A reward entry: a mean, or a finite distribution reduced to its mean.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RewardDoc {
    Mean(NumLit),
    Distribution(Vec<AtomDoc>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsDoc {
    pub h: usize,
    pub s: NameRef,
    pub a: Vec<NameRef>,
    pub next: BTreeMap<String, NumLit>,
    pub reward: Vec<RewardDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<PlayerCostDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_joint: Option<Vec<JointAtomDoc>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDoc {
    pub players: usize,
    pub states: Vec<String>,
    pub initial_state: NameRef,
    pub horizon: usize,
    pub budget: Vec<NumLit>,
    pub actions: Vec<Vec<String>>,
    pub dynamics: Vec<DynamicsDoc>,
}

fn resolve(reference: &NameRef, names: &[String], what: &str) -> Result<usize> {
    match reference {
        NameRef::Index(i) if *i < names.len() => Ok(*i),
        NameRef::Index(i) => Err(Error::Schema(format!("{what} index {i} out of range"))),
        NameRef::Name(name) => names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("unknown {what} {name:?}"))),
    }
}

fn parse_player_cost(doc: &PlayerCostDoc) -> Result<CostSource> {
    match doc {
        PlayerCostDoc::Atoms(atoms) => Ok(CostSource::Finite(
            atoms
                .iter()
                .map(|a| Ok((a.value.to_rational()?, a.prob.to_rational()?)))
                .collect::<Result<_>>()?,
        )),
        PlayerCostDoc::Uniform { uniform: [low, high] } => Ok(CostSource::Uniform {
            low: low.to_rational()?,
            high: high.to_rational()?,
        }),
    }
}

fn parse_reward(doc: &RewardDoc) -> Result<Rational> {
    match doc {
        RewardDoc::Mean(v) => v.to_rational(),
        RewardDoc::Distribution(atoms) => {
            let mut mean = Rational::zero();
            let mut mass = Rational::zero();
            for atom in atoms {
                let p = atom.prob.to_rational()?;
                mean += atom.value.to_rational()? * &p;
                mass += p;
            }
            if mass != Rational::one() {
                return Err(Error::Schema("reward distribution does not sum to 1".into()));
            }
            Ok(mean)
        }
    }
}

fn from_document(doc: &GameDoc) -> Result<Game> {
    if doc.players == 0 {
        return Err(Error::Schema("players must be at least 1".into()));
    }
    if doc.horizon == 0 {
        return Err(Error::Schema("horizon must be at least 1".into()));
    }
    if doc.states.is_empty() {
        return Err(Error::Schema("states must be nonempty".into()));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = doc.states.iter().find(|s| !seen.insert(s.as_str())) {
        return Err(Error::Schema(format!("duplicate state name {dup:?}")));
    }
    if doc.actions.len() != doc.players {
        return Err(Error::Schema(format!(
            "expected {} action lists, found {}",
            doc.players,
            doc.actions.len()
        )));
    }
    if let Some(i) = doc.actions.iter().position(Vec::is_empty) {
        return Err(Error::Schema(format!("player {i} has no actions")));
    }
    if doc.budget.len() != doc.players {
        return Err(Error::Schema(format!(
            "expected {} budget entries, found {}",
            doc.players,
            doc.budget.len()
        )));
    }
    let initial_state = resolve(&doc.initial_state, &doc.states, "state")?;
    let budget = doc.budget.iter().map(NumLit::to_rational).collect::<Result<Vec<_>>>()?;

    let mut game = Game {
        players: doc.players,
        states: doc.states.clone(),
        initial_state,
        horizon: doc.horizon,
        budget,
        actions: doc.actions.clone(),
        dynamics: Vec::new(),
        cost_scale: BigInt::one(),
    };
    let joint = game.joint();
    let total = doc.horizon * doc.states.len() * joint.len();
    let mut cells: Vec<Option<Dynamics>> = vec![None; total];

    for entry in &doc.dynamics {
        if entry.h == 0 || entry.h > doc.horizon {
            return Err(Error::Schema(format!("dynamics time {} out of range", entry.h)));
        }
        let state = resolve(&entry.s, &doc.states, "state")?;
        if entry.a.len() != doc.players {
            return Err(Error::Schema(format!(
                "joint action at h={} s={} has {} components",
                entry.h,
                doc.states[state],
                entry.a.len()
            )));
        }
        let profile = entry
            .a
            .iter()
            .enumerate()
            .map(|(i, r)| resolve(r, &doc.actions[i], "action"))
            .collect::<Result<Vec<_>>>()?;
        let action = joint.encode(&profile);
        let location = format!(
            "h={} s={} a={:?}",
            entry.h,
            doc.states[state],
            game.action_label(action)
        );

        let mut next = Vec::with_capacity(entry.next.len());
        for (name, prob) in &entry.next {
            let target = resolve(&NameRef::Name(name.clone()), &doc.states, "state")?;
            next.push((target, prob.to_rational()?));
        }
        next.sort_by_key(|(s, _)| *s);

        let reward = entry.reward.iter().map(parse_reward).collect::<Result<Vec<_>>>()?;
        let cost = match (&entry.cost, &entry.cost_joint) {
            (Some(per_player), None) => {
                CostModel::Product(per_player.iter().map(parse_player_cost).collect::<Result<Vec<_>>>()?)
            }
            (None, Some(atoms)) => CostModel::Joint(
                atoms
                    .iter()
                    .map(|a| {
                        Ok(JointCostAtom {
                            value: a.value.iter().map(NumLit::to_rational).collect::<Result<_>>()?,
                            prob: a.prob.to_rational()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            (Some(_), Some(_)) => return Err(Error::Schema(format!("{location}: both cost and cost_joint given"))),
            (None, None) => return Err(Error::Schema(format!("{location}: missing cost"))),
        };

        let index = game.cell_index(entry.h, state, action);
        if cells[index].is_some() {
            return Err(Error::Schema(format!("{location}: duplicate dynamics entry")));
        }
        cells[index] = Some(Dynamics { next, reward, cost });
    }

    let mut dynamics = Vec::with_capacity(total);
    for (index, cell) in cells.into_iter().enumerate() {
        match cell {
            Some(cell) => dynamics.push(cell),
            None => {
                let a = index % joint.len();
                let s = (index / joint.len()) % doc.states.len();
                let h = index / (joint.len() * doc.states.len()) + 1;
                return Err(Error::Schema(format!(
                    "missing dynamics entry h={} s={} a={:?}",
                    h,
                    doc.states[s],
                    game.action_label(a)
                )));
            }
        }
    }
    game.dynamics = dynamics;
    game.cost_scale = game.compute_cost_scale();
    Ok(game)
}

/// Parses a game document without checking model invariants.
pub fn parse_game_unvalidated(text: &str) -> Result<Game> {
    let doc: GameDoc =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("malformed game document: {e}")))?;
    from_document(&doc)
}

/// Parses and validates a game document. Invariant violations are reported
/// as schema errors. No precision cap is applied; see
/// [`parse_game_checked`].
pub fn parse_game(text: &str) -> Result<Game> {
    let game = parse_game_unvalidated(text)?;
    let report = super::validate_game(&game);
    if !report.valid {
        return Err(Error::Schema(report.to_string()));
    }
    Ok(game)
}

/// [`parse_game`] followed by the lattice precision cap.
pub fn parse_game_checked(text: &str, limits: &Limits) -> Result<Game> {
    let game = parse_game(text)?;
    super::check_precision(&game, limits)?;
    Ok(game)
}

fn atoms_doc(atoms: &[(Rational, Rational)]) -> Vec<AtomDoc> {
    atoms
        .iter()
        .map(|(v, p)| AtomDoc {
            value: NumLit::from_rational(v),
            prob: NumLit::from_rational(p),
        })
        .collect()
}

pub fn to_document(game: &Game) -> GameDoc {
    let joint = game.joint();
    let mut dynamics = Vec::with_capacity(game.dynamics.len());
    for h in 1..=game.horizon {
        for s in 0..game.num_states() {
            for a in 0..joint.len() {
                let cell = game.cell(h, s, a);
                let (cost, cost_joint) = match &cell.cost {
                    CostModel::Product(sources) => (
                        Some(
                            sources
                                .iter()
                                .map(|source| match source {
                                    CostSource::Finite(atoms) => PlayerCostDoc::Atoms(atoms_doc(atoms)),
                                    CostSource::Uniform { low, high } => PlayerCostDoc::Uniform {
                                        uniform: [NumLit::from_rational(low), NumLit::from_rational(high)],
                                    },
                                })
                                .collect(),
                        ),
                        None,
                    ),
                    CostModel::Joint(atoms) => (
                        None,
                        Some(
                            atoms
                                .iter()
                                .map(|atom| JointAtomDoc {
                                    value: atom.value.iter().map(NumLit::from_rational).collect(),
                                    prob: NumLit::from_rational(&atom.prob),
                                })
                                .collect(),
                        ),
                    ),
                };
                dynamics.push(DynamicsDoc {
                    h,
                    s: NameRef::Name(game.states[s].clone()),
                    a: game.action_label(a).into_iter().map(NameRef::Name).collect(),
                    next: cell
                        .next
                        .iter()
                        .map(|(t, p)| (game.states[*t].clone(), NumLit::from_rational(p)))
                        .collect(),
                    reward: cell
                        .reward
                        .iter()
                        .map(|r| RewardDoc::Mean(NumLit::from_rational(r)))
                        .collect(),
                    cost,
                    cost_joint,
                });
            }
        }
    }
    GameDoc {
        players: game.players,
        states: game.states.clone(),
        initial_state: NameRef::Name(game.states[game.initial_state].clone()),
        horizon: game.horizon,
        budget: game.budget.iter().map(NumLit::from_rational).collect(),
        actions: game.actions.clone(),
        dynamics,
    }
}

pub fn serialize_game(game: &Game) -> String {
    serde_json::to_string_pretty(&to_document(game)).expect("game documents always serialize")
}

//! Brute-force references computed straight from the game description, in
//! exact rationals and without the cost lattice.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;

use crate::config::Limits;
use crate::error::{Error, Result};
use crate::feasibility::{AugState, FeasibleSets};
use crate::game::Game;
use crate::rational::Rational;

type Key = (usize, usize, Vec<Rational>);

/// Feasible sets with cumulative costs in original units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSets {
    /// `layers[h - 1]`: `(s, c̄) -> allowed joint actions` for `h = 1..=H`.
    pub layers: Vec<BTreeMap<(usize, Vec<Rational>), BTreeSet<usize>>>,
    pub terminal: BTreeSet<(usize, Vec<Rational>)>,
}

struct Recursion<'a> {
    game: &'a Game,
    support: Vec<Vec<(Vec<Rational>, Rational)>>,
    memo: HashMap<Key, bool>,
    cap: u64,
}

impl Recursion<'_> {
    fn support(&self, h: usize, s: usize, a: usize) -> &[(Vec<Rational>, Rational)] {
        &self.support[self.game.cell_index(h, s, a)]
    }

    /// Whether action `a` at `(h, s, c̄)` keeps every outcome within budget
    /// and leads only to states from which the game can be finished.
    fn action_ok(&mut self, h: usize, s: usize, cost: &[Rational], a: usize) -> Result<bool> {
        let outcomes: Vec<Vec<Rational>> = self
            .support(h, s, a)
            .iter()
            .map(|(c, _)| cost.iter().zip(c).map(|(x, y)| x + y).collect())
            .collect();
        let within = outcomes
            .iter()
            .all(|total: &Vec<Rational>| total.iter().zip(&self.game.budget).all(|(t, b)| t <= b));
        if !within {
            return Ok(false);
        }
        let successors: Vec<usize> = self
            .game
            .cell(h, s, a)
            .next
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(t, _)| *t)
            .collect();
        for total in &outcomes {
            for &t in &successors {
                if !self.good(h + 1, t, total)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn good(&mut self, h: usize, s: usize, cost: &[Rational]) -> Result<bool> {
        if h > self.game.horizon {
            return Ok(true);
        }
        let key = (h, s, cost.to_vec());
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        if (self.memo.len() as u64 + 1) * self.game.num_joint_actions() as u64 > self.cap {
            return Err(Error::CapExceeded(format!(
                "brute-force oracle exceeds {} state-action evaluations",
                self.cap
            )));
        }
        let mut result = false;
        for a in 0..self.game.num_joint_actions() {
            if self.action_ok(h, s, cost, a)? {
                result = true;
                break;
            }
        }
        self.memo.insert(key, result);
        Ok(result)
    }
}

/// Recomputes the feasible sets by memoized recursion on `(h, s, c̄)`.
/// `Ok(None)` means no feasible policy exists.
pub fn brute_force_feasible_sets(game: &Game, limits: &Limits) -> Result<Option<OracleSets>> {
    let mut support = Vec::with_capacity(game.dynamics.len());
    for cell in &game.dynamics {
        support.push(
            cell.cost
                .joint_support()
                .ok_or_else(|| Error::Unsupported("oracle needs finite costs".into()))?,
        );
    }
    let mut rec = Recursion {
        game,
        support,
        memo: HashMap::new(),
        cap: limits.oracle_cap,
    };
    let root = (game.initial_state, vec![Rational::zero(); game.players]);
    if !rec.good(1, root.0, &root.1)? {
        return Ok(None);
    }

    let mut frontier: BTreeSet<(usize, Vec<Rational>)> = BTreeSet::from([root]);
    let mut layers = Vec::with_capacity(game.horizon);
    for h in 1..=game.horizon {
        let mut layer = BTreeMap::new();
        let mut next = BTreeSet::new();
        for (s, cost) in &frontier {
            let mut allowed = BTreeSet::new();
            for a in 0..game.num_joint_actions() {
                if rec.action_ok(h, *s, cost, a)? {
                    allowed.insert(a);
                    let costs: Vec<Vec<Rational>> = rec.support(h, *s, a).iter().map(|(c, _)| c.clone()).collect();
                    for (t, p) in &game.cell(h, *s, a).next {
                        if p.is_zero() {
                            continue;
                        }
                        for c in &costs {
                            next.insert((*t, cost.iter().zip(c).map(|(x, y)| x + y).collect()));
                        }
                    }
                }
            }
            layer.insert((*s, cost.clone()), allowed);
        }
        layers.push(layer);
        frontier = next;
    }
    Ok(Some(OracleSets {
        layers,
        terminal: frontier,
    }))
}

fn to_aug(state: usize, cost: &[Rational], game: &Game) -> Option<AugState> {
    let scale = Rational::from_integer(game.cost_scale.clone());
    let lattice: Option<Vec<i64>> = cost.iter().map(|c| crate::rational::to_i64(&(c * &scale))).collect();
    Some(AugState::new(state, lattice?))
}

/// `Ok(())` when the oracle and the pipeline agree exactly, otherwise a
/// description of the first difference.
pub fn compare_feasible_sets(
    game: &Game,
    oracle: Option<&OracleSets>,
    sets: Option<&FeasibleSets>,
) -> Result<(), String> {
    let (oracle, sets) = match (oracle, sets) {
        (None, None) => return Ok(()),
        (Some(_), None) => return Err("pipeline reports infeasible, oracle finds a feasible policy".into()),
        (None, Some(_)) => return Err("pipeline finds feasible sets, oracle reports infeasible".into()),
        (Some(o), Some(s)) => (o, s),
    };
    for h in 1..=game.horizon {
        let expected: BTreeMap<AugState, Vec<usize>> = oracle.layers[h - 1]
            .iter()
            .map(|((s, c), actions)| {
                let key = to_aug(*s, c, game).ok_or_else(|| format!("cost {c:?} off the lattice"))?;
                Ok((key, actions.iter().copied().collect()))
            })
            .collect::<Result<_, String>>()?;
        if &expected != sets.layer(h) {
            return Err(format!("feasible sets differ at time {h}"));
        }
    }
    let expected: BTreeSet<AugState> = oracle
        .terminal
        .iter()
        .map(|(s, c)| to_aug(*s, c, game).ok_or_else(|| format!("cost {c:?} off the lattice")))
        .collect::<Result<_, String>>()?;
    if &expected != sets.terminal() {
        return Err(format!("feasible sets differ at time {}", game.horizon + 1));
    }
    Ok(())
}

/// Optimal expected return of a one-player game under the anytime
/// constraint, by exhaustive recursion. `Ok(None)` when infeasible.
pub fn constrained_dp_optimum(game: &Game, limits: &Limits) -> Result<Option<Rational>> {
    if game.players != 1 {
        return Err(Error::Argument("constrained DP oracle is single-agent".into()));
    }
    let mut support = Vec::with_capacity(game.dynamics.len());
    for cell in &game.dynamics {
        support.push(
            cell.cost
                .joint_support()
                .ok_or_else(|| Error::Unsupported("oracle needs finite costs".into()))?,
        );
    }

    struct Dp<'a> {
        game: &'a Game,
        support: Vec<Vec<(Vec<Rational>, Rational)>>,
        memo: HashMap<(usize, usize, Rational), Option<Rational>>,
        cap: u64,
    }

    impl Dp<'_> {
        fn best(&mut self, h: usize, s: usize, spent: &Rational) -> Result<Option<Rational>> {
            if h > self.game.horizon {
                return Ok(Some(Rational::zero()));
            }
            let key = (h, s, spent.clone());
            if let Some(v) = self.memo.get(&key) {
                return Ok(v.clone());
            }
            if (self.memo.len() as u64 + 1) * self.game.num_joint_actions() as u64 > self.cap {
                return Err(Error::CapExceeded("constrained DP oracle".into()));
            }
            let mut best: Option<Rational> = None;
            'actions: for a in 0..self.game.num_joint_actions() {
                let cell_index = self.game.cell_index(h, s, a);
                let costs = self.support[cell_index].clone();
                if costs.iter().any(|(c, _)| spent + &c[0] > self.game.budget[0]) {
                    continue;
                }
                let cell = &self.game.dynamics[cell_index];
                let mut value = cell.reward[0].clone();
                let next = cell.next.clone();
                for (t, p) in &next {
                    if p.is_zero() {
                        continue;
                    }
                    for (c, q) in &costs {
                        match self.best(h + 1, *t, &(spent + &c[0]))? {
                            Some(v) => value += p * q * v,
                            None => continue 'actions,
                        }
                    }
                }
                if best.as_ref().is_none_or(|b| value > *b) {
                    best = Some(value);
                }
            }
            self.memo.insert(key, best.clone());
            Ok(best)
        }
    }

    let mut dp = Dp {
        game,
        support,
        memo: HashMap::new(),
        cap: limits.oracle_cap,
    };
    dp.best(1, game.initial_state, &Rational::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::analyze;
    use crate::game::parse_game;
    use crate::rational::int;

    fn chain(budget: i64) -> Game {
        let mut dynamics = Vec::new();
        for h in 1..=2 {
            for (a, cost, reward) in [("cheap", 1, 1), ("dear", 2, 3)] {
                dynamics.push(format!(
                    r#"{{"h": {h}, "s": "s", "a": ["{a}"], "next": {{"s": 1}}, "reward": [{reward}],
                        "cost": [[{{"value": {cost}, "prob": 1}}]]}}"#
                ));
            }
        }
        parse_game(&format!(
            r#"{{"players": 1, "states": ["s"], "initial_state": "s", "horizon": 2,
                "budget": [{budget}], "actions": [["cheap", "dear"]], "dynamics": [{}]}}"#,
            dynamics.join(",")
        ))
        .unwrap()
    }

    #[test]
    fn agrees_with_pipeline_on_dead_end_chain() {
        for budget in [0, 1, 2, 3, 4, 10] {
            let game = chain(budget);
            let oracle = brute_force_feasible_sets(&game, &Limits::default()).unwrap();
            let analysis = analyze(&game, &Limits::default()).unwrap();
            compare_feasible_sets(&game, oracle.as_ref(), analysis.sets.as_ref()).unwrap();
        }
    }

    #[test]
    fn infeasible_both_ways() {
        let game = chain(1);
        assert!(brute_force_feasible_sets(&game, &Limits::default()).unwrap().is_none());
        assert_eq!(constrained_dp_optimum(&game, &Limits::default()).unwrap(), None);
    }

    #[test]
    fn dp_optimum_by_hand() {
        assert_eq!(
            constrained_dp_optimum(&chain(3), &Limits::default()).unwrap(),
            Some(int(4))
        );
        assert_eq!(
            constrained_dp_optimum(&chain(4), &Limits::default()).unwrap(),
            Some(int(6))
        );
        assert_eq!(
            constrained_dp_optimum(&chain(2), &Limits::default()).unwrap(),
            Some(int(2))
        );
    }

    #[test]
    fn cap_is_enforced() {
        let limits = Limits {
            oracle_cap: 1,
            ..Limits::default()
        };
        assert!(matches!(
            brute_force_feasible_sets(&chain(4), &limits),
            Err(Error::CapExceeded(_))
        ));
    }
}

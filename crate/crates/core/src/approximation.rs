//! Cost rounding onto an `ℓ`-grid with truncation, the rounded game, and
//! the approximate solver built on it.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::config::Limits;
use crate::equilibrium::{solve_acmg, AcmgOutcome};
use crate::error::{Error, Result};
use crate::game::{CostModel, CostSource, Game};
use crate::rational::{floor_to_multiple, format_rational, Rational};
use crate::scalar::Scalar;
use crate::stage_lp::EquilibriumKind;

/// Denominator cap for snapped grid widths.
const GRID_DENOMINATOR: i64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ApproxMode {
    Additive,
    Relative,
}

impl ApproxMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ApproxMode::Additive => "additive",
            ApproxMode::Relative => "relative",
        }
    }
}

impl fmt::Display for ApproxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ApproxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "additive" => Ok(ApproxMode::Additive),
            "relative" => Ok(ApproxMode::Relative),
            other => Err(Error::Argument(format!("unknown approximation mode {other:?}"))),
        }
    }
}

/// `⌊c / ℓ⌋ · ℓ`.
pub fn round_down(cost: &Rational, ell: &Rational) -> Rational {
    floor_to_multiple(cost, ell)
}

/// `ell` itself when its denominator is at most `2^20`; otherwise the
/// largest dyadic value `<= ell` with denominator `2^20` (or a larger power
/// of two when `ell` is tiny).
pub fn snap_grid(ell: &Rational) -> Rational {
    if ell.denom() <= &BigInt::from(GRID_DENOMINATOR) {
        return ell.clone();
    }
    let mut denom = GRID_DENOMINATOR;
    loop {
        let d = Rational::from_integer(BigInt::from(denom));
        let snapped = (ell * &d).floor() / d;
        if snapped.is_positive() {
            return snapped;
        }
        denom = denom.saturating_mul(1 << 10);
    }
}

/// Grid width for one player: `ε / H` (additive) or `ε |B| / H` (relative),
/// snapped down to a small denominator.
pub fn choose_ell(eps: &Rational, mode: ApproxMode, budget: &Rational, horizon: usize) -> Result<Rational> {
    if !eps.is_positive() {
        return Err(Error::Argument("epsilon must be positive".into()));
    }
    let h = Rational::from_integer(BigInt::from(horizon));
    let ell = match mode {
        ApproxMode::Additive => eps / h,
        ApproxMode::Relative => {
            if budget.is_zero() {
                return Err(Error::Argument("relative mode needs a nonzero budget".into()));
            }
            eps * budget.abs() / h
        }
    };
    Ok(snap_grid(&ell))
}

/// Grid, truncation floor and exemptions for every player.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingSpec {
    pub mode: ApproxMode,
    pub eps: Rational,
    pub horizon: usize,
    pub budget: Vec<Rational>,
    pub max_cost: Vec<Rational>,
    pub ell: Vec<Rational>,
    /// `B_i - H · c_i^max`.
    pub floor: Vec<Rational>,
    /// Players whose constraint no policy can break.
    pub exempt: Vec<bool>,
}

impl RoundingSpec {
    pub fn new(game: &Game, eps: &Rational, mode: ApproxMode) -> Result<Self> {
        if game.has_joint_costs() {
            return Err(Error::Unsupported(
                "approximation needs per-player product costs".into(),
            ));
        }
        let h = Rational::from_integer(BigInt::from(game.horizon));
        let max_cost: Vec<Rational> = game
            .max_costs()
            .into_iter()
            .map(|m| m.unwrap_or_else(Rational::zero))
            .collect();
        let mut ell = Vec::with_capacity(game.players);
        let mut floor = Vec::with_capacity(game.players);
        let mut exempt = Vec::with_capacity(game.players);
        for i in 0..game.players {
            let b = &game.budget[i];
            let cmax = &max_cost[i];
            let reach = std::cmp::max(cmax.clone(), cmax * &h);
            let vacuous = *b >= reach;
            exempt.push(vacuous);
            ell.push(if vacuous {
                choose_ell(eps, ApproxMode::Additive, b, game.horizon)?
            } else {
                choose_ell(eps, mode, b, game.horizon)?
            });
            floor.push(b - cmax * &h);
        }
        Ok(RoundingSpec {
            mode,
            eps: eps.clone(),
            horizon: game.horizon,
            budget: game.budget.clone(),
            max_cost,
            ell,
            floor,
            exempt,
        })
    }

    /// Rounded cost of player `i`: `max(⌊c⌋_ℓ, ⌊floor⌋_ℓ)`, or zero when exempt.
    pub fn round_cost(&self, player: usize, cost: &Rational) -> Rational {
        if self.exempt[player] {
            return Rational::zero();
        }
        let ell = &self.ell[player];
        std::cmp::max(round_down(cost, ell), round_down(&self.floor[player], ell))
    }

    /// Budget of the rounded game.
    pub fn approx_budget(&self, player: usize) -> Rational {
        if self.exempt[player] {
            Rational::zero()
        } else {
            round_down(&self.budget[player], &self.ell[player])
        }
    }

    /// Largest cumulative cost a policy of the rounded game can reach in the
    /// original game: `B_i + H ℓ_i` (`B_i` when exempt).
    pub fn guarantee(&self, player: usize) -> Rational {
        if self.exempt[player] {
            return self.budget[player].clone();
        }
        &self.budget[player] + Rational::from_integer(BigInt::from(self.horizon)) * &self.ell[player]
    }

    /// Nominal bound `B + ε` or `B + ε|B|`.
    pub fn nominal_bound(&self, player: usize) -> Rational {
        match self.mode {
            ApproxMode::Additive => &self.budget[player] + &self.eps,
            ApproxMode::Relative => &self.budget[player] + &self.eps * self.budget[player].abs(),
        }
    }

    /// `(c^max (H + 1) - B) / ℓ + 2`.
    pub fn atom_bound(&self, player: usize) -> Rational {
        let h1 = Rational::from_integer(BigInt::from(self.horizon + 1));
        (&self.max_cost[player] * h1 - &self.budget[player]) / &self.ell[player]
            + Rational::from_integer(BigInt::from(2))
    }
}

/// Rounded atoms of one cost source, ascending with positive mass.
pub fn round_source(source: &CostSource, spec: &RoundingSpec, player: usize) -> Vec<(Rational, Rational)> {
    if spec.exempt[player] {
        return vec![(Rational::zero(), Rational::one())];
    }
    let mut atoms: Vec<(Rational, Rational)> = Vec::new();
    match source {
        CostSource::Finite(values) => {
            for (v, p) in values.iter().filter(|(_, p)| p.is_positive()) {
                atoms.push((spec.round_cost(player, v), p.clone()));
            }
        }
        CostSource::Uniform { low, high } => {
            let ell = &spec.ell[player];
            let lowest = spec.round_cost(player, low);
            let highest = spec.round_cost(player, high);
            let mut grid = lowest.clone();
            while grid <= highest {
                let upper = &grid + ell;
                let below_upper = if grid == highest {
                    Rational::one()
                } else {
                    source.cdf_below(&upper)
                };
                let below_grid = if grid == lowest {
                    Rational::zero()
                } else {
                    source.cdf_below(&grid)
                };
                atoms.push((grid.clone(), below_upper - below_grid));
                grid = upper;
            }
        }
    }
    atoms.sort();
    let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match merged.last_mut() {
            Some((last, mass)) if *last == v => *mass += p,
            _ => merged.push((v, p)),
        }
    }
    merged.retain(|(_, p)| p.is_positive());
    merged
}

/// The rounded game `Ĝ` together with the largest per-player atom count.
pub fn build_approx_game(game: &Game, spec: &RoundingSpec) -> Result<(Game, Vec<usize>)> {
    let mut approx = game.clone();
    let mut atom_counts = vec![0usize; game.players];
    for cell in &mut approx.dynamics {
        let CostModel::Product(sources) = &cell.cost else {
            return Err(Error::Unsupported(
                "approximation needs per-player product costs".into(),
            ));
        };
        let rounded: Vec<CostSource> = sources
            .iter()
            .enumerate()
            .map(|(i, source)| {
                let atoms = round_source(source, spec, i);
                atom_counts[i] = atom_counts[i].max(atoms.len());
                CostSource::Finite(atoms)
            })
            .collect();
        cell.cost = CostModel::Product(rounded);
    }
    approx.budget = (0..game.players).map(|i| spec.approx_budget(i)).collect();
    approx.cost_scale = BigInt::one();
    approx.cost_scale = approx.compute_cost_scale();
    Ok((approx, atom_counts))
}

#[derive(Clone, Debug)]
pub struct ApproxSolution<T> {
    pub spec: RoundingSpec,
    pub approx_game: Game,
    pub atom_counts: Vec<usize>,
    pub outcome: AcmgOutcome<T>,
}

impl<T> ApproxSolution<T> {
    pub fn summary(&self) -> String {
        let ell: Vec<String> = self.spec.ell.iter().map(format_rational).collect();
        format!(
            "{} eps={} ell=[{}]",
            self.spec.mode,
            format_rational(&self.spec.eps),
            ell.join(",")
        )
    }
}

/// Rounds costs, then solves the rounded game exactly.
pub fn approx_solve<T: Scalar>(
    game: &Game,
    eps: &Rational,
    mode: ApproxMode,
    kind: EquilibriumKind,
    limits: &Limits,
) -> Result<ApproxSolution<T>> {
    let spec = RoundingSpec::new(game, eps, mode)?;
    let (approx_game, atom_counts) = build_approx_game(game, &spec)?;
    let outcome = solve_acmg(&approx_game, kind, limits)?;
    Ok(ApproxSolution {
        spec,
        approx_game,
        atom_counts,
        outcome,
    })
}

/// Running original and rounded cumulative costs along one rollout, with the
/// per-step bound check between them.
#[derive(Clone, Debug)]
pub struct SurrogateTracker<'a> {
    spec: &'a RoundingSpec,
    /// Time index of the current state.
    pub h: usize,
    pub actual: Vec<Rational>,
    pub surrogate: Vec<Rational>,
}

impl<'a> SurrogateTracker<'a> {
    pub fn new(spec: &'a RoundingSpec) -> Self {
        let n = spec.budget.len();
        SurrogateTracker {
            spec,
            h: 1,
            actual: vec![Rational::zero(); n],
            surrogate: vec![Rational::zero(); n],
        }
    }

    /// Adds one realized cost vector and checks that at the new time `h`
    /// either `ĉ̄ <= c̄ <= ĉ̄ + (h - 1) ℓ`, or both are at most
    /// `B - (H - h + 1) c^max`.
    pub fn step(&mut self, cost: &[Rational]) -> Result<()> {
        self.h += 1;
        let h = self.h;
        for (i, c) in cost.iter().enumerate() {
            self.actual[i] += c;
            self.surrogate[i] += self.spec.round_cost(i, c);
            if self.spec.exempt[i] {
                continue;
            }
            let (hat, bar) = (&self.surrogate[i], &self.actual[i]);
            let slack = Rational::from_integer(BigInt::from(h - 1)) * &self.spec.ell[i];
            let tracked = hat <= bar && *bar <= hat + &slack;
            let low = &self.spec.budget[i]
                - Rational::from_integer(BigInt::from(self.spec.horizon + 1 - h)) * &self.spec.max_cost[i];
            let both_low = *hat <= low && *bar <= low;
            if !tracked && !both_low {
                return Err(Error::Sandwich {
                    h,
                    player: i,
                    detail: format!(
                        "surrogate {} vs actual {} (slack {}, low {})",
                        format_rational(hat),
                        format_rational(bar),
                        format_rational(&slack),
                        format_rational(&low)
                    ),
                });
            }
        }
        Ok(())
    }
}

//! Solver for Markov games with anytime budget constraints.

pub mod approximation;
pub mod config;
pub mod corpus;
pub mod doc;
pub mod equilibrium;
pub mod error;
pub mod feasibility;
pub mod game;
pub mod generate;
pub mod rational;
pub mod reduction;
pub mod scalar;
pub mod stage_lp;
pub mod verify;

pub use config::Limits;
pub use error::{Error, Result};
pub use game::{Game, History};
pub use rational::Rational;
pub use scalar::Scalar;
pub use stage_lp::EquilibriumKind;

pub type Solution = equilibrium::AceSolution<f64>;
pub type ExactSolution = equilibrium::AceSolution<Rational>;
pub type Outcome = equilibrium::AcmgOutcome<f64>;
pub type ExactOutcome = equilibrium::AcmgOutcome<Rational>;
pub type Policy = reduction::AugmentedPolicy<f64>;
pub type ExactPolicy = reduction::AugmentedPolicy<Rational>;

//! Exact analysis of decision rules in a two-urn Ellsberg design with two
//! informational draws from the ambiguous urn.

pub mod classification;
pub mod engine;
pub mod error;
pub mod model;
pub mod poly;
pub mod preference;
pub mod prior;
pub mod rational;
pub mod savage;
pub mod stats;
pub mod surd;

pub use error::{CoreError, Result};
pub use model::{
    bet_win_prob, enumerate_rules, evaluate_act, induced_act, ActPolynomial, Bet, Color,
    DecisionRule, DrawOutcome, ExperimentConfig, Money, RiskyColor, State,
};
pub use rational::Rational;

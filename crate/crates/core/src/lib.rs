//! Fighting Fantasy combat as a stochastic control problem.
//!
//! * [`dice`]: exact round odds and luck-test probabilities.
//! * [`analytic`]: closed-form victory probabilities and their oracles.
//! * [`engine`]: a seeded simulator of the combat rules.
//! * [`solver`]: optimal luck policy by backward induction.
//! * [`montecarlo`]: batch evaluation of heuristic strategies.
//!
//! Core numerics are generic over the scalar: `f32`, `f64`, or exact
//! [`BigRational`] where only field arithmetic is needed.

pub mod analytic;
pub mod dice;
pub mod engine;
pub mod error;
pub mod hypergeometric;
pub mod montecarlo;
pub mod rng;
pub mod scalar;
pub mod solver;
pub mod strategy;
pub mod structure;
pub mod table_io;

pub use num_rational::BigRational;

pub use dice::{build_dice_model, DiceModel, OddsConvention, RoundOdds};
pub use engine::{CombatStatus, GameState, LuckPolicy, LuckRule, RoundOutcome, RoundRecord};
pub use error::{Error, Result};
pub use scalar::{FloatScalar, Probability};
pub use solver::{query, solve, PolicyTable, QueryResponse, SolverConfig, StrategyCode};
pub use strategy::{heuristic_policy, HeuristicPolicy, ThresholdRule};

/// Double-precision policy table, the working type for play and export.
pub type PolicyTableF64 = PolicyTable<f64>;
pub type PolicyTableF32 = PolicyTable<f32>;
/// Exact policy table; practical only for small bounds.
pub type ExactPolicyTable = PolicyTable<BigRational>;
pub type QueryResponseF64 = QueryResponse<f64>;

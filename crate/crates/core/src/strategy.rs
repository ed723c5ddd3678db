//! Heuristic luck strategies parameterised by a luck threshold `tau`.
//!
//! Strategies 1-3 are open-loop (they ignore staminas); 4-8 are feedback
//! rules. All of them only spend luck while the current luck score clears
//! the threshold.

use serde::{Deserialize, Serialize};

use crate::engine::{GameState, LuckPolicy, RoundOutcome};
use crate::error::{Error, Result};

/// How the current luck score is compared against `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `l >= tau`.
    #[default]
    AtLeast,
    /// `l > tau`.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeuristicPolicy {
    pub id: u8,
    pub tau: i32,
    #[serde(default)]
    pub rule: ThresholdRule,
}

pub const STRATEGY_COUNT: u8 = 9;

/// Builds heuristic strategy `id` with threshold `tau`.
///
/// | id | win | loss | extra condition |
/// |----|-----|------|-----------------|
/// | 0  |     |      | never           |
/// | 1  | x   | x    |                 |
/// | 2  |     | x    |                 |
/// | 3  | x   |      |                 |
/// | 4  |     | x    | `s_h < 6`       |
/// | 5  | x   |      | `s_o > 6`       |
/// | 6  | x   | x    | `s_h < 6`       |
/// | 7  | x   | x    | `s_h < 4`       |
/// | 8  | x   | x    | `s_h < s_o`     |
pub fn heuristic_policy(id: u8, tau: i32) -> Result<HeuristicPolicy> {
    heuristic_policy_with_rule(id, tau, ThresholdRule::AtLeast)
}

pub fn heuristic_policy_with_rule(id: u8, tau: i32, rule: ThresholdRule) -> Result<HeuristicPolicy> {
    if id >= STRATEGY_COUNT {
        return Err(Error::UnknownStrategy(id));
    }
    if tau < 0 {
        return Err(Error::InvalidState(format!("tau must be nonnegative, got {tau}")));
    }
    Ok(HeuristicPolicy { id, tau, rule })
}

impl HeuristicPolicy {
    fn clears_threshold(&self, l: i32) -> bool {
        match self.rule {
            ThresholdRule::AtLeast => l >= self.tau,
            ThresholdRule::Above => l > self.tau,
        }
    }

    /// Whether the strategy ever acts on `outcome`.
    pub fn acts_on(&self, outcome: RoundOutcome) -> bool {
        match outcome {
            RoundOutcome::Draw => false,
            RoundOutcome::Win => matches!(self.id, 1 | 3 | 5 | 6 | 7 | 8),
            RoundOutcome::Loss => matches!(self.id, 1 | 2 | 4 | 6 | 7 | 8),
        }
    }
}

impl LuckPolicy for HeuristicPolicy {
    fn use_luck(&self, state: &GameState, outcome: RoundOutcome) -> bool {
        if state.l <= 0 || !self.acts_on(outcome) || !self.clears_threshold(state.l) {
            return false;
        }
        match self.id {
            1..=3 => true,
            4 | 6 => state.s_h < 6,
            5 => state.s_o > 6,
            7 => state.s_h < 4,
            8 => state.s_h < state.s_o,
            _ => false,
        }
    }
}

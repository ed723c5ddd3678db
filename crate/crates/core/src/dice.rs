//! Exact probability primitives for attack rolls and luck tests.
//!
//! Each attack round both combatants roll 2d6 and add their skill, so the
//! round is decided by `X = D1 + D2 - D3 - D4` compared against the skill
//! difference. Luck tests succeed when a 2d6 roll is at most the current luck.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::scalar::Probability;

/// Denominator of every four-die probability.
pub const FOUR_DICE_OUTCOMES: i64 = 1296;
/// Denominator of every two-die probability.
pub const TWO_DICE_OUTCOMES: i64 = 36;

/// Largest |X|.
pub const X_MAX: i32 = 10;

/// Exact probabilities of the dice quantities the combat rules depend on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiceModel {
    /// `x_pmf[i + 10] = P(X = i)` for `i` in `-10..=10`.
    x_pmf: [Ratio<i64>; 21],
    /// `q_table[l] = P(2d6 <= l)` for `l` in `0..=12`.
    q_table: [Ratio<i64>; 13],
}

/// Number of ways to roll each total `2..=12` on two dice, indexed by total.
fn two_dice_counts() -> [i64; 13] {
    let mut counts = [0i64; 13];
    for (total, c) in counts.iter_mut().enumerate().skip(2) {
        // 1..=6 on each die: 6 - |total - 7| ways.
        *c = 6 - (total as i64 - 7).abs();
    }
    counts
}

/// Builds the exact dice model.
///
/// The four-die difference is the convolution of one 2d6 total with the
/// negation of another.
pub fn build_dice_model() -> DiceModel {
    let two = two_dice_counts();
    let mut x_counts = [0i64; 21];
    for (a, &ca) in two.iter().enumerate().skip(2) {
        for (b, &cb) in two.iter().enumerate().skip(2) {
            let x = a as i32 - b as i32;
            x_counts[(x + X_MAX) as usize] += ca * cb;
        }
    }
    let x_pmf = x_counts.map(|c| Ratio::new(c, FOUR_DICE_OUTCOMES));

    let mut q_table = [Ratio::new(0, 1); 13];
    let mut running = 0i64;
    for (l, slot) in q_table.iter_mut().enumerate() {
        running += two[l];
        *slot = Ratio::new(running, TWO_DICE_OUTCOMES);
    }
    DiceModel { x_pmf, q_table }
}

impl Default for DiceModel {
    fn default() -> Self {
        build_dice_model()
    }
}

impl DiceModel {
    /// `P(X = i)`; zero outside `[-10, 10]`.
    pub fn p_x(&self, i: i32) -> Ratio<i64> {
        if (-X_MAX..=X_MAX).contains(&i) {
            self.x_pmf[(i + X_MAX) as usize]
        } else {
            Ratio::new(0, 1)
        }
    }

    pub fn x_pmf(&self) -> &[Ratio<i64>; 21] {
        &self.x_pmf
    }

    /// Numerators of the pmf over 1296, from `X = -10` to `X = 10`.
    pub fn x_counts(&self) -> [i64; 21] {
        self.x_pmf.map(|p| p.numer() * (FOUR_DICE_OUTCOMES / p.denom()))
    }

    /// Probability that a luck test at luck `l` succeeds, clamped so that
    /// `q(l) = 0` for `l <= 1` and `q(l) = 1` for `l >= 12`.
    pub fn luck_success(&self, l: i32) -> Ratio<i64> {
        let idx = l.clamp(0, 12) as usize;
        self.q_table[idx]
    }

    /// Win/draw/loss probabilities of one attack round at skill difference `dk`.
    pub fn round_odds(&self, dk: i32) -> RoundOdds {
        let mut p_w = Ratio::new(0, 1);
        for j in (-dk + 1).max(-X_MAX)..=X_MAX {
            p_w += self.p_x(j);
        }
        let p_d = self.p_x(-dk);
        let p_l = Ratio::new(1, 1) - p_w - p_d;
        RoundOdds { dk, p_w, p_d, p_l }
    }
}

/// `P(2d6 <= l)` as a float, without building a full model.
pub fn luck_success(l: i32) -> Ratio<i64> {
    let two = two_dice_counts();
    let top = l.clamp(0, 12) as usize;
    Ratio::new(two[..=top].iter().sum(), TWO_DICE_OUTCOMES)
}

/// Whether transition probabilities are renormalized over non-draw rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OddsConvention {
    /// A drawn round returns to the same situation, so the self-loop is
    /// eliminated by dividing win and loss odds by `1 - p_d`.
    #[default]
    Renormalized,
    /// Raw `p_w`, `p_l`; the draw mass leaks out of every step.
    Raw,
}

/// Exact per-round outcome probabilities for a fixed skill difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundOdds {
    pub dk: i32,
    pub p_w: Ratio<i64>,
    pub p_d: Ratio<i64>,
    pub p_l: Ratio<i64>,
}

impl RoundOdds {
    /// Win probability conditioned on the round not being drawn.
    pub fn rho_w(&self) -> Ratio<i64> {
        self.p_w / (Ratio::new(1, 1) - self.p_d)
    }

    pub fn rho_l(&self) -> Ratio<i64> {
        self.p_l / (Ratio::new(1, 1) - self.p_d)
    }

    /// `(win weight, loss weight)` for one decisive step under `convention`.
    pub fn step_weights<T: Probability>(&self, convention: OddsConvention) -> (T, T) {
        match convention {
            OddsConvention::Renormalized => {
                (T::from_ratio(&self.rho_w()), T::from_ratio(&self.rho_l()))
            }
            OddsConvention::Raw => (T::from_ratio(&self.p_w), T::from_ratio(&self.p_l)),
        }
    }

    /// True when one side can never win a round, so combat outcome is fixed.
    pub fn is_degenerate(&self) -> bool {
        self.p_w == Ratio::new(0, 1) || self.p_l == Ratio::new(0, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PUBLISHED: [i64; 21] = [
        1, 4, 10, 20, 35, 56, 80, 104, 125, 140, 146, 140, 125, 104, 80, 56, 35, 20, 10, 4, 1,
    ];

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn x_pmf_matches_published_coefficients() {
        let dice = build_dice_model();
        assert_eq!(dice.x_counts(), PUBLISHED);
        assert_eq!(dice.p_x(0), r(146, 1296));
        assert_eq!(dice.p_x(10), r(1, 1296));
        assert_eq!(dice.p_x(11), r(0, 1));
        let total: Ratio<i64> = dice.x_pmf().iter().sum();
        assert_eq!(total, r(1, 1));
    }

    #[test]
    fn x_pmf_matches_four_dice_enumeration() {
        let dice = build_dice_model();
        let mut counts = [0i64; 21];
        for d1 in 1..=6 {
            for d2 in 1..=6 {
                for d3 in 1..=6 {
                    for d4 in 1..=6 {
                        counts[(d1 + d2 - d3 - d4 + 10) as usize] += 1;
                    }
                }
            }
        }
        assert_eq!(dice.x_counts(), counts);
    }

    #[test]
    fn round_odds_examples() {
        let dice = build_dice_model();
        let even = dice.round_odds(0);
        assert_eq!(even.p_d, r(146, 1296));
        assert_eq!(even.p_w, r(575, 1296));
        assert_eq!(even.p_l, r(575, 1296));

        let sure = dice.round_odds(11);
        assert_eq!((sure.p_w, sure.p_d, sure.p_l), (r(1, 1), r(0, 1), r(0, 1)));

        assert_eq!(dice.round_odds(-2).p_w, r(310, 1296));
    }

    #[test]
    fn round_odds_minus_two_by_enumeration() {
        // Hero wins at dk = -2 when X > 2.
        let mut wins = 0;
        for d1 in 1..=6 {
            for d2 in 1..=6 {
                for d3 in 1..=6 {
                    for d4 in 1..=6 {
                        if d1 + d2 - d3 - d4 - 2 > 0 {
                            wins += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(wins, 310);
    }

    #[test]
    fn degenerate_odds_edges() {
        let dice = build_dice_model();
        assert_eq!(dice.round_odds(-11).p_w, r(0, 1));
        assert_eq!(dice.round_odds(-10).p_w, r(0, 1));
        assert!(dice.round_odds(-10).is_degenerate());
        assert!(!dice.round_odds(-9).is_degenerate());
        assert_eq!(dice.round_odds(11).p_l, r(0, 1));
        assert_eq!(dice.round_odds(40).p_w, r(1, 1));
    }

    #[test]
    fn luck_success_examples() {
        let dice = build_dice_model();
        assert_eq!(dice.luck_success(6), r(15, 36));
        assert_eq!(dice.luck_success(7), r(21, 36));
        assert_eq!(dice.luck_success(5), r(10, 36));
        assert_eq!(dice.luck_success(1), r(0, 1));
        assert_eq!(dice.luck_success(-3), r(0, 1));
        assert_eq!(dice.luck_success(12), r(1, 1));
        assert_eq!(dice.luck_success(99), r(1, 1));
        for l in -5..20 {
            assert_eq!(dice.luck_success(l), luck_success(l));
        }
    }

    #[test]
    fn renormalized_weights_sum_to_one() {
        let dice = build_dice_model();
        for dk in -9..=9 {
            let odds = dice.round_odds(dk);
            assert_eq!(odds.rho_w() + odds.rho_l(), r(1, 1));
            let (w, l): (f64, f64) = odds.step_weights(OddsConvention::Raw);
            assert!(w + l < 1.0);
        }
    }
}

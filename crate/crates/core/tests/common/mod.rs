//! Reference implementations used only by tests.
//!
//! Everything here is derived from the dice directly, by enumeration and
//! plain recursion, without going through the library's dice model.

#![allow(dead_code)]

use std::collections::HashMap;

use ffcombat_core::{Probability, RoundOutcome};
use num_rational::BigRational;

/// Counts of `X = D1 + D2 - D3 - D4` for `X = -10..=10`, by enumeration.
pub fn enumerate_x_counts() -> [i64; 21] {
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
    counts
}

/// `(wins, draws, losses)` out of 1296 at skill difference `dk`.
pub fn enumerate_round(dk: i32) -> (i64, i64, i64) {
    let (mut w, mut d, mut l) = (0, 0, 0);
    for d1 in 1..=6 {
        for d2 in 1..=6 {
            for d3 in 1..=6 {
                for d4 in 1..=6 {
                    let margin = d1 + d2 + dk - d3 - d4;
                    match margin {
                        m if m > 0 => w += 1,
                        0 => d += 1,
                        _ => l += 1,
                    }
                }
            }
        }
    }
    (w, d, l)
}

/// Ways out of 36 to roll at most `l` on 2d6.
pub fn enumerate_luck(l: i32) -> i64 {
    let mut n = 0;
    for a in 1..=6 {
        for b in 1..=6 {
            if a + b <= l {
                n += 1;
            }
        }
    }
    n
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Weights of a decisive round, `(win, loss)`, with draws eliminated.
pub fn decisive_weights<T: Probability>(dk: i32) -> (T, T) {
    let (w, _, l) = enumerate_round(dk);
    let n = w + l;
    if n == 0 {
        return (T::zero(), T::zero());
    }
    (ratio_to::<T>(w, n), ratio_to::<T>(l, n))
}

fn ratio_to<T: Probability>(n: i64, d: i64) -> T {
    T::from_ratio(&num_rational::Ratio::new(n, d))
}

/// Victory probability without luck by recursion over raw staminas.
pub fn no_luck_by_recursion(dk: i32, s_h: i32, s_o: i32) -> f64 {
    let (w, _, l) = enumerate_round(dk);
    if w == 0 {
        return if s_o <= 0 && s_h > 0 { 1.0 } else { 0.0 };
    }
    if l == 0 {
        return if s_h > 0 { 1.0 } else { 0.0 };
    }
    let rw = w as f64 / (w + l) as f64;
    let rl = l as f64 / (w + l) as f64;
    let mut memo = HashMap::new();
    fn go(a: i32, b: i32, rw: f64, rl: f64, memo: &mut HashMap<(i32, i32), f64>) -> f64 {
        if a <= 0 {
            return 0.0;
        }
        if b <= 0 {
            return 1.0;
        }
        if let Some(&v) = memo.get(&(a, b)) {
            return v;
        }
        let v = rw * go(a, b - 2, rw, rl, memo) + rl * go(a - 2, b, rw, rl, memo);
        memo.insert((a, b), v);
        v
    }
    go(s_h, s_o, rw, rl, &mut memo)
}

/// Offensive luck on every won round at fixed success probability `q`,
/// without depletion, by recursion over staminas.
pub fn constant_luck_by_recursion(dk: i32, q: f64, s_h: i32, s_o: i32) -> f64 {
    let (w, _, l) = enumerate_round(dk);
    let rw = w as f64 / (w + l) as f64;
    let rl = l as f64 / (w + l) as f64;
    let mut memo = HashMap::new();
    fn go(a: i32, b: i32, k: (f64, f64, f64), memo: &mut HashMap<(i32, i32), f64>) -> f64 {
        if a <= 0 {
            return 0.0;
        }
        if b <= 0 {
            return 1.0;
        }
        if let Some(&v) = memo.get(&(a, b)) {
            return v;
        }
        let (rw, rl, q) = k;
        let v = rw * (q * go(a, b - 4, k, memo) + (1.0 - q) * go(a, b - 1, k, memo))
            + rl * go(a - 2, b, k, memo);
        memo.insert((a, b), v);
        v
    }
    go(s_h, s_o, (rw, rl, q), &mut memo)
}

/// Memoized expectimax over the full game with depleting luck.
pub struct Expectimax<T> {
    rw: T,
    rl: T,
    q: Vec<T>,
    memo: HashMap<(i32, i32, i32), T>,
}

impl<T: Probability> Expectimax<T> {
    pub fn new(dk: i32) -> Self {
        let (rw, rl) = decisive_weights::<T>(dk);
        let q = (0..=12).map(|l| ratio_to::<T>(enumerate_luck(l), 36)).collect();
        Expectimax { rw, rl, q, memo: HashMap::new() }
    }

    /// Victory probability at the start of a round.
    pub fn pre_round(&mut self, s_h: i32, s_o: i32, l: i32) -> T {
        if s_h <= 0 {
            return T::zero();
        }
        if s_o <= 0 {
            return T::one();
        }
        if let Some(v) = self.memo.get(&(s_h, s_o, l)) {
            return v.clone();
        }
        let win = self.after(s_h, s_o, l, RoundOutcome::Win);
        let loss = self.after(s_h, s_o, l, RoundOutcome::Loss);
        let v = self.rw.clone() * win.0.max_of(win.1) + self.rl.clone() * loss.0.max_of(loss.1);
        self.memo.insert((s_h, s_o, l), v.clone());
        v
    }

    /// `(without luck, with luck)` after a decisive round; the luck option
    /// is `None` when luck is exhausted.
    pub fn after(&mut self, s_h: i32, s_o: i32, l: i32, outcome: RoundOutcome) -> (T, Option<T>) {
        let q = self.q[l.clamp(0, 12) as usize].clone();
        let miss = T::one() - q.clone();
        match outcome {
            RoundOutcome::Win => {
                let plain = self.pre_round(s_h, s_o - 2, l);
                let lucky = (l > 0).then(|| {
                    q.clone() * self.pre_round(s_h, s_o - 4, l - 1)
                        + miss.clone() * self.pre_round(s_h, s_o - 1, l - 1)
                });
                (plain, lucky)
            }
            RoundOutcome::Loss => {
                let plain = self.pre_round(s_h - 2, s_o, l);
                let lucky = (l > 0).then(|| {
                    q.clone() * self.pre_round(s_h - 1, s_o, l - 1)
                        + miss.clone() * self.pre_round(s_h - 3, s_o, l - 1)
                });
                (plain, lucky)
            }
            RoundOutcome::Draw => panic!("no decision on a draw"),
        }
    }
}

trait MaxOf: Sized {
    fn max_of(self, other: Option<Self>) -> Self;
}

impl<T: Probability> MaxOf for T {
    fn max_of(self, other: Option<T>) -> T {
        match other {
            Some(o) if o > self => o,
            _ => self,
        }
    }
}

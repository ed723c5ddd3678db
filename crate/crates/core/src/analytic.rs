//! Closed-form victory probabilities.
//!
//! Two games admit closed forms: the game where luck is never used, and the
//! game where luck is used on every won round but never depletes (a fixed
//! test success probability `q`). Both are obtained by counting game
//! histories; the infinite sum over interleaved draws collapses to powers of
//! `1 - p_d`, and the tail over losses is a Gauss hypergeometric series.

use num_bigint::BigUint;
use num_integer::binomial;
use num_rational::Ratio;

use crate::dice::RoundOdds;
use crate::error::{Error, Result};
use crate::hypergeometric::gauss_2f1_series;
use crate::scalar::{FloatScalar, Probability};

/// Number of decisive rounds a combatant with stamina `s` can lose, at two
/// damage per loss, and still be alive: `ceil(s / 2)` rounds kill.
pub fn loss_budget(stamina: i32) -> u32 {
    if stamina <= 0 {
        0
    } else {
        ((stamina + 1) / 2) as u32
    }
}

/// Number of histories with `w` wins (the last round being a win), `l`
/// losses and `d` draws: `C(w-1+l, l) * C(w-1+l+d, d)`.
pub fn history_count(w: u32, l: u32, d: u32) -> BigUint {
    assert!(w >= 1, "a winning history contains at least one win");
    let base = BigUint::from(w - 1 + l);
    let with_draws = BigUint::from(w - 1 + l + d);
    binomial(base, BigUint::from(l)) * binomial(with_draws, BigUint::from(d))
}

/// Number of offensive-luck strings with `k` successes (4 damage each) and
/// `n - 4k` failures (1 damage each): `(n-3k)! / (k! (n-4k)!)`.
pub fn luck_string_count(n: u32, k: u32) -> BigUint {
    assert!(4 * k <= n);
    let len = n - 3 * k;
    binomial(BigUint::from(len), BigUint::from(k))
}

/// The no-luck game: both sides deal two damage per won round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoLuckInstance {
    pub odds: RoundOdds,
    pub sigma_h: u32,
    pub sigma_o: u32,
}

impl NoLuckInstance {
    pub fn from_staminas(odds: RoundOdds, s_h: i32, s_o: i32) -> Self {
        NoLuckInstance {
            odds,
            sigma_h: loss_budget(s_h),
            sigma_o: loss_budget(s_o),
        }
    }
}

fn ratio<T: FloatScalar>(r: &Ratio<i64>) -> T {
    T::from_ratio(r)
}

fn binomial_float<T: FloatScalar>(n: u32, k: u32) -> T {
    let k = k.min(n - k);
    let mut acc = T::one();
    for j in 0..k {
        acc = acc * T::lit((n - j) as f64) / T::lit((j + 1) as f64);
    }
    acc
}

fn factorial_float<T: FloatScalar>(n: u32) -> T {
    (1..=n).fold(T::one(), |acc, j| acc * T::lit(j as f64))
}

/// Victory probability without luck use.
///
/// Uses `1 - rho_w^so * rho_l^sh * C(sh+so-1, sh) * 2F1(1, sh+so; sh+1; rho_l)`,
/// which is the complement of the losing-history tail. Zero budgets are
/// treated as already-terminated combats.
pub fn vp_no_luck<T: FloatScalar>(inst: &NoLuckInstance) -> Result<T> {
    let odds = &inst.odds;
    if odds.p_w + odds.p_l == Ratio::new(0, 1) {
        return Err(Error::DegenerateOdds);
    }
    if inst.sigma_h == 0 {
        return Ok(T::zero());
    }
    if inst.sigma_o == 0 {
        return Ok(T::one());
    }
    if odds.p_w == Ratio::new(0, 1) {
        return Ok(T::zero());
    }
    if odds.p_l == Ratio::new(0, 1) {
        return Ok(T::one());
    }
    let (sh, so) = (inst.sigma_h, inst.sigma_o);
    let rho_w: T = ratio(&odds.rho_w());
    let rho_l: T = ratio(&odds.rho_l());
    let series = gauss_2f1_series(
        T::one(),
        T::lit((sh + so) as f64),
        T::lit((sh + 1) as f64),
        rho_l,
    )?;
    let tail = rho_w.powi(so as i32)
        * binomial_float::<T>(sh + so - 1, sh)
        * rho_l.powi(sh as i32)
        * series;
    Ok((T::one() - tail).max(T::zero()).min(T::one()))
}

/// Independent check of [`vp_no_luck`]: the absorbing chain on stamina
/// space solved by back-substitution over increasing `s_h + s_o`.
///
/// Works in any [`Probability`] scalar, including exact rationals.
pub fn vp_no_luck_oracle<T: Probability>(odds: &RoundOdds, s_h: i32, s_o: i32) -> T {
    if s_o <= 0 && s_h >= 1 {
        return T::one();
    }
    if s_h <= 0 {
        return T::zero();
    }
    let rho_w = T::from_ratio(&odds.rho_w());
    let rho_l = T::from_ratio(&odds.rho_l());
    absorbing_chain(s_h, s_o, |v, a, b| {
        rho_w.clone() * v(a, b - 2) + rho_l.clone() * v(a - 2, b)
    })
}

/// Independent check of [`vp_constant_luck_offensive`]: every won round uses
/// a non-depleting luck test (4 damage with probability `q`, else 1).
pub fn vp_constant_luck_oracle<T: Probability>(odds: &RoundOdds, q: T, s_h: i32, s_o: i32) -> T {
    if s_o <= 0 && s_h >= 1 {
        return T::one();
    }
    if s_h <= 0 {
        return T::zero();
    }
    let rho_w = T::from_ratio(&odds.rho_w());
    let rho_l = T::from_ratio(&odds.rho_l());
    let miss = T::one() - q.clone();
    absorbing_chain(s_h, s_o, |v, a, b| {
        rho_w.clone() * (q.clone() * v(a, b - 4) + miss.clone() * v(a, b - 1))
            + rho_l.clone() * v(a - 2, b)
    })
}

/// Fills `v(a, b)` for `1 <= a <= s_h`, `1 <= b <= s_o` in order of
/// increasing `a + b`; `step` may only look at states with a smaller sum.
fn absorbing_chain<T, F>(s_h: i32, s_o: i32, step: F) -> T
where
    T: Probability,
    F: Fn(&dyn Fn(i32, i32) -> T, i32, i32) -> T,
{
    let width = s_o as usize;
    let mut grid = vec![T::zero(); (s_h as usize) * width];
    for total in 2..=(s_h + s_o) {
        for a in 1..=s_h {
            let b = total - a;
            if b < 1 || b > s_o {
                continue;
            }
            let value = {
                let lookup = |x: i32, y: i32| -> T {
                    if x <= 0 {
                        T::zero()
                    } else if y <= 0 {
                        T::one()
                    } else {
                        grid[(x as usize - 1) * width + (y as usize - 1)].clone()
                    }
                };
                step(&lookup, a, b)
            };
            grid[(a as usize - 1) * width + (b as usize - 1)] = value;
        }
    }
    grid[(s_h as usize - 1) * width + (s_o as usize - 1)].clone()
}

/// The offensive constant-luck game: luck is tested on every won round with
/// fixed success probability `q` and is never depleted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLuckInstance<T> {
    pub odds: RoundOdds,
    pub q: T,
    pub s_o: i32,
    pub sigma_h: u32,
}

impl<T: FloatScalar> ConstantLuckInstance<T> {
    pub fn new(odds: RoundOdds, q: T, s_h: i32, s_o: i32) -> Result<Self> {
        if !(q >= T::zero() && q <= T::one()) {
            return Err(Error::InvalidState(format!("q must lie in [0, 1], got {:?}", q)));
        }
        if s_o < 1 || s_h < 1 {
            return Err(Error::InvalidState(format!(
                "staminas must be positive, got s_h={s_h}, s_o={s_o}"
            )));
        }
        Ok(ConstantLuckInstance {
            odds,
            q,
            s_o,
            sigma_h: loss_budget(s_h),
        })
    }
}

/// Probability of the histories whose prefix removes exactly `n` opponent
/// stamina with `k` successful tests, followed by a final round of
/// probability `p_f`; losses (fewer than `sigma_h`) and draws are summed out.
fn prefix_with_k_successes<T: FloatScalar>(
    inst: &ConstantLuckInstance<T>,
    k: u32,
    n: u32,
    p_f: T,
) -> Result<T> {
    let odds = &inst.odds;
    let p_w: T = ratio(&odds.p_w);
    let p_d: T = ratio(&odds.p_d);
    let p_l: T = ratio(&odds.p_l);
    let q = inst.q;
    let sh = inst.sigma_h;
    let one_minus_pd = T::one() - p_d;
    let rho = (p_d + p_l - T::one()) / (p_d - T::one());

    let failures = (n - 4 * k) as i32;
    let length = n - 3 * k;
    let prefactor = p_f / (factorial_float::<T>(k) * factorial_float::<T>(n - 4 * k))
        * one_minus_pd.powi(3 * k as i32 - n as i32 - 2 - sh as i32)
        * (p_w - p_w * q).powi(failures)
        * (p_w * q).powi(k as i32)
        * factorial_float::<T>(length);

    // rho^(-n-1) distributed into both bracket terms.
    let head = one_minus_pd.powi(sh as i32 + 1) * rho.powi(3 * k as i32 - n as i32 - 1);
    let series = gauss_2f1_series(
        T::one(),
        T::lit((1 + length + sh) as f64),
        T::lit((1 + sh) as f64),
        p_l / one_minus_pd,
    )?;
    let tail = p_l.powi(sh as i32)
        * (p_l + p_d - T::one())
        * binomial_float::<T>(length + sh, sh)
        * series
        / rho;
    Ok(prefactor * (head + tail))
}

/// Sum over admissible success counts `0 <= k <= floor(n/4)` for a prefix of
/// `n` damage; negative `n` has no valid prefix.
fn prefix_total<T: FloatScalar>(inst: &ConstantLuckInstance<T>, n: i32, p_f: T) -> Result<T> {
    if n < 0 {
        return Ok(T::zero());
    }
    let n = n as u32;
    let mut sum = T::zero();
    for k in 0..=n / 4 {
        sum = sum + prefix_with_k_successes(inst, k, n, p_f)?;
    }
    Ok(sum)
}

/// Victory probability when every won round spends non-depleting luck.
///
/// The final round either finishes the opponent from stamina 4, 3, 2 or 1
/// with a successful test, or from stamina 1 with a failed one; each case
/// contributes the prefix sum for the damage dealt before it.
pub fn vp_constant_luck_offensive<T: FloatScalar>(inst: &ConstantLuckInstance<T>) -> Result<T> {
    let odds = &inst.odds;
    if odds.p_w == Ratio::new(0, 1) {
        return Ok(T::zero());
    }
    let p_w: T = ratio(&odds.p_w);
    let hit = p_w * inst.q;
    let graze = p_w * (T::one() - inst.q);
    let s_o = inst.s_o;
    let total = prefix_total(inst, s_o - 4, hit)?
        + prefix_total(inst, s_o - 3, hit)?
        + prefix_total(inst, s_o - 2, hit)?
        + prefix_total(inst, s_o - 1, hit)?
        + prefix_total(inst, s_o - 1, graze)?;
    Ok(total.max(T::zero()).min(T::one()))
}

/// Break-even points for using luck under a fixed test success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LuckThresholds {
    /// Offensive use pays off when `q` exceeds this.
    pub offensive_q: Ratio<i64>,
    /// Defensive use pays off when `q` exceeds this.
    pub defensive_q: Ratio<i64>,
    /// Smallest luck score whose test probability beats `offensive_q`.
    pub offensive_min_luck: i32,
    pub defensive_min_luck: i32,
}

/// Expected damage dealt by an offensive test: 1 on failure, 4 on success.
pub fn expected_offensive_damage(q: Ratio<i64>) -> Ratio<i64> {
    (Ratio::from_integer(1) - q) + q * 4
}

/// Expected damage received after a defensive test: 1 on success, 3 on failure.
pub fn expected_defensive_damage(q: Ratio<i64>) -> Ratio<i64> {
    q + (Ratio::from_integer(1) - q) * 3
}

pub fn luck_thresholds() -> LuckThresholds {
    // <d> = 1 + 3q > 2 and <d> = 3 - 2q < 2.
    let offensive_q = Ratio::new(1, 3);
    let defensive_q = Ratio::new(1, 2);
    let min_luck = |threshold: Ratio<i64>| {
        (0..=12)
            .find(|&l| crate::dice::luck_success(l) > threshold)
            .expect("q(12) = 1 beats any threshold below one")
    };
    LuckThresholds {
        offensive_q,
        defensive_q,
        offensive_min_luck: min_luck(offensive_q),
        defensive_min_luck: min_luck(defensive_q),
    }
}

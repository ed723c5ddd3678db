//! Gauss hypergeometric series `2F1(a, b; c; z)` by direct summation.
//!
//! Only the region `|z| < 1` is supported; the combat closed forms evaluate
//! it at `z = rho_l`, which is strictly below one for every nondegenerate
//! skill difference (but approaches one as the hero's win chance vanishes,
//! so the term cap has to be generous).

use crate::error::{Error, Result};
use crate::scalar::{FloatScalar, Probability};

/// Relative size below which an added term is considered negligible.
pub const SERIES_TOLERANCE: f64 = 1e-15;
/// Hard cap on the number of summed terms.
pub const MAX_TERMS: usize = 1_000_000;

/// Sums `sum_d (a)_d (b)_d / ((c)_d d!) z^d` until the estimated tail is
/// negligible relative to the partial sum.
///
/// The stopping tolerance is `max(1e-15, machine epsilon)` so that `f32`
/// evaluations terminate as well.
pub fn gauss_2f1_series<T: FloatScalar>(a: T, b: T, c: T, z: T) -> Result<T> {
    if z.is_nan() || z.abs() >= T::one() {
        return Err(Error::NonConvergence(Probability::to_f64(&z)));
    }
    if c <= T::zero() && c == c.floor() {
        return Err(Error::InvalidState(format!(
            "2F1 lower parameter must not be a non-positive integer, got {:?}",
            c
        )));
    }
    let tol = T::lit(SERIES_TOLERANCE).max(T::epsilon());

    let mut term = T::one();
    let mut sum = T::one();
    let mut d = T::zero();
    for _ in 0..MAX_TERMS {
        let ratio = (a + d) * (b + d) / ((c + d) * (d + T::one())) * z;
        term = term * ratio;
        sum = sum + term;
        d = d + T::one();
        if term == T::zero() {
            return Ok(sum);
        }
        // Later ratios tend to z, so the tail is bounded by a geometric
        // series in the larger of the two.
        let r = ratio.abs().max(z.abs());
        if r < T::one() && term.abs() * r / (T::one() - r) <= tol * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence(Probability::to_f64(&z)))
}

//! Bracketed root finding: bisection down to a relative bracket width, then
//! a few Newton steps that are only accepted inside the bracket.

use crate::{Error, Real, Result};

/// Root of `f` on the open interval (lo, hi) where `f` is negative near `lo`
/// and positive near `hi` (if `increasing`; reversed otherwise). The function
/// is only evaluated at interior points, so it may blow up at the ends.
pub fn bracketed_root<T, F, D>(f: F, df: Option<D>, lo: T, hi: T, increasing: bool) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
    D: Fn(T) -> T,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::EmptyBracket(format!("[{lo}, {hi}]")));
    }
    let sign = |x: T| if increasing { x } else { -x };
    let (mut a, mut b) = (lo, hi);
    let width = hi - lo;
    let tol = T::tol(1e-12) * width;
    let two = T::lit(2.0);
    for _ in 0..400 {
        if b - a <= tol {
            break;
        }
        let mid = (a + b) / two;
        if mid <= a || mid >= b {
            break;
        }
        let v = sign(f(mid));
        if v.is_nan() {
            return Err(Error::EmptyBracket(format!("NaN at {mid}")));
        }
        if v < T::zero() {
            a = mid;
        } else if v > T::zero() {
            b = mid;
        } else {
            return Ok(mid);
        }
    }
    let mut x = (a + b) / two;
    if let Some(df) = df {
        for _ in 0..3 {
            let d = df(x);
            if d == T::zero() || !d.is_finite() {
                break;
            }
            let next = x - f(x) / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                break;
            }
            x = next;
        }
    }
    Ok(x)
}

/// Convenience form without a derivative.
pub fn bisect<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, increasing: bool) -> Result<T> {
    bracketed_root(f, None::<fn(T) -> T>, lo, hi, increasing)
}

//! Bracketing root finders for monotone functions.

use crate::error::{Error, Result};

/// Generalized inverse of a nondecreasing function: the (approximate) infimum
/// of `{x in [lo, hi] : f(x) >= target}`, located by bisection until the
/// bracket is narrower than `x_tol`.
///
/// Returns `lo` when `f(lo) >= target` and `hi` when `f(hi) < target`.
pub fn generalized_inverse<F: FnMut(f64) -> f64>(mut f: F, target: f64, lo: f64, hi: f64, x_tol: f64) -> f64 {
    let mut lo = lo;
    let mut hi = hi;
    if f(lo) >= target {
        return lo;
    }
    if f(hi) < target {
        return hi;
    }
    // Invariant: f(lo) < target <= f(hi).
    for _ in 0..200 {
        if hi - lo <= x_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Root of `g` inside a sign-changing bracket by plain bisection.
pub fn bisect<F: FnMut(f64) -> f64>(mut g: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() || g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::RootNotBracketed {
            lo,
            hi,
            f_lo: g_lo,
            f_hi: g_hi,
        });
    }
    let lo_negative = g_lo < 0.0;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= x_tol {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::RootNoConvergence {
            lo,
            hi,
            iterations: max_iter,
        })
    }
}

/// Grows the upper end of `[lo, hi]` geometrically (never past `limit`) until
/// `g` changes sign. Returns the bracket.
pub fn expand_upper<F: FnMut(f64) -> f64>(mut g: F, lo: f64, hi: f64, limit: f64) -> Result<(f64, f64)> {
    let g_lo = g(lo);
    let mut hi = hi.min(limit);
    let mut g_hi = g(hi);
    let mut width = hi - lo;
    for _ in 0..200 {
        if g_hi == 0.0 || g_hi.signum() != g_lo.signum() {
            return Ok((lo, hi));
        }
        if hi >= limit {
            break;
        }
        width *= 2.0;
        hi = (lo + width).min(limit);
        g_hi = g(hi);
    }
    Err(Error::RootNotBracketed {
        lo,
        hi,
        f_lo: g_lo,
        f_hi: g_hi,
    })
}

/// Illinois (modified regula falsi) on a sign-changing bracket. Converges
/// superlinearly for smooth monotone `g` and never leaves the bracket.
pub fn illinois<F: FnMut(f64) -> f64>(
    mut g: F,
    lo: f64,
    hi: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut ga = g(a);
    let mut gb = g(b);
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.signum() == gb.signum() || ga.is_nan() || gb.is_nan() {
        return Err(Error::RootNotBracketed {
            lo,
            hi,
            f_lo: ga,
            f_hi: gb,
        });
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let gc = g(c);
        if gc.abs() <= f_tol || (b - a).abs() <= x_tol {
            return Ok(c);
        }
        if gc.signum() == gb.signum() {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::RootNoConvergence {
        lo: a.min(b),
        hi: a.max(b),
        iterations: max_iter,
    })
}

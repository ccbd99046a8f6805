use super::Tolerance;
use crate::error::{Error, Result};

/// Root of a sign-changing function on `[lo, hi]` with default tolerance.
pub fn bisect<G: FnMut(f64) -> f64>(g: G, lo: f64, hi: f64) -> Result<f64> {
    bisect_with(g, lo, hi, &Tolerance::default())
}

/// Plain bisection. Stops when the bracket is narrower than `abs_tol`
/// (or than `rel_tol` of its magnitude for brackets far from zero).
pub fn bisect_with<G: FnMut(f64) -> f64>(
    mut g: G,
    lo: f64,
    hi: f64,
    tol: &Tolerance,
) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if !(g_lo.is_finite() && g_hi.is_finite()) || g_lo.signum() == g_hi.signum() {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    // a bracket of width w needs log2(w / abs_tol) halvings
    // (capped: ~2100 halvings exhaust the f64 range, and the mid == lo exit fires first)
    let needed = ((hi - lo) / tol.abs_tol).log2().ceil().clamp(0.0, 2100.0) as usize + 2;
    let iterations = needed.max(tol.max_iter);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol.abs_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

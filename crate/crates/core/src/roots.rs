//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Bisection for a sign change of `g` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `abs_tol` (relative to the
/// magnitude of the endpoints once that exceeds one) or cannot be split in
/// floating point. Returns the midpoint of the final bracket.
pub fn bisect<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, abs_tol: f64) -> Result<f64> {
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() || g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::Numeric(format!(
            "no sign change on [{lo}, {hi}]: g(lo) = {g_lo:e}, g(hi) = {g_hi:e}"
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= abs_tol * hi.abs().max(1.0) {
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

/// Bisection on `[start, start·K]`, doubling `K` (from 2) until `g` changes sign.
///
/// `start` must be positive. Fails once `K` exceeds `max_factor`, reporting the
/// last bracket tried.
pub fn bisect_expanding<G: Fn(f64) -> f64>(
    g: G,
    start: f64,
    max_factor: f64,
    abs_tol: f64,
) -> Result<f64> {
    if !(start > 0.0) {
        return Err(Error::Domain(format!("bracket start must be positive, got {start}")));
    }
    let g_start = g(start);
    let mut factor = 2.0;
    loop {
        let hi = start * factor;
        let g_hi = g(hi);
        if g_hi.signum() != g_start.signum() || g_hi == 0.0 {
            return bisect(&g, start, hi, abs_tol);
        }
        if factor >= max_factor {
            return Err(Error::Construction(format!(
                "bracket [{start}, {hi}] shows no sign change (g = {g_start:e} .. {g_hi:e}) \
                 after expanding to factor {factor}"
            )));
        }
        factor *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root_of_two() {
        let r = bisect(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn expanding_bracket_reaches_distant_root() {
        let r = bisect_expanding(|x| x - 1000.5, 1.0, 1e6, 1e-12).unwrap();
        assert!((r - 1000.5).abs() < 1e-8);
    }

    #[test]
    fn expanding_bracket_reports_failure() {
        let err = bisect_expanding(|x| x + 1.0, 1.0, 64.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Construction(_)));
    }

    #[test]
    fn same_sign_endpoints_error() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}

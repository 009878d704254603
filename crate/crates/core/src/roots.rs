use crate::error::{Error, Result};

/// Newton iteration kept inside a sign-changing bracket, falling back to
/// bisection whenever a Newton step leaves it or stalls.
///
/// `f` returns the value and derivative. Stops when `|f| <= ftol`.
pub(crate) fn bracketed_newton(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64, ftol: f64) -> Result<f64> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo:.6e}, {hi:.6e}] (f = {flo:.3e}, {fhi:.3e})"
        )));
    }
    let increasing = fhi > 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if (fx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs() {
            return Ok(x);
        }
    }
    Ok(x)
}

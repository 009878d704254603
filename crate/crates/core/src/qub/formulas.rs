//! Closed-form QUB relations for a first-order building model.

use crate::error::{Error, Result};
use crate::roots::bracketed_newton;

fn check_denominator(den: f64, scale: f64, what: &str) -> Result<()> {
    if !den.is_finite() || den == 0.0 || den.abs() < 1e-12 * scale {
        return Err(Error::Degenerate(format!(
            "{what} denominator {den:.3e} vanishes (scale {scale:.3e})"
        )));
    }
    Ok(())
}

/// `H_QUB = (P_h α_c − P_c α_h) / (ΔT_h α_c − ΔT_c α_h)`.
///
/// The temperature differences are those at the points where the slopes are
/// taken, or at the phase origins for tangents of a first-order response;
/// both give the same value.
pub fn estimate_h(alpha_h: f64, alpha_c: f64, dt_h: f64, dt_c: f64, p_h: f64, p_c: f64) -> Result<f64> {
    let den = dt_h * alpha_c - dt_c * alpha_h;
    check_denominator(den, (dt_h * alpha_c).abs() + (dt_c * alpha_h).abs(), "H_QUB")?;
    Ok((p_h * alpha_c - p_c * alpha_h) / den)
}

/// `C* = (P_h ΔT_c − P_c ΔT_h) / (α_h ΔT_c − α_c ΔT_h)`.
///
/// Equals `C` for tangents at the phase origins, or for tangents anywhere
/// paired with the temperature differences at the tangent points. Tangents
/// taken `t0` after the origins but paired with the origin temperature
/// differences are both scaled by `e^{−t0/τ}`, which gives `e^{t0/τ} C`.
pub fn estimate_c(alpha_h: f64, alpha_c: f64, dt_h: f64, dt_c: f64, p_h: f64, p_c: f64) -> Result<f64> {
    let den = alpha_h * dt_c - alpha_c * dt_h;
    check_denominator(den, (alpha_h * dt_c).abs() + (alpha_c * dt_h).abs(), "C")?;
    Ok((p_h * dt_c - p_c * dt_h) / den)
}

/// Solves `C* = e^{−t0 H / C} C` for `C`.
pub fn recover_c(c_star: f64, h: f64, t0: f64) -> Result<f64> {
    if !(c_star > 0.0 && h > 0.0 && t0 >= 0.0) || !(c_star * h * t0).is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need C* > 0, H > 0 and t0 >= 0, got C* = {c_star}, H = {h}, t0 = {t0}"
        )));
    }
    if t0 == 0.0 {
        return Ok(c_star);
    }
    let k = t0 * h;
    let g = |c: f64| {
        let e = (-k / c).exp();
        (c * e - c_star, e * (1.0 + k / c))
    };
    // C e^{−k/C} ≥ C − k, so the root is at most C* + k.
    let hi = (c_star * (k / c_star).exp()).min(c_star + k);
    let c = bracketed_newton(g, c_star, hi, 1e-14 * c_star)?;
    let residual = g(c).0.abs();
    if residual > 1e-9 * c_star {
        return Err(Error::NoRoot(format!(
            "capacity equation residual {residual:.3e} too large"
        )));
    }
    Ok(c)
}

/// `ΔT(t) = ΔT0 e^{−t/τ} + (P/G)(1 − e^{−t/τ})`, `τ = C/G`.
pub fn first_order_response(g: f64, c: f64, p: f64, dt0: f64, t: f64) -> f64 {
    let x = -t * g / c;
    dt0 * x.exp() - p / g * x.exp_m1()
}

/// Slopes of the first-order heating and cooling responses `t0` after their
/// phase origins, `α = e^{−t0/τ}(P/C − ΔT0 G/C)`.
pub fn analytic_slopes(g: f64, c: f64, p_h: f64, p_c: f64, dt0_h: f64, dt0_c: f64, t0: f64) -> (f64, f64) {
    // Cooling origin slope: P_c/C − ΔT0 G/C.
    let decay = (-t0 * g / c).exp();
    (decay * (p_h - dt0_h * g) / c, decay * (p_c - dt0_c * g) / c)
}

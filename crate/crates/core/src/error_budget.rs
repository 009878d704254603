//! Intrinsic and measurement errors of the QUB estimate.
//!
//! Percentages are stored in percent, so an error of 16.8 % is `16.8`.

use crate::error::{Error, Result};
use crate::qub::QubEstimate;

/// Absolute measurement errors, shared by the heating and cooling phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementErrors {
    /// Slope, K/s.
    pub eps_alpha: f64,
    /// Power, W.
    pub eps_p: f64,
    /// Temperature difference, K.
    pub eps_dt: f64,
}

impl MeasurementErrors {
    pub fn new(eps_alpha: f64, eps_p: f64, eps_dt: f64) -> Result<Self> {
        let e = Self {
            eps_alpha,
            eps_p,
            eps_dt,
        };
        if [eps_alpha, eps_p, eps_dt].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "measurement errors must be finite and non-negative: {e:?}"
            )));
        }
        Ok(e)
    }

    pub fn zero() -> Self {
        Self {
            eps_alpha: 0.0,
            eps_p: 0.0,
            eps_dt: 0.0,
        }
    }
}

/// How measurement errors are set for a simulated experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorModel {
    pub eps_dt: f64,
    /// Power error as a fraction of the heating power.
    pub eps_p_rel: f64,
    /// Fixed slope error; when `None`, the larger standard error of the two
    /// slope fits is used.
    pub eps_alpha: Option<f64>,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            eps_dt: 0.5,
            eps_p_rel: 0.01,
            eps_alpha: None,
        }
    }
}

impl ErrorModel {
    pub fn validate(&self) -> Result<()> {
        MeasurementErrors::new(self.eps_alpha.unwrap_or(0.0), self.eps_p_rel, self.eps_dt).map(|_| ())
    }

    pub fn resolve(&self, estimate: &QubEstimate) -> Result<MeasurementErrors> {
        let eps_alpha = self
            .eps_alpha
            .unwrap_or_else(|| estimate.stderr_h.max(estimate.stderr_c));
        MeasurementErrors::new(eps_alpha, self.eps_p_rel * estimate.p_heat.abs(), self.eps_dt)
    }
}

/// Partial derivatives of `H_QUB = N/σ` with `N = P_h α_c − P_c α_h` and
/// `σ = ΔT_h α_c − ΔT_c α_h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubPartials {
    pub dh_dah: f64,
    pub dh_dac: f64,
    pub dh_dph: f64,
    pub dh_dpc: f64,
    pub dh_dth: f64,
    pub dh_dtc: f64,
    pub sigma: f64,
}

pub fn partials(alpha_h: f64, alpha_c: f64, p_h: f64, p_c: f64, dt_h: f64, dt_c: f64) -> Result<QubPartials> {
    // σ is the denominator of H_QUB.
    let sigma = dt_h * alpha_c - dt_c * alpha_h;
    let scale = (dt_h * alpha_c).abs() + (dt_c * alpha_h).abs();
    if !sigma.is_finite() || sigma == 0.0 || sigma.abs() < 1e-12 * scale {
        return Err(Error::Degenerate(format!("σ = {sigma:.3e} vanishes")));
    }
    let n = p_h * alpha_c - p_c * alpha_h;
    let s2 = sigma * sigma;
    Ok(QubPartials {
        dh_dah: dt_c * n / s2 - p_c / sigma,
        dh_dac: -dt_h * n / s2 + p_h / sigma,
        dh_dph: alpha_c / sigma,
        dh_dpc: -alpha_h / sigma,
        dh_dth: -alpha_c * n / s2,
        dh_dtc: alpha_h * n / s2,
        sigma,
    })
}

/// Root-sum-square of the six error contributions, W/K.
pub fn measurement_error(p: &QubPartials, e: &MeasurementErrors) -> f64 {
    [
        e.eps_alpha * p.dh_dah,
        e.eps_alpha * p.dh_dac,
        e.eps_p * p.dh_dph,
        e.eps_p * p.dh_dpc,
        e.eps_dt * p.dh_dth,
        e.eps_dt * p.dh_dtc,
    ]
    .iter()
    .map(|v| v * v)
    .sum::<f64>()
    .sqrt()
}

fn check_reference(h_ref: f64) -> Result<()> {
    if !(h_ref > 0.0 && h_ref.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "reference conductance must be positive, got {h_ref}"
        )));
    }
    Ok(())
}

/// `(H_QUB − H, 100 (H_QUB − H)/H)`.
pub fn intrinsic_error(h_qub: f64, h_ref: f64) -> Result<(f64, f64)> {
    check_reference(h_ref)?;
    let eps = h_qub - h_ref;
    Ok((eps, 100.0 * eps / h_ref))
}

/// `(√(ε_QUB² + ε_Hm²), 100 ε_H/H)`.
pub fn total_error(eps_qub: f64, eps_hm: f64, h_ref: f64) -> Result<(f64, f64)> {
    check_reference(h_ref)?;
    let eps = eps_qub.hypot(eps_hm);
    Ok((eps, 100.0 * eps / h_ref))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBudget {
    pub eps_qub: f64,
    pub eps_qub_pct: f64,
    pub eps_hm: f64,
    pub eps_h: f64,
    pub eps_h_pct: f64,
}

impl ErrorBudget {
    pub fn new(estimate: &QubEstimate, h_ref: f64, errors: &MeasurementErrors) -> Result<Self> {
        let (eps_qub, eps_qub_pct) = intrinsic_error(estimate.h_qub, h_ref)?;
        let p = partials(
            estimate.alpha_h,
            estimate.alpha_c,
            estimate.p_heat,
            estimate.p_cool,
            estimate.dt0_h,
            estimate.dt0_c,
        )?;
        let eps_hm = measurement_error(&p, errors);
        let (eps_h, eps_h_pct) = total_error(eps_qub, eps_hm, h_ref)?;
        Ok(Self {
            eps_qub,
            eps_qub_pct,
            eps_hm,
            eps_h,
            eps_h_pct,
        })
    }
}

//! L₂ small-ball asymptotics `F(r) = P{‖X‖₂ ≤ √r} ~ C r^β exp(−D r^{−d})`.
//!
//! Everything here works in `r = ε²`; only [`eval_asymptotic`] takes `ε`.

mod curve;
mod fredholm;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{is_critical, Transform};

pub use curve::{deconvolve_first, theorem2_convolution, theorem2_display_form, DistributionCurve};
pub use fredholm::{fredholm_ratio, jensen_limit, JensenProbe};

/// The quadruple `(C, β, D, d)` of `F(r) ~ C r^β exp(−D r^{−d})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDescriptor {
    #[serde(rename = "C")]
    pub scale: f64,
    #[serde(rename = "beta")]
    pub power: f64,
    #[serde(rename = "D")]
    pub rate: f64,
    #[serde(rename = "d")]
    pub exponent: f64,
}

impl AsymptoticDescriptor {
    pub fn new(scale: f64, power: f64, rate: f64, exponent: f64) -> Self {
        AsymptoticDescriptor {
            scale,
            power,
            rate,
            exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.rate > 0.0 && self.exponent > 0.0 && self.power.is_finite()) {
            return Err(Error::Config(format!("invalid descriptor {self:?}")));
        }
        Ok(())
    }

    /// `C r^β exp(−D r^{−d})` at `r`, unclamped.
    pub fn eval_r(&self, r: f64) -> f64 {
        self.scale * r.powf(self.power) * (-self.rate * r.powf(-self.exponent)).exp()
    }
}

/// `(d, D)` for a Green-function covariance of an order-`2ℓ` operator:
/// `d = 1/(2ℓ−1)`, `D = (2ℓ sin(π/2ℓ))^{−d−1} / (2d)`.
pub fn green_constants(ell: u32) -> Result<(f64, f64)> {
    if ell == 0 {
        return Err(Error::Config(
            "operator half-order must be at least 1".into(),
        ));
    }
    let l = ell as f64;
    let d = 1.0 / (2.0 * l - 1.0);
    let rate = (2.0 * l * (PI / (2.0 * l)).sin()).powf(-d - 1.0) / (2.0 * d);
    Ok((d, rate))
}

/// Non-critical branch: `C̃ = C / |1 − αq|`.
pub fn theorem1_scale(
    base: &AsymptoticDescriptor,
    q: f64,
    alpha: f64,
) -> Result<AsymptoticDescriptor> {
    let gap = (1.0 - alpha * q).abs();
    if gap <= 1e-12 {
        return Err(Error::WrongBranch(
            "α = 1/q is critical; use theorem3_scale or theorem2_convolution".into(),
        ));
    }
    Ok(AsymptoticDescriptor {
        scale: base.scale / gap,
        ..*base
    })
}

/// Critical branch for Green-function covariances and `φ ∈ L₂`:
/// `C̃ = C √(2qDd) / ‖φ‖₂`, `β̃ = β − (d+1)/2`.
pub fn theorem3_scale(
    base: &AsymptoticDescriptor,
    q: f64,
    phi_l2_norm: f64,
) -> Result<AsymptoticDescriptor> {
    if !(phi_l2_norm > 0.0 && phi_l2_norm.is_finite()) {
        return Err(Error::Inapplicable(
            "critical small-ball asymptotics need a weight in L₂".into(),
        ));
    }
    let d = base.exponent;
    Ok(AsymptoticDescriptor {
        scale: base.scale * (2.0 * q * base.rate * d).sqrt() / phi_l2_norm,
        power: base.power - 0.5 * (d + 1.0),
        ..*base
    })
}

/// Density form `F′(r) ~ C D d r^{β−d−1} exp(−D r^{−d})`.
pub fn density_asymptotics(desc: &AsymptoticDescriptor) -> AsymptoticDescriptor {
    AsymptoticDescriptor {
        scale: desc.scale * desc.rate * desc.exponent,
        power: desc.power - desc.exponent - 1.0,
        ..*desc
    }
}

/// `C ε^{2β} exp(−D ε^{−2d})`, unclamped.
pub fn eval_asymptotic_raw(desc: &AsymptoticDescriptor, eps: f64) -> f64 {
    desc.eval_r(eps * eps)
}

/// Like [`eval_asymptotic_raw`], clamped to `[0, 1]`. The second value is
/// true when clamping happened, i.e. `ε` is outside the asymptotic regime.
pub fn eval_asymptotic(desc: &AsymptoticDescriptor, eps: f64) -> (f64, bool) {
    let v = eval_asymptotic_raw(desc, eps);
    if v > 1.0 {
        (1.0, true)
    } else {
        (v.max(0.0), false)
    }
}

/// Which closed form produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Theorem1,
    Theorem2,
    Theorem3,
}

/// Small-ball descriptor of a transformed catalog process, choosing the
/// branch from `α`.
pub fn predict(tr: &Transform) -> Result<(AsymptoticDescriptor, Branch)> {
    let process = tr.kernel().process().ok_or_else(|| {
        Error::Unsupported("small-ball prediction needs a catalog base process".into())
    })?;
    let base = process
        .base_small_ball()
        .ok_or_else(|| {
            Error::Unsupported(format!("no base small-ball descriptor for `{process}`"))
        })?
        .descriptor;
    if !is_critical(tr.q(), tr.alpha()) {
        return Ok((theorem1_scale(&base, tr.q(), tr.alpha())?, Branch::Theorem1));
    }
    if process.operator_order().is_none() {
        return Err(Error::Inapplicable(format!(
            "`{process}` is not a Green-function covariance"
        )));
    }
    let norm = tr.weight().l2_norm()?;
    Ok((theorem3_scale(&base, tr.q(), norm)?, Branch::Theorem3))
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size below which a transformed eigenvalue counts as zero.
const ZERO_EIGENVALUE_RTOL: f64 = 1e-9;

/// `∏_{k≤N} λ̃_k/λ_k` over the leading `n` eigenvalues (descending).
///
/// In the critical case the transformed operator has a zero eigenvalue; it
/// is dropped and the product runs over the remaining ones.
pub fn fredholm_ratio(base: &[f64], transformed: &[f64], n: usize, critical: bool) -> Result<f64> {
    let Some(&top) = transformed.first() else {
        return Err(Error::Enumeration("empty transformed spectrum".into()));
    };
    let (kept, zeros): (Vec<f64>, Vec<f64>) = transformed
        .iter()
        .partition(|&&l| l.abs() > ZERO_EIGENVALUE_RTOL * top.abs());
    if !zeros.is_empty() && !critical {
        return Err(Error::Enumeration(format!(
            "{} zero eigenvalue(s) in a non-critical spectrum",
            zeros.len()
        )));
    }
    if critical && zeros.is_empty() {
        return Err(Error::Enumeration(
            "critical spectrum without a zero eigenvalue".into(),
        ));
    }
    if kept.len() < n || base.len() < n {
        return Err(Error::Enumeration(format!(
            "need {n} eigenvalues, have {} base and {} usable transformed",
            base.len(),
            kept.len()
        )));
    }
    let log: f64 = kept[..n]
        .iter()
        .zip(&base[..n])
        .map(|(t, b)| (t / b).ln())
        .sum();
    Ok(log.exp())
}

/// Probe of the contour limit
/// `(1/2π) ∫ ln|γ₁ + γ₂ Σ b_k/(1 − μ_k/(R e^{iθ}))| dθ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JensenProbe {
    pub gamma1: f64,
    pub gamma2: f64,
    pub b: Vec<f64>,
    pub mu: Vec<f64>,
    pub radius: f64,
    pub theta_nodes: usize,
}

/// Largest number of terms taken by [`JensenProbe::from_fn`].
pub const MAX_TERMS: usize = 10_000;

impl JensenProbe {
    /// Truncate `b_k`, `μ_k` (`k ≥ 1`) once `|b_k|` drops below `1e-8` of the
    /// running sum, with at most [`MAX_TERMS`] terms.
    pub fn from_fn(
        gamma1: f64,
        gamma2: f64,
        b: impl Fn(usize) -> f64,
        mu: impl Fn(usize) -> f64,
        radius: f64,
        theta_nodes: usize,
    ) -> Self {
        let mut bs = Vec::new();
        let mut mus = Vec::new();
        let mut total = 0.0;
        for k in 1..=MAX_TERMS {
            let bk = b(k);
            total += bk.abs();
            bs.push(bk);
            mus.push(mu(k));
            if bk.abs() < 1e-8 * total {
                break;
            }
        }
        JensenProbe {
            gamma1,
            gamma2,
            b: bs,
            mu: mus,
            radius,
            theta_nodes,
        }
    }

    fn modulus_log(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let (mut re, mut im) = (0.0, 0.0);
        for (&b, &mu) in self.b.iter().zip(&self.mu) {
            // 1 − (μ/R) e^{−iθ}
            let a = mu / self.radius;
            let dr = 1.0 - a * c;
            let di = a * s;
            let den = dr * dr + di * di;
            re += b * dr / den;
            im -= b * di / den;
        }
        let zr = self.gamma1 + self.gamma2 * re;
        let zi = self.gamma2 * im;
        0.5 * (zr * zr + zi * zi).ln()
    }
}

/// Midpoint (periodic trapezoid) evaluation of the probe.
///
/// A node landing within `1e-14` of a zero of the integrand's argument
/// triggers a shifted, doubled grid; persisting after four refinements is a
/// singular-probe error.
pub fn jensen_limit(probe: &JensenProbe) -> Result<f64> {
    if probe.b.len() != probe.mu.len() || probe.theta_nodes == 0 || !(probe.radius > 0.0) {
        return Err(Error::Config("malformed probe".into()));
    }
    let mut m = probe.theta_nodes;
    for _ in 0..5 {
        let h = 2.0 * PI / m as f64;
        let mut sum = 0.0;
        let mut singular = false;
        for j in 0..m {
            let v = probe.modulus_log(-PI + (j as f64 + 0.5) * h);
            if !v.is_finite() || v < (1e-14f64).ln() {
                singular = true;
                break;
            }
            sum += v;
        }
        if !singular {
            return Ok(sum / m as f64);
        }
        m = 2 * m + 1;
    }
    Err(Error::SingularProbe(
        "integrand vanishes on the contour at every refinement".into(),
    ))
}

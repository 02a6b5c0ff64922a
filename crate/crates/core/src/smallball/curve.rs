use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{density_asymptotics, AsymptoticDescriptor};
use crate::error::{Error, Result};
use crate::quadrature::Rule;

/// Minimum number of curve nodes in `(0, r]` for the convolution formulas.
const MIN_NODES_BELOW: usize = 64;

/// A tabulated distribution function `F(r)` of `‖X‖²` on an ascending grid,
/// with an optional tabulated density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCurve {
    pub r: Vec<f64>,
    pub cdf: Vec<f64>,
    pub density: Option<Vec<f64>>,
}

impl DistributionCurve {
    pub fn new(r: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        Self::build(r, cdf, None)
    }

    pub fn with_density(r: Vec<f64>, cdf: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        Self::build(r, cdf, Some(density))
    }

    fn build(r: Vec<f64>, cdf: Vec<f64>, density: Option<Vec<f64>>) -> Result<Self> {
        if r.len() < 2 || r.len() != cdf.len() {
            return Err(Error::Config(
                "curve needs at least two points and matching lengths".into(),
            ));
        }
        if density.as_ref().is_some_and(|d| d.len() != r.len()) {
            return Err(Error::Config("density length does not match grid".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "curve grid must be non-negative and strictly ascending".into(),
            ));
        }
        if cdf.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("curve values must be finite".into()));
        }
        Ok(DistributionCurve { r, cdf, density })
    }

    /// Tabulate `f` on `n` uniform points of `[0, r_max]`.
    pub fn from_fn(r_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let r: Vec<f64> = (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect();
        let cdf = r.iter().map(|&x| f(x)).collect();
        Self::new(r, cdf)
    }

    /// The leading-order asymptotic `F` and `F′` of `desc` on `[0, r_max]`.
    pub fn from_descriptor(desc: &AsymptoticDescriptor, r_max: f64, n: usize) -> Result<Self> {
        desc.validate()?;
        let dens = density_asymptotics(desc);
        let r: Vec<f64> = (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect();
        let at = |d: &AsymptoticDescriptor, x: f64| if x > 0.0 { d.eval_r(x) } else { 0.0 };
        let cdf = r.iter().map(|&x| at(desc, x)).collect();
        let density = r.iter().map(|&x| at(&dens, x)).collect();
        Self::with_density(r, cdf, density)
    }

    /// Empirical distribution function of `samples` on the grid `r`.
    pub fn from_samples(samples: &[f64], r: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("no samples".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let cdf = r
            .iter()
            .map(|&x| sorted.partition_point(|&s| s <= x) as f64 / n)
            .collect();
        Self::new(r, cdf)
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn locate(&self, x: f64) -> usize {
        self.r
            .partition_point(|&v| v <= x)
            .clamp(1, self.r.len() - 1)
            - 1
    }

    /// Piecewise-linear interpolation of `F`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.r[0] {
            return if x == self.r[0] { self.cdf[0] } else { 0.0 };
        }
        if x >= self.r_max() {
            return *self.cdf.last().unwrap();
        }
        let i = self.locate(x);
        let s = (x - self.r[i]) / (self.r[i + 1] - self.r[i]);
        self.cdf[i] + s * (self.cdf[i + 1] - self.cdf[i])
    }

    /// `F′(x)`: interpolated density when tabulated, otherwise the slope of
    /// the piecewise-linear `F`.
    pub fn density_at(&self, x: f64) -> f64 {
        let i = self.locate(x);
        match &self.density {
            Some(d) => {
                let s = ((x - self.r[i]) / (self.r[i + 1] - self.r[i])).clamp(0.0, 1.0);
                d[i] + s * (d[i + 1] - d[i])
            }
            None => (self.cdf[i + 1] - self.cdf[i]) / (self.r[i + 1] - self.r[i]),
        }
    }

    fn check_resolution(&self, r: f64) -> Result<()> {
        if r > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::Resolution(format!(
                "r = {r} lies beyond the curve (r_max = {})",
                self.r_max()
            )));
        }
        let below = self.r.iter().filter(|&&x| x > 0.0 && x <= r).count();
        if below < MIN_NODES_BELOW {
            return Err(Error::Resolution(format!(
                "only {below} curve nodes in (0, {r}], need {MIN_NODES_BELOW}"
            )));
        }
        Ok(())
    }
}

/// Critical-case small-ball value from the base curve:
/// `F̃(r) ≈ (√q/‖φ‖) √(2/π) ∫₀^r F′(x) (r−x)^{−1/2} dx`,
/// computed as `2√r ∫₀¹ F′(r(1−y²)) dy`.
pub fn theorem2_convolution(
    curve: &DistributionCurve,
    q: f64,
    phi_l2_norm: f64,
    r: f64,
) -> Result<f64> {
    if !(phi_l2_norm > 0.0 && phi_l2_norm.is_finite()) {
        return Err(Error::Inapplicable(
            "the convolution formula needs a weight in L₂".into(),
        ));
    }
    curve.check_resolution(r)?;
    let rule = Rule::new(8);
    let integral = rule.integrate_composite(0.0, 1.0, 256, |y| curve.density_at(r * (1.0 - y * y)));
    Ok(q.sqrt() / phi_l2_norm * (2.0 / PI).sqrt() * 2.0 * r.sqrt() * integral)
}

/// The same prefactor applied to `∫₀^{ε²} (d/dt) P{‖X‖ ≤ t} (ε² − t²)^{−1/2} dt`,
/// a literal transcription in the `ε` variable with upper limit `ε²`.
///
/// This does not agree with [`theorem2_convolution`]; it is kept only for
/// comparison.
pub fn theorem2_display_form(
    curve: &DistributionCurve,
    q: f64,
    phi_l2_norm: f64,
    eps: f64,
) -> Result<f64> {
    if !(phi_l2_norm > 0.0 && phi_l2_norm.is_finite()) {
        return Err(Error::Inapplicable(
            "the convolution formula needs a weight in L₂".into(),
        ));
    }
    let upper = eps * eps;
    if upper >= eps {
        return Err(Error::Config("the display form needs ε < 1".into()));
    }
    curve.check_resolution(upper * upper)?;
    let rule = Rule::new(8);
    let integral = rule.integrate_composite(0.0, upper, 256, |t| {
        2.0 * t * curve.density_at(t * t) / (eps * eps - t * t).sqrt()
    });
    Ok(q.sqrt() / phi_l2_norm * (2.0 / PI).sqrt() * integral)
}

/// Remove the first KL term from a distribution function.
///
/// Given `F` of `λ₁ξ² + Y` on a grid starting at 0, returns `F_Y` on the
/// same grid via `F_Y(r) = √(2λ₁/π) e^{−r/2λ₁} ∫₀^r H′(x)/√(r−x) dx` with
/// `H(x) = e^{x/2λ₁} F(x)`, using product integration for piecewise-linear `H`.
pub fn deconvolve_first(curve: &DistributionCurve, lambda1: f64) -> Result<DistributionCurve> {
    if !(lambda1 > 0.0) {
        return Err(Error::Config("λ₁ must be positive".into()));
    }
    if curve.r[0] != 0.0 {
        return Err(Error::Config(
            "deconvolution needs a curve starting at r = 0".into(),
        ));
    }
    let c = 0.5 / lambda1;
    let x = &curve.r;
    let h: Vec<f64> = x
        .iter()
        .zip(&curve.cdf)
        .map(|(&xi, &f)| (c * xi).exp() * f)
        .collect();
    let slopes: Vec<f64> = (0..x.len() - 1)
        .map(|i| (h[i + 1] - h[i]) / (x[i + 1] - x[i]))
        .collect();
    let pref = (2.0 * lambda1 / PI).sqrt();
    let mut out = Vec::with_capacity(x.len());
    for (j, &rj) in x.iter().enumerate() {
        if j == 0 {
            out.push(curve.cdf[0]);
            continue;
        }
        let mut acc = h[0] / rj.sqrt();
        for i in 0..j {
            acc += slopes[i] * 2.0 * ((rj - x[i]).sqrt() - (rj - x[i + 1]).sqrt());
        }
        let v = pref * (-c * rj).exp() * acc;
        if v < -1e-6 {
            return Err(Error::Instability(format!(
                "deconvolved distribution is negative ({v:.3e}) at r = {rj}"
            )));
        }
        out.push(v);
    }
    DistributionCurve::new(x.clone(), out)
}

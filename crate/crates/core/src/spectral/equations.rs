use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, norm_cdf, norm_pdf, NORMAL_CUTOFF};

/// Member of the example catalog with a closed-form eigen-equation.
///
/// * `Ex1`: Wiener process, constant weight.
/// * `Ex2`: Brownian bridge, constant weight.
/// * `Ex3`: Brownian bridge, weight `t − t²`.
/// * `Ex4`: integrated centered Wiener process, constant weight.
/// * `Ex5`: Brownian bridge, weight `1/ϕ(Φ⁻¹(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Example {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
}

impl Example {
    /// True when the equation is written in `τ = ω/2`.
    pub fn uses_tau(self) -> bool {
        matches!(self, Example::Ex2 | Example::Ex3 | Example::Ex4)
    }

    /// `λ` from a root `x` of the equation.
    pub fn eigenvalue(self, x: f64) -> f64 {
        match self {
            Example::Ex1 | Example::Ex5 => x.powi(-2),
            Example::Ex2 | Example::Ex3 => (2.0 * x).powi(-2),
            Example::Ex4 => (2.0 * x).powi(-4),
        }
    }

    /// `q` of the canonical weight of the example.
    pub fn canonical_q(self) -> f64 {
        match self {
            Example::Ex1 => 1.0 / 3.0,
            Example::Ex2 => 1.0 / 12.0,
            Example::Ex3 => 17.0 / 5040.0,
            Example::Ex4 => 1.0 / 120.0,
            Example::Ex5 => 1.0,
        }
    }

    pub fn has_first_branch(self) -> bool {
        self != Example::Ex1
    }
}

/// The `Q`-independent sine family (`First`) or the `Q`-dependent equation
/// (`Second`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationBranch {
    First,
    Second,
}

/// One eigen-equation: example, `Q` of the canonical weight, branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenEquationSpec {
    pub example: Example,
    pub big_q: f64,
    pub branch: EquationBranch,
}

impl EigenEquationSpec {
    pub fn new(example: Example, big_q: f64, branch: EquationBranch) -> Result<Self> {
        if !big_q.is_finite() {
            return Err(Error::Config(format!("Q must be finite, got {big_q}")));
        }
        if branch == EquationBranch::First && !example.has_first_branch() {
            return Err(Error::Config(format!("{example:?} has a single equation")));
        }
        Ok(EigenEquationSpec {
            example,
            big_q,
            branch,
        })
    }

    /// LHS − RHS at `x` (`ω` for Ex1 and Ex5, `τ` otherwise). For Ex5 this
    /// is the 3×3 determinant, or `sin ω` when `Q = 0`.
    pub fn residual(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Precondition(format!("x must be positive, got {x}")));
        }
        if self.example == Example::Ex5 && self.branch == EquationBranch::Second {
            if self.big_q == 0.0 {
                return Ok(x.sin());
            }
            let (a, s, d) = NormalQuantileIntegrals::at(x);
            let q = self.big_q;
            return Ok(-a * (s * x.sin() + a * x.cos()) / x + (-1.0 / (x * x * q) + d) * x.sin());
        }
        Ok(self.scaled(x, None).0)
    }

    /// Residual and a magnitude scale for relative tests, in a form that is
    /// continuous on `(0, ∞)`.
    ///
    /// For the Ex5 determinant this is `R(ω)/sin(ω/2)` with
    /// `R = −ω²Q·det`; the division removes the roots `ω = 2πk` that
    /// belong to the first branch.
    pub(crate) fn scaled(&self, x: f64, ex5: Option<(f64, f64, f64)>) -> (f64, f64) {
        let q = self.big_q;
        let (s, c) = x.sin_cos();
        match (self.example, self.branch) {
            (Example::Ex5, EquationBranch::First) => ((0.5 * x).sin(), 1.0),
            (_, EquationBranch::First) => (s, 1.0),
            (Example::Ex1, _) => {
                let k = 1.0 + q / 3.0;
                (
                    q * s - c * (q * x + k * x.powi(3)),
                    q.abs() * (1.0 + x) + k.abs() * x.powi(3),
                )
            }
            (Example::Ex2, _) => {
                let k = 4.0 + q / 3.0;
                (
                    q * s - c * (q * x + k * x.powi(3)),
                    q.abs() * (1.0 + x) + k.abs() * x.powi(3),
                )
            }
            (Example::Ex3, _) => {
                let qq = Example::Ex3.canonical_q();
                let k7 = 16.0 * (1.0 + q * qq);
                let poly =
                    q * x + q * x.powi(3) / 3.0 + 2.0 * q * x.powi(5) / 15.0 + k7 * x.powi(7);
                let mag = q.abs() * (1.0 + x + x.powi(3) / 3.0 + 2.0 * x.powi(5) / 15.0)
                    + k7.abs() * x.powi(7);
                (q * s - c * poly, mag)
            }
            (Example::Ex4, _) => {
                let k5 = 32.0 + 4.0 * q / 15.0;
                let th = x.tanh();
                (
                    q * (s + c * th) - c * (2.0 * q * x + k5 * x.powi(5)),
                    q.abs() * (2.0 + 2.0 * x) + k5.abs() * x.powi(5),
                )
            }
            (Example::Ex5, _) => {
                let (a, si, d) = ex5.unwrap_or_else(|| NormalQuantileIntegrals::at(x));
                let (sh, ch) = (0.5 * x).sin_cos();
                // sin ω / sin(ω/2) = 2 cos(ω/2)
                let lead = 2.0 * ch * (1.0 - q * x * x * d);
                let tail = q * x * a * (2.0 * si * ch + a * c / sh);
                let mag = 2.0 * (1.0 + (q * x * x * d).abs())
                    + (q * x * a).abs() * (2.0 * si.abs() + (a / sh).abs());
                (lead + tail, mag)
            }
        }
    }
}

/// The integrals of Φ⁻¹ entering the Ex5 determinant:
/// `A = ∫Φ⁻¹(τ) cos ωτ dτ`, `S = ∫Φ⁻¹(τ) sin ωτ dτ` and
/// `D = ∬_{t<τ} Φ⁻¹(τ)Φ⁻¹(t) sin(ω(t−τ))/ω dt dτ`, all over `(0, 1)`.
pub struct NormalQuantileIntegrals;

impl NormalQuantileIntegrals {
    const ORDER: usize = 8;
    const BASE_PANELS: usize = 64;

    /// `(A, S, D)` at `ω`, computed in `x = Φ⁻¹(τ)` on `[−8, 8]`.
    ///
    /// 512 nodes for `ω ≤ 40`; the panel count grows with `ω` to keep the
    /// oscillation per panel bounded.
    pub fn at(omega: f64) -> (f64, f64, f64) {
        let panels = Self::BASE_PANELS * (omega / 40.0).ceil().max(1.0) as usize;
        let (gx, gw) = gauss_legendre(Self::ORDER);
        let lo = -NORMAL_CUTOFF;
        let h = 2.0 * NORMAL_CUTOFF / panels as f64;
        // y ϕ(y) cos/sin(ω Φ(y)), the integrands of Ic and Is in x
        let f = |y: f64| {
            let m = y * norm_pdf(y);
            let (s, c) = (omega * norm_cdf(y)).sin_cos();
            (m * c, m * s)
        };
        let (mut a, mut s, mut d) = (0.0, 0.0, 0.0);
        // running integrals up to the left end of the current panel
        let (mut ic0, mut is0) = (0.0, 0.0);
        for p in 0..panels {
            let left = lo + p as f64 * h;
            let (mut ic_panel, mut is_panel) = (0.0, 0.0);
            for (xi, wi) in gx.iter().zip(&gw) {
                let x = left + 0.5 * h * (xi + 1.0);
                let w = 0.5 * h * wi;
                let (fc, fs) = f(x);
                a += w * fc;
                s += w * fs;
                ic_panel += w * fc;
                is_panel += w * fs;
                // partial integral over [left, x]
                let half = 0.5 * (x - left);
                let (mut ic, mut is) = (ic0, is0);
                for (yj, vj) in gx.iter().zip(&gw) {
                    let (pc, ps) = f(left + half * (yj + 1.0));
                    ic += half * vj * pc;
                    is += half * vj * ps;
                }
                d += w * (fc * is - fs * ic);
            }
            ic0 += ic_panel;
            is0 += is_panel;
        }
        (a, s, d / omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{norm_inv_cdf, Rule};
    use std::f64::consts::PI;

    fn spec(e: Example, q: f64, b: EquationBranch) -> EigenEquationSpec {
        EigenEquationSpec::new(e, q, b).unwrap()
    }

    #[test]
    fn reductions_at_special_points() {
        use EquationBranch::*;
        assert!(
            spec(Example::Ex1, 0.0, Second)
                .residual(PI / 2.0)
                .unwrap()
                .abs()
                < 1e-12
        );
        // tan x = x, first positive root
        let x = 4.493409457909064;
        assert!(spec(Example::Ex2, -12.0, Second).residual(x).unwrap().abs() < 1e-10);
        assert!(spec(Example::Ex1, -3.0, Second).residual(x).unwrap().abs() < 1e-10);
        assert!(
            spec(Example::Ex4, 0.0, Second)
                .residual(PI / 2.0)
                .unwrap()
                .abs()
                < 1e-10
        );
        assert!(spec(Example::Ex3, 1.0, First).residual(PI).unwrap().abs() < 1e-15);
        assert!(spec(Example::Ex5, 0.0, Second).residual(PI).unwrap().abs() < 1e-15);
        assert!(EigenEquationSpec::new(Example::Ex1, 0.0, First).is_err());
        assert!(spec(Example::Ex2, 1.0, Second).residual(0.0).is_err());
    }

    #[test]
    fn double_root_sequence() {
        for k in 1..=5 {
            let kpi = k as f64 * PI;
            let qk = -12.0 / (1.0 + 3.0 / (kpi * kpi));
            let r = spec(Example::Ex2, qk, EquationBranch::Second)
                .residual(kpi)
                .unwrap();
            assert!(r.abs() < 1e-9 * kpi.powi(3), "k={k}: {r}");
        }
    }

    #[test]
    fn normal_quantile_integrals_match_direct_quadrature() {
        // direct integration in τ with the endpoint singularities of Φ⁻¹
        // handled by many small panels near the ends
        let rule = Rule::new(16);
        let breaks: Vec<f64> = {
            let mut b = vec![0.0];
            for e in (1..=12).rev() {
                b.push(10f64.powi(-e));
            }
            for i in 1..200 {
                b.push(i as f64 / 200.0);
            }
            for e in 1..=12 {
                b.push(1.0 - 10f64.powi(-e));
            }
            b.push(1.0);
            b.sort_by(f64::total_cmp);
            b.dedup();
            b
        };
        for omega in [1.3, 2.0 * PI, 7.7, 25.0] {
            let (a, s, d) = NormalQuantileIntegrals::at(omega);
            let a_ref = rule.integrate_pieces(&breaks, |t| norm_inv_cdf(t) * (omega * t).cos());
            let s_ref = rule.integrate_pieces(&breaks, |t| norm_inv_cdf(t) * (omega * t).sin());
            assert!((a - a_ref).abs() < 1e-9, "A at {omega}: {a} vs {a_ref}");
            assert!((s - s_ref).abs() < 1e-9, "S at {omega}: {s} vs {s_ref}");
            // D through the antiderivatives of Φ⁻¹ sin and Φ⁻¹ cos
            let inner = |tau: f64| {
                let sub: Vec<f64> = breaks
                    .iter()
                    .copied()
                    .filter(|&b| b < tau)
                    .chain([tau])
                    .collect();
                let ic = rule.integrate_pieces(&sub, |t| norm_inv_cdf(t) * (omega * t).cos());
                let is = rule.integrate_pieces(&sub, |t| norm_inv_cdf(t) * (omega * t).sin());
                norm_inv_cdf(tau) * ((omega * tau).cos() * is - (omega * tau).sin() * ic) / omega
            };
            let coarse = &breaks;
            let d_ref = Rule::new(12).integrate_pieces(coarse, inner);
            assert!((d - d_ref).abs() < 1e-7, "D at {omega}: {d} vs {d_ref}");
        }
        let (a, _, _) = NormalQuantileIntegrals::at(4.0 * PI);
        assert!(a.abs() < 1e-13);
    }

    #[test]
    fn determinant_forms_agree() {
        let sp = spec(Example::Ex5, -2.5, EquationBranch::Second);
        for omega in [1.0, 3.3, 7.0, 11.9] {
            let det = sp.residual(omega).unwrap();
            let (reg, _) = sp.scaled(omega, None);
            // R = −ω²Q det and the scaled form is R / sin(ω/2)
            let r = -omega * omega * sp.big_q * det;
            assert!((reg - r / (0.5 * omega).sin()).abs() < 1e-10 * r.abs().max(1.0));
        }
    }
}

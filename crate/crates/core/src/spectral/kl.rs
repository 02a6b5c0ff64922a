use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::equations::Example;
use super::roots::{solve_roots, RootBranch};
use super::{
    normalize, nystrom_spectrum, ClosedForm, EigenFunction, EigenLabel, Provenance, Spectrum,
    SpectrumPart,
};
use crate::error::Result;
use crate::kernel::Process;
use crate::quadrature::{gauss_legendre, norm_cdf, norm_inv_cdf, norm_pdf, NORMAL_CUTOFF};
use crate::transform::Transform;
use crate::weight::{Polynomial, WeightPart};

/// Smallest grid used when falling back to the Nyström oracle.
const FALLBACK_GRID: usize = 1024;
/// Bridge modes in the resolvent series of the normal-quantile example.
const RESOLVENT_TERMS: usize = 256;

/// A transform recognized as a catalog example with weight `c·φ_example`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleMatch {
    pub example: Example,
    /// The multiple `c`.
    pub scale: f64,
    /// `Q` of the equivalent transform with the canonical weight, `Q c²`.
    pub canonical_q: f64,
}

pub fn identify_example(tr: &Transform) -> Option<ExampleMatch> {
    let process = tr.kernel().process()?;
    let found = |example, scale: f64| {
        Some(ExampleMatch {
            example,
            scale,
            canonical_q: tr.big_q() * scale * scale,
        })
    };
    if let [WeightPart::NormalQuantile { coef }] = tr.weight().parts() {
        return match process {
            Process::BrownianBridge => found(Example::Ex5, *coef),
            _ => None,
        };
    }
    let p = tr.weight().as_polynomial()?;
    let one = Polynomial::constant(1.0);
    let hump = Polynomial::new(vec![0.0, 1.0, -1.0]);
    match process {
        Process::Wiener => found(Example::Ex1, p.multiple_of(&one)?),
        Process::BrownianBridge => {
            if let Some(c) = p.multiple_of(&one) {
                found(Example::Ex2, c)
            } else {
                found(Example::Ex3, p.multiple_of(&hump)?)
            }
        }
        Process::IntegratedCenteredWiener => found(Example::Ex4, p.multiple_of(&one)?),
        _ => None,
    }
}

/// The first `count` eigenpairs of the transformed covariance.
///
/// Catalog examples are assembled from the roots of their eigen-equations;
/// anything else goes to the Nyström oracle on the transformed kernel.
pub fn transformed_kl(tr: &Transform, count: usize) -> Result<Spectrum> {
    let Some(m) = identify_example(tr) else {
        let size = FALLBACK_GRID.max(4 * count);
        return nystrom_spectrum(&tr.transformed_kernel(), size, count);
    };
    let grid = tr.grid().clone();
    let roots = solve_roots(m.example, m.canonical_q, count)?;
    let resolvent = (m.example == Example::Ex5 && m.canonical_q != 0.0).then(ResolventBasis::new);
    let mut parts: Vec<SpectrumPart> = Vec::new();
    for root in &roots.roots {
        if parts.len() >= count {
            break;
        }
        let lambda = m.example.eigenvalue(root.x);
        let label = |branch: u8| EigenLabel {
            branch: Some(branch),
            root: Some(root.x),
            multiplicity: root.multiplicity,
        };
        if matches!(root.branch, RootBranch::First | RootBranch::Both) {
            let w = if m.example == Example::Ex5 {
                root.x
            } else {
                2.0 * root.x
            };
            let f = ClosedForm::new(
                move |t| SQRT_2 * (w * t).sin(),
                Some(Arc::new(move |t| SQRT_2 * w * (w * t).cos())),
            );
            parts.push((lambda, grid.sample(|t| f.value(t)), Arc::new(f), label(1)));
        }
        if matches!(root.branch, RootBranch::Second | RootBranch::Both) {
            let f = match &resolvent {
                Some(basis) => basis.eigenfunction(lambda),
                None => second_branch(m.example, root.x),
            };
            let mut values = grid.sample(|t| f.value(t));
            let c = normalize(&grid, &mut values);
            parts.push((lambda, values, Arc::new(f.scaled(c)), label(2)));
        }
    }
    let mut s = Spectrum::from_parts(grid, Provenance::Analytic, parts);
    s.truncate(count);
    Ok(s)
}

/// Unnormalized closed-form eigenfunction of the `Q`-dependent family.
fn second_branch(example: Example, x: f64) -> ClosedForm {
    match example {
        Example::Ex1 => ClosedForm::new(
            move |t| (x * (1.0 - t)).cos() - x.cos(),
            Some(Arc::new(move |t| x * (x * (1.0 - t)).sin())),
        ),
        Example::Ex2 => ClosedForm::new(
            move |t| (x * (1.0 - 2.0 * t)).cos() - x.cos(),
            Some(Arc::new(move |t| 2.0 * x * (x * (1.0 - 2.0 * t)).sin())),
        ),
        Example::Ex3 => ClosedForm::new(
            move |t| (x * (1.0 - 2.0 * t)).cos() - x.cos() + 2.0 * x * x * (t * t - t) * x.cos(),
            Some(Arc::new(move |t| {
                2.0 * x * (x * (1.0 - 2.0 * t)).sin() + 2.0 * x * x * (2.0 * t - 1.0) * x.cos()
            })),
        ),
        Example::Ex4 => {
            // cosh(x(1−2t))/cosh x written with decaying exponentials
            let den = 1.0 + (-2.0 * x).exp();
            ClosedForm::new(
                move |t| {
                    let ch = ((-2.0 * x * t).exp() + (-2.0 * x * (1.0 - t)).exp()) / den;
                    (x * (1.0 - 2.0 * t)).cos() + x.cos() * ch - 2.0 * x.cos()
                },
                Some(Arc::new(move |t| {
                    let dch = 2.0 * x * ((-2.0 * x * (1.0 - t)).exp() - (-2.0 * x * t).exp()) / den;
                    2.0 * x * (x * (1.0 - 2.0 * t)).sin() + x.cos() * dch
                })),
            )
        }
        Example::Ex5 => {
            // only reached for Q = 0, where the family is the odd bridge modes
            ClosedForm::new(
                move |t| SQRT_2 * (x * t).sin(),
                Some(Arc::new(move |t| SQRT_2 * x * (x * t).cos())),
            )
        }
    }
}

/// Resolvent expansion `u ∝ ψ + Σ_k a_k λ_k/(λ̃ − λ_k) u_k` over the bridge
/// modes, with `ψ = ϕ(Φ⁻¹(t))` and `a_k = ⟨ψ, u_k⟩`.
struct ResolventBasis {
    /// `(k, a_k)` for the odd `k` (even ones vanish by symmetry).
    coefs: Arc<Vec<(usize, f64)>>,
}

impl ResolventBasis {
    fn new() -> Self {
        // a_k = √2 ∫ ϕ(x)² sin(kπ Φ(x)) dx over |x| ≤ 8
        let panels = 2048;
        let (gx, gw) = gauss_legendre(8);
        let h = 2.0 * NORMAL_CUTOFF / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 8);
        for p in 0..panels {
            let left = -NORMAL_CUTOFF + p as f64 * h;
            for (xi, wi) in gx.iter().zip(&gw) {
                let x = left + 0.5 * h * (xi + 1.0);
                let d = norm_pdf(x);
                nodes.push((norm_cdf(x), 0.5 * h * wi * d * d));
            }
        }
        let coefs = (1..=RESOLVENT_TERMS)
            .step_by(2)
            .map(|k| {
                let w = k as f64 * PI;
                let a = SQRT_2 * nodes.iter().map(|(c, m)| m * (w * c).sin()).sum::<f64>();
                (k, a)
            })
            .collect();
        ResolventBasis {
            coefs: Arc::new(coefs),
        }
    }

    fn eigenfunction(&self, lambda: f64) -> ClosedForm {
        let c: Vec<(f64, f64)> = self
            .coefs
            .iter()
            .map(|&(k, a)| {
                let w = k as f64 * PI;
                let lk = w.powi(-2);
                (w, a * lk / (lambda - lk))
            })
            .collect();
        let c = Arc::new(c);
        let cd = c.clone();
        ClosedForm::new(
            move |t| {
                let psi = if t <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    norm_pdf(norm_inv_cdf(t))
                };
                psi + c
                    .iter()
                    .map(|(w, ck)| ck * SQRT_2 * (w * t).sin())
                    .sum::<f64>()
            },
            Some(Arc::new(move |t| {
                -norm_inv_cdf(t)
                    + cd.iter()
                        .map(|(w, ck)| ck * SQRT_2 * w * (w * t).cos())
                        .sum::<f64>()
            })),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::quadrature::Grid;
    use crate::spectral::{nystrom_eigenvalues, nystrom_spectrum};
    use crate::weight::Weight;

    fn transform(process: Process, weight: &Weight, alpha: f64) -> Transform {
        Transform::with_grid(
            &Kernel::catalog(process),
            weight,
            alpha,
            Grid::gauss_legendre(1024),
        )
        .unwrap()
    }

    fn examples() -> Vec<(Process, Weight)> {
        vec![
            (Process::Wiener, Weight::constant(1.0)),
            (Process::BrownianBridge, Weight::constant(1.0)),
            (
                Process::BrownianBridge,
                Weight::parse("poly:t-t^2").unwrap(),
            ),
            (Process::IntegratedCenteredWiener, Weight::constant(1.0)),
            (Process::BrownianBridge, Weight::normal_quantile()),
        ]
    }

    #[test]
    fn examples_are_recognized() {
        let want = [
            Example::Ex1,
            Example::Ex2,
            Example::Ex3,
            Example::Ex4,
            Example::Ex5,
        ];
        for ((p, w), e) in examples().into_iter().zip(want) {
            let m = identify_example(&transform(p, &w, 1.0)).unwrap();
            assert_eq!(m.example, e);
            assert!((m.scale - 1.0).abs() < 1e-15);
        }
        let tr = transform(
            Process::BrownianBridge,
            &Weight::parse("poly:2*t-2*t^2").unwrap(),
            1.0,
        );
        let m = identify_example(&tr).unwrap();
        assert_eq!(m.example, Example::Ex3);
        assert!((m.scale - 2.0).abs() < 1e-15);
        assert!((m.canonical_q - 4.0 * tr.big_q()).abs() < 1e-15);
        let tr = transform(Process::Wiener, &Weight::parse("poly:t").unwrap(), 1.0);
        assert!(identify_example(&tr).is_none());
    }

    #[test]
    fn zero_q_gives_the_base_spectrum() {
        let tr = transform(Process::BrownianBridge, &Weight::constant(1.0), 0.0);
        let s = transformed_kl(&tr, 12).unwrap();
        for (k, l) in s.eigenvalues.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI).powi(-2);
            assert!((l - exact).abs() < 1e-12 * exact, "k={k}");
        }
    }

    #[test]
    fn analytic_spectra_match_the_oracle() {
        for (p, w) in examples() {
            for alpha in [-2.0, 1.0, 3.0, 7.5] {
                let tr = transform(p, &w, alpha);
                if tr.is_critical() {
                    continue;
                }
                let s = transformed_kl(&tr, 10).unwrap();
                let ny = nystrom_eigenvalues(&tr.transformed_kernel(), 1000).unwrap();
                for k in 0..10 {
                    let rel = (s.eigenvalues[k] - ny[k]).abs() / ny[k];
                    assert!(
                        rel < 1e-3,
                        "{p} {w:?} α={alpha} k={k}: {} vs {}",
                        s.eigenvalues[k],
                        ny[k]
                    );
                }
                assert!(s.orthonormality_defect() < 1e-6, "{p} α={alpha}");
            }
        }
    }

    #[test]
    fn eigenfunctions_solve_the_integral_equation() {
        // ∫ G̃(t, s) u(s) ds by a rule split at s = t, against λ u(t)
        let rule = crate::quadrature::Rule::new(24);
        for (p, w) in examples() {
            let tr = transform(p, &w, 2.5);
            let s = transformed_kl(&tr, 6).unwrap();
            let kernel = tr.transformed_kernel();
            for k in 0..6 {
                let mut worst: f64 = 0.0;
                for t in [0.05, 0.31, 0.5, 0.77, 0.98] {
                    let gu = rule.integrate_composite(0.0, t, 8, |x| {
                        kernel.eval(t, x) * s.value(k, x).unwrap()
                    }) + rule.integrate_composite(t, 1.0, 8, |x| {
                        kernel.eval(t, x) * s.value(k, x).unwrap()
                    });
                    worst = worst.max((gu - s.eigenvalues[k] * s.value(k, t).unwrap()).abs());
                }
                let tol = if p == Process::BrownianBridge && w.as_density().is_none() {
                    1e-8
                } else {
                    1e-12
                };
                assert!(worst < tol * s.eigenvalues[0], "{p} {w:?} k={k}: {worst}");
            }
        }
    }

    #[test]
    fn double_root_yields_two_eigenpairs() {
        let qk = -12.0 / (1.0 + 3.0 / (PI * PI));
        // Q = qα² − 2α with q = 1/12
        let alpha = 12.0 * (1.0 - (1.0 + qk / 12.0).sqrt());
        let tr = transform(Process::BrownianBridge, &Weight::constant(1.0), alpha);
        assert!((tr.big_q() - qk).abs() < 1e-12);
        let s = transformed_kl(&tr, 6).unwrap();
        let target = (2.0 * PI).powi(-2);
        let hits = s
            .eigenvalues
            .iter()
            .filter(|l| (*l - target).abs() < 1e-12)
            .count();
        assert_eq!(hits, 2);
        assert!(s.orthonormality_defect() < 1e-8);
        let ny = nystrom_spectrum(&tr.transformed_kernel(), 1024, 4).unwrap();
        assert!(
            (ny.eigenvalues[0] - target).abs() < 1e-6 && (ny.eigenvalues[1] - target).abs() < 1e-6
        );
    }

    #[test]
    fn fallback_uses_the_oracle() {
        let tr = transform(Process::Wiener, &Weight::parse("poly:t").unwrap(), 1.0);
        let s = transformed_kl(&tr, 5).unwrap();
        assert_eq!(s.provenance, Provenance::Nystrom);
    }
}

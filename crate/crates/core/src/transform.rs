//! The one-parameter transform `X ↦ X − α ψ ⟨φ, X⟩` at the covariance
//! level, and its two-parameter extension.
//!
//! For a kernel `G` and weight `φ`:
//!
//! ```text
//! ψ(t) = ∫ G(t, s) φ(s) ds        q = ⟨φ, ψ⟩        Q = q α² − 2α
//! transformed covariance:  G(t, s) + Q ψ(t) ψ(s)
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, RankOneFactor, Side};
use crate::quadrature::{
    norm_cdf, norm_inv_cdf, Grid, Rule, DEFAULT_GRID_SIZE, NORMAL_CUTOFF, PIECE_ORDER,
};
use crate::weight::{Weight, WeightFn, WeightPart};

/// Relative tolerance on `|αq − 1|` for the critical branch.
pub const CRITICAL_RTOL: f64 = 1e-12;

/// Tolerance for the cross-coupling `∬ G φ₁ φ₂` of two-parameter transforms.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

const NORMAL_PANELS: usize = 48;
const Q_PANELS: usize = 32;

/// `ψ = 𝔊φ` as a pointwise-evaluable function.
#[derive(Debug)]
pub struct Psi {
    kernel: Kernel,
    weight: Weight,
    rule: Rule,
}

impl Psi {
    pub fn new(kernel: &Kernel, weight: &Weight) -> Self {
        Psi {
            kernel: kernel.clone(),
            weight: weight.clone(),
            rule: Rule::new(PIECE_ORDER),
        }
    }

    fn breaks_at(&self, t: f64, f: &WeightFn) -> Vec<f64> {
        let mut b = vec![0.0, 1.0];
        if t > 0.0 && t < 1.0 {
            b.push(t);
        }
        b.extend(self.kernel.kinks());
        b.extend(f.breakpoints());
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `∫ h(s) dx` with `s = Φ(x)` over `|x| ≤ 8`, split where `s = t`.
    fn normal_integral(&self, t: f64, mut h: impl FnMut(f64) -> f64) -> f64 {
        let xt = norm_inv_cdf(t).clamp(-NORMAL_CUTOFF, NORMAL_CUTOFF);
        let mut g = |x: f64| h(norm_cdf(x));
        self.rule
            .integrate_composite(-NORMAL_CUTOFF, xt, NORMAL_PANELS, &mut g)
            + self
                .rule
                .integrate_composite(xt, NORMAL_CUTOFF, NORMAL_PANELS, &mut g)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.weight
            .parts()
            .iter()
            .map(|part| match part {
                WeightPart::Density(f) => {
                    let k = &self.kernel;
                    self.rule
                        .integrate_pieces(&self.breaks_at(t, f), |s| k.eval(t, s) * f.eval(s))
                }
                WeightPart::PointMass { at, coef } => coef * self.kernel.eval(t, *at),
                WeightPart::Dipole { at, coef } => {
                    -coef * one_sided_mean(|side| self.kernel.partial_s(t, *at, side), t, *at)
                }
                WeightPart::NormalQuantile { coef } => {
                    coef * self.normal_integral(t, |s| self.kernel.eval(t, s))
                }
            })
            .sum()
    }

    /// `ψ′(t)`. At an atom location the side selects the one-sided limit.
    pub fn derivative_at(&self, t: f64, side: Option<Side>) -> Result<f64> {
        let k = &self.kernel;
        let mut total = 0.0;
        for part in self.weight.parts() {
            total += match part {
                // ∂_t G(t, s) = (∂_s G)(s, t)
                WeightPart::Density(f) => {
                    let mut err = None;
                    let v = self.rule.integrate_pieces(&self.breaks_at(t, f), |s| {
                        match k.partial_s(s, t, None) {
                            Ok(d) => d * f.eval(s),
                            Err(e) => {
                                err.get_or_insert(e);
                                0.0
                            }
                        }
                    });
                    if let Some(e) = err {
                        return Err(e);
                    }
                    v
                }
                WeightPart::PointMass { at, coef } => {
                    coef * with_side(|side| k.partial_s(*at, t, side), t, *at, side)?
                }
                WeightPart::Dipole { at, coef } => {
                    -coef * with_side(|side| k.mixed_partial(*at, t, side), t, *at, side)?
                }
                WeightPart::NormalQuantile { coef } => {
                    let mut err = None;
                    let v = self.normal_integral(t, |s| match k.partial_s(s, t, None) {
                        Ok(d) => d,
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    });
                    if let Some(e) = err {
                        return Err(e);
                    }
                    coef * v
                }
            };
        }
        Ok(total)
    }

    /// `⟨φ, f⟩` for a function `f` with derivative `df` (dipoles need it).
    fn pair_with(
        &self,
        f: &dyn Fn(f64) -> f64,
        df: &dyn Fn(f64, Option<Side>) -> Result<f64>,
        extra_breaks: &[f64],
    ) -> Result<f64> {
        let mut total = 0.0;
        for part in self.weight.parts() {
            total += match part {
                WeightPart::Density(w) => {
                    let mut breaks = vec![0.0, 1.0];
                    breaks.extend(self.kernel.kinks());
                    breaks.extend(w.breakpoints());
                    breaks.extend(extra_breaks.iter().copied().filter(|&x| x > 0.0 && x < 1.0));
                    breaks.sort_by(f64::total_cmp);
                    breaks.dedup();
                    breaks
                        .windows(2)
                        .map(|p| {
                            self.rule
                                .integrate_composite(p[0], p[1], Q_PANELS, |s| f(s) * w.eval(s))
                        })
                        .sum::<f64>()
                }
                WeightPart::PointMass { at, coef } => coef * f(*at),
                WeightPart::Dipole { at, coef } => {
                    let d = match endpoint_side(*at) {
                        Some(side) => df(*at, Some(side))?,
                        None => 0.5 * (df(*at, Some(Side::Below))? + df(*at, Some(Side::Above))?),
                    };
                    -coef * d
                }
                WeightPart::NormalQuantile { coef } => {
                    coef * self.rule.integrate_composite(
                        -NORMAL_CUTOFF,
                        NORMAL_CUTOFF,
                        2 * NORMAL_PANELS,
                        |x| f(norm_cdf(x)),
                    )
                }
            };
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::Integration(
                "pairing with the weight is not finite".into(),
            ))
        }
    }

    fn atom_locations(&self) -> Vec<f64> {
        self.weight
            .parts()
            .iter()
            .filter_map(|p| match p {
                WeightPart::PointMass { at, .. } | WeightPart::Dipole { at, .. } => Some(*at),
                _ => None,
            })
            .collect()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }
}

impl RankOneFactor for Psi {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn derivative(&self, t: f64, side: Option<Side>) -> Result<f64> {
        self.derivative_at(t, side)
    }

    fn kinks(&self) -> Vec<f64> {
        self.atom_locations()
    }
}

fn endpoint_side(at: f64) -> Option<Side> {
    if at >= 1.0 {
        Some(Side::Below)
    } else if at <= 0.0 {
        Some(Side::Above)
    } else {
        None
    }
}

/// Evaluate a diagonal-sensitive quantity; off the diagonal the side is
/// irrelevant, on it the two one-sided limits are averaged.
fn one_sided_mean(f: impl Fn(Option<Side>) -> Result<f64>, t: f64, at: f64) -> f64 {
    if t != at {
        return f(None).unwrap_or(f64::NAN);
    }
    match endpoint_side(at) {
        Some(side) => f(Some(side)).unwrap_or(f64::NAN),
        None => match (f(Some(Side::Below)), f(Some(Side::Above))) {
            (Ok(a), Ok(b)) => 0.5 * (a + b),
            _ => f64::NAN,
        },
    }
}

fn with_side(
    f: impl Fn(Option<Side>) -> Result<f64>,
    t: f64,
    at: f64,
    side: Option<Side>,
) -> Result<f64> {
    if t != at {
        return f(None);
    }
    match side.or_else(|| endpoint_side(at)) {
        Some(s) => f(Some(s)),
        None => Ok(0.5 * (f(Some(Side::Below))? + f(Some(Side::Above))?)),
    }
}

/// `ψ` sampled on `grid`.
pub fn compute_psi(kernel: &Kernel, weight: &Weight, grid: &Grid) -> Result<Vec<f64>> {
    let psi = Psi::new(kernel, weight);
    let values = grid.sample(|t| psi.eval(t));
    check_psi(&values, kernel, grid)?;
    Ok(values)
}

fn check_psi(values: &[f64], kernel: &Kernel, grid: &Grid) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration("ψ is not finite on the grid".into()));
    }
    let scale = grid
        .nodes
        .iter()
        .map(|&t| kernel.eval(t, t).abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max <= 1e-12 * scale {
        return Err(Error::Degenerate("ψ vanishes identically".into()));
    }
    Ok(())
}

/// `q = ⟨φ, ψ⟩`.
pub fn compute_q(kernel: &Kernel, weight: &Weight) -> Result<f64> {
    let psi = Psi::new(kernel, weight);
    q_of(&psi)
}

fn q_of(psi: &Psi) -> Result<f64> {
    let breaks = psi.atom_locations();
    let q = psi.pair_with(
        &|t| psi.eval(t),
        &|t, side| psi.derivative_at(t, side),
        &breaks,
    )?;
    if !q.is_finite() {
        return Err(Error::Integration("q is not finite".into()));
    }
    if q <= 1e-14 {
        return Err(Error::Degenerate(format!("q = {q:e} is not positive")));
    }
    Ok(q)
}

/// `∬ G(u, v) φ(u) φ(v) du dv` by nested quadrature on the triangle
/// `v < u`, for density weights. Independent of [`compute_q`]'s route.
pub fn q_double_integral(kernel: &Kernel, weight: &Weight) -> Result<f64> {
    let f = weight.as_density().ok_or_else(|| {
        Error::Unsupported("double-integral route needs a single density weight".into())
    })?;
    let rule = Rule::new(PIECE_ORDER);
    let mut breaks = vec![0.0, 1.0];
    breaks.extend(kernel.kinks());
    breaks.extend(f.breakpoints());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let half: f64 = breaks
        .windows(2)
        .map(|p| {
            rule.integrate_composite(p[0], p[1], 8, |u| {
                let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b < u).collect();
                inner.push(u);
                f.eval(u) * rule.integrate_pieces(&inner, |v| kernel.eval(u, v) * f.eval(v))
            })
        })
        .sum();
    Ok(2.0 * half)
}

/// `2/q − α`: the parameter giving the same law.
pub fn dual_alpha(q: f64, alpha: f64) -> f64 {
    2.0 / q - alpha
}

/// `1/q`: the parameter for which the transform decouples from `⟨φ, X⟩`.
pub fn critical_alpha(q: f64) -> f64 {
    1.0 / q
}

/// `Q = qα² − 2α`.
pub fn big_q(q: f64, alpha: f64) -> f64 {
    q * alpha * alpha - 2.0 * alpha
}

pub fn is_critical(q: f64, alpha: f64) -> bool {
    (alpha * q - 1.0).abs() <= CRITICAL_RTOL
}

/// A constructed transform `(G, φ, α)` with its derived `ψ`, `q`, `Q`.
#[derive(Debug, Clone)]
pub struct Transform {
    kernel: Kernel,
    weight: Weight,
    alpha: f64,
    psi: Arc<Psi>,
    grid: Grid,
    psi_grid: Vec<f64>,
    q: f64,
    big_q: f64,
    critical: bool,
}

impl Transform {
    pub fn new(kernel: &Kernel, weight: &Weight, alpha: f64) -> Result<Self> {
        Self::with_grid(
            kernel,
            weight,
            alpha,
            Grid::gauss_legendre(DEFAULT_GRID_SIZE),
        )
    }

    pub fn with_grid(kernel: &Kernel, weight: &Weight, alpha: f64, grid: Grid) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be finite, got {alpha}")));
        }
        let psi = Arc::new(Psi::new(kernel, weight));
        let psi_grid = grid.sample(|t| psi.eval(t));
        check_psi(&psi_grid, kernel, &grid)?;
        let q = q_of(&psi)?;
        Ok(Transform {
            kernel: kernel.clone(),
            weight: weight.clone(),
            alpha,
            psi,
            grid,
            psi_grid,
            q,
            big_q: big_q(q, alpha),
            critical: is_critical(q, alpha),
        })
    }

    /// Same kernel and weight at another `α`, reusing `ψ` and `q`.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Transform {
            alpha,
            big_q: big_q(self.q, alpha),
            critical: is_critical(self.q, alpha),
            ..self.clone()
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `Q = qα² − 2α`.
    pub fn big_q(&self) -> f64 {
        self.big_q
    }

    pub fn is_critical(&self) -> bool {
        self.critical
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn psi_on_grid(&self) -> &[f64] {
        &self.psi_grid
    }

    pub fn psi(&self) -> &Arc<Psi> {
        &self.psi
    }

    pub fn psi_at(&self, t: f64) -> f64 {
        self.psi.eval(t)
    }

    pub fn dual(&self) -> Self {
        self.with_alpha(dual_alpha(self.q, self.alpha))
    }

    /// `G(x, y) + Q ψ(x) ψ(y)`.
    pub fn transformed_kernel(&self) -> Kernel {
        self.kernel.perturbed(vec![(
            self.big_q,
            self.psi.clone() as Arc<dyn RankOneFactor>,
        )])
    }

    /// `1 + Q q`, which equals `(1 − αq)²`.
    pub fn fredholm_limit(&self) -> f64 {
        1.0 + self.big_q * self.q
    }
}

/// Two simultaneous transforms with `G`-orthogonal weights.
#[derive(Debug, Clone)]
pub struct TwoParamTransform {
    first: Transform,
    second: Transform,
    coupling: f64,
}

impl TwoParamTransform {
    pub fn new(kernel: &Kernel, weights: [&Weight; 2], alphas: [f64; 2]) -> Result<Self> {
        let first = Transform::new(kernel, weights[0], alphas[0])?;
        let second = Transform::new(kernel, weights[1], alphas[1])?;
        let coupling = first.psi.pair_with(
            &|t| second.psi.eval(t),
            &|t, side| second.psi.derivative_at(t, side),
            &second.psi.atom_locations(),
        )?;
        if coupling.abs() > ORTHOGONALITY_TOL {
            return Err(Error::Precondition(format!(
                "weights are not G-orthogonal: ∬ G φ₁ φ₂ = {coupling:e}"
            )));
        }
        Ok(TwoParamTransform {
            first,
            second,
            coupling,
        })
    }

    pub fn parts(&self) -> (&Transform, &Transform) {
        (&self.first, &self.second)
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// `G + Q₁ ψ₁ψ₁ᵀ + Q₂ ψ₂ψ₂ᵀ`.
    pub fn kernel(&self) -> Kernel {
        self.first.kernel.perturbed(vec![
            (
                self.first.big_q,
                self.first.psi.clone() as Arc<dyn RankOneFactor>,
            ),
            (
                self.second.big_q,
                self.second.psi.clone() as Arc<dyn RankOneFactor>,
            ),
        ])
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::kernel::Process;
    use crate::quadrature::norm_pdf;

    fn grid64() -> Grid {
        Grid::gauss_legendre(64)
    }

    #[test]
    fn psi_examples() {
        let g = grid64();
        let psi = compute_psi(&Kernel::wiener(), &Weight::constant(1.0), &g).unwrap();
        for (t, v) in g.nodes.iter().zip(&psi) {
            assert!((v - (2.0 * t - t * t) / 2.0).abs() < 1e-14);
        }
        let psi = compute_psi(&Kernel::wiener(), &Weight::point_mass(1.0), &g).unwrap();
        for (t, v) in g.nodes.iter().zip(&psi) {
            assert!((v - t).abs() < 1e-15);
        }
        let p = Psi::new(&Kernel::bridge(), &Weight::normal_quantile());
        assert!((p.eval(0.5) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-9);
        for t in [0.01, 0.2, 0.7, 0.95] {
            let exact = norm_pdf(norm_inv_cdf(t));
            assert!((p.eval(t) - exact).abs() < 1e-9, "t = {t}");
        }
        let iw = Kernel::catalog(Process::IntegratedWiener);
        let p = Psi::new(&iw, &Weight::dipole(1.0));
        assert!((p.eval(0.6) + 0.18).abs() < 1e-15);
    }

    #[test]
    fn q_examples() {
        let q = compute_q(&Kernel::wiener(), &Weight::constant(1.0)).unwrap();
        assert!((q - 1.0 / 3.0).abs() < 1e-14);
        let w = Weight::parse("poly:t*(1-t)").unwrap();
        let q = compute_q(&Kernel::bridge(), &w).unwrap();
        assert!((q - 17.0 / 5040.0).abs() < 1e-15);
        let q = compute_q(&Kernel::wiener(), &Weight::point_mass(1.0)).unwrap();
        assert!((q - 1.0).abs() < 1e-15);
        let q = compute_q(&Kernel::bridge(), &Weight::normal_quantile()).unwrap();
        assert!((q - 1.0).abs() < 1e-9, "q = {q}");
        let iw = Kernel::catalog(Process::IntegratedWiener);
        assert!((compute_q(&iw, &Weight::dipole(1.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!((compute_q(&iw, &Weight::point_mass(1.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let icw = Kernel::catalog(Process::IntegratedCenteredWiener);
        assert!((compute_q(&icw, &Weight::constant(1.0)).unwrap() - 1.0 / 120.0).abs() < 1e-15);
        let slep = Weight::parse("delta:0&delta:1").unwrap();
        let q = compute_q(&Kernel::catalog(Process::Slepian), &slep).unwrap();
        assert!((q - 2.0).abs() < 1e-15);
    }

    #[test]
    fn q_two_routes_agree() {
        for kernel in Process::ALL.map(Kernel::catalog) {
            for w in ["const1", "poly:t*(1-t)", "poly:1+3*t^2"] {
                let w = Weight::parse(w).unwrap();
                let a = compute_q(&kernel, &w).unwrap();
                let b = q_double_integral(&kernel, &w).unwrap();
                assert!(
                    (a - b).abs() < 1e-8 * a.max(1.0),
                    "{:?}: {a} vs {b}",
                    kernel.id()
                );
            }
        }
    }

    #[test]
    fn degenerate_weights_are_rejected() {
        // ψ = G φ vanishes for the bridge at the pinned endpoint
        let err = Transform::new(&Kernel::bridge(), &Weight::point_mass(1.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err:?}");
        let err = compute_q(&Kernel::wiener(), &Weight::constant(0.0)).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn duality_and_criticality() {
        assert_eq!(dual_alpha(1.0 / 3.0, 0.0), 6.0);
        assert!((dual_alpha(1.0 / 12.0, 12.0) - 12.0).abs() < 1e-12);
        assert_eq!(dual_alpha(1.0, 0.5), 1.5);
        assert_eq!(big_q(1.0, 0.5), -0.75);
        assert_eq!(big_q(1.0, 1.5), -0.75);
        assert!((critical_alpha(1.0 / 3.0) - 3.0).abs() < 1e-15);
        assert!((critical_alpha(1.0 / 120.0) - 120.0).abs() < 1e-12);
        let tr = Transform::new(&Kernel::bridge(), &Weight::constant(1.0), 12.0).unwrap();
        assert!(tr.is_critical());
        assert!((tr.big_q() + 12.0).abs() < 1e-12);
        assert!(!tr.with_alpha(11.0).is_critical());
    }

    #[test]
    fn transformed_kernel_examples() {
        let w = Transform::new(&Kernel::wiener(), &Weight::point_mass(1.0), 0.3).unwrap();
        let k = w.transformed_kernel();
        let qq = 0.09 - 0.6;
        assert!((k.eval(0.2, 0.7) - (0.2 + qq * 0.14)).abs() < 1e-14);

        let slep = Kernel::catalog(Process::Slepian);
        let tr = Transform::new(&slep, &Weight::parse("delta:0&delta:1").unwrap(), 0.7).unwrap();
        let qq = 2.0 * 0.49 - 1.4;
        let k = tr.transformed_kernel();
        for &(t, s) in &[(0.1, 0.4), (0.9, 0.3)] {
            assert!((k.eval(t, s) - (1.0 + qq - (t - s).abs())).abs() < 1e-14);
        }

        let base = Kernel::bridge();
        let tr = Transform::new(&base, &Weight::constant(1.0), 24.0).unwrap();
        assert!(tr.big_q().abs() < 1e-12);
        assert!((tr.transformed_kernel().eval(0.3, 0.6) - base.eval(0.3, 0.6)).abs() < 1e-13);
    }

    #[test]
    fn dipole_transform_kernel() {
        let iw = Kernel::catalog(Process::IntegratedWiener);
        let tr = Transform::new(&iw, &Weight::dipole(1.0), 0.4).unwrap();
        let qq = 0.16 - 0.8;
        let k = tr.transformed_kernel();
        for &(t, s) in &[(0.3, 0.5), (1.0, 0.2)] {
            let exact = iw.eval(t, s) + qq * t * t * s * s / 4.0;
            assert!((k.eval(t, s) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn fredholm_identity() {
        for alpha in [-3.0, 0.0, 1.0, 5.5, 12.0, 40.0] {
            let tr = Transform::new(&Kernel::bridge(), &Weight::constant(1.0), alpha).unwrap();
            let lhs = tr.fredholm_limit();
            let rhs = (1.0 - alpha * tr.q()).powi(2);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs));
            assert!(lhs >= -1e-15);
        }
    }

    #[test]
    fn two_param_matches_sequential_application() {
        let bridge = Kernel::bridge();
        let w1 = Weight::function("√2 sin 2πt", |t| 2f64.sqrt() * (2.0 * PI * t).sin());
        let w2 = Weight::function("√2 sin 4πt", |t| 2f64.sqrt() * (4.0 * PI * t).sin());
        let tp = TwoParamTransform::new(&bridge, [&w1, &w2], [3.0, -1.0]).unwrap();
        assert!(tp.coupling().abs() < 1e-12);
        let (a, b) = tp.parts();
        // eigenfunction weights: ψ_k = λ_(k) φ_k
        let lam2 = (2.0 * PI).powi(-2);
        assert!((a.psi_at(0.3) - lam2 * w1.density_at(0.3)).abs() < 1e-14);
        let k = tp.kernel();
        let seq = b.transformed_kernel();
        let seq = Transform::new(&seq, &w1, 3.0).unwrap();
        // q of φ₁ under the once-transformed kernel is unchanged by orthogonality
        assert!((seq.q() - a.q()).abs() < 1e-14);
        let seq = seq.transformed_kernel();
        let g = grid64();
        let mut worst: f64 = 0.0;
        for &t in &g.nodes {
            for &s in &g.nodes {
                worst = worst.max((k.eval(t, s) - seq.eval(t, s)).abs());
            }
        }
        assert!(worst < 1e-10, "worst {worst}");

        let zero = TwoParamTransform::new(&bridge, [&w1, &w2], [0.0, 0.0]).unwrap();
        assert!((zero.kernel().eval(0.2, 0.6) - bridge.eval(0.2, 0.6)).abs() < 1e-16);

        let not_orth = TwoParamTransform::new(
            &bridge,
            [&Weight::constant(1.0), &Weight::parse("poly:t").unwrap()],
            [1.0, 1.0],
        );
        assert!(matches!(not_orth, Err(Error::Precondition(_))));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dual_pairs_share_the_perturbation(q in 1e-3f64..10.0, alpha in -1e3f64..1e3) {
                let dual = dual_alpha(q, alpha);
                let size = 1.0 + alpha.abs() + 2.0 / q;
                let tol = 1e-13 * (1.0 + q * size) * (1.0 + size);
                prop_assert!((big_q(q, dual) - big_q(q, alpha)).abs() <= tol);
                prop_assert!((dual_alpha(q, dual) - alpha).abs() <= tol);
                let lhs = 1.0 + big_q(q, alpha) * q;
                prop_assert!((lhs - (1.0 - alpha * q).powi(2)).abs() <= q * tol);
                prop_assert!(big_q(q, alpha) >= big_q(q, critical_alpha(q)) - tol);
            }
        }
    }
}

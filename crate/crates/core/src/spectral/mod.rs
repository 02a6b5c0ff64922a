//! Karhunen–Loève spectra: a Nyström oracle for arbitrary kernels, the
//! transcendental eigen-equations of the example catalog, and the assembled
//! spectrum of a transformed process.

mod equations;
mod kl;
mod roots;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, Process, RowIntegrator, Side};
use crate::quadrature::Grid;
use crate::transform::Transform;

pub use equations::{EigenEquationSpec, EquationBranch, Example, NormalQuantileIntegrals};
pub use kl::{identify_example, transformed_kl, ExampleMatch};
pub use roots::{solve_branch, solve_roots, Root, RootBranch, RootSequence};

/// Where a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Nystrom,
    Assembled,
}

/// Per-eigenpair bookkeeping for analytic spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenLabel {
    /// 1 for the `Q`-independent family, 2 for the `Q`-dependent one.
    pub branch: Option<u8>,
    /// The root `ω` or `τ` the eigenvalue came from.
    pub root: Option<f64>,
    pub multiplicity: u8,
}

impl EigenLabel {
    pub const PLAIN: EigenLabel = EigenLabel {
        branch: None,
        root: None,
        multiplicity: 1,
    };
}

/// Off-grid evaluation of one eigenfunction.
pub trait EigenFunction: Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64, side: Option<Side>) -> Result<f64>;
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An eigenfunction given by closed-form closures.
#[derive(Clone)]
pub struct ClosedForm {
    f: ScalarFn,
    df: Option<ScalarFn>,
}

impl ClosedForm {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, df: Option<ScalarFn>) -> Self {
        ClosedForm { f: Arc::new(f), df }
    }

    pub fn scaled(self, c: f64) -> Self {
        let f = self.f;
        let df = self.df.map(|d| Arc::new(move |t| c * d(t)) as ScalarFn);
        ClosedForm {
            f: Arc::new(move |t| c * f(t)),
            df,
        }
    }
}

impl EigenFunction for ClosedForm {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn derivative(&self, t: f64, _side: Option<Side>) -> Result<f64> {
        match &self.df {
            Some(d) => Ok(d(t)),
            None => Err(Error::Unsupported("no closed-form derivative".into())),
        }
    }
}

/// Nyström interpolation consistent with the corrected matrix:
/// `u(t) = Σ_j w_j G(t, t_j) u(t_j) / (λ − d(t))` with
/// `d(t) = ∫G(t, s)ds − Σ_j w_j G(t, t_j)`.
struct NystromFn {
    kernel: Kernel,
    rows: Arc<RowIntegrator>,
    grid: Arc<Grid>,
    lambda: f64,
    /// `w_j u(t_j)`
    coef: Vec<f64>,
}

impl NystromFn {
    /// `λ / (λ − d(t))`, the factor over plain Nyström interpolation.
    fn factor(&self, t: f64) -> f64 {
        let plain: f64 = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .map(|(&s, w)| w * self.kernel.eval(t, s))
            .sum();
        1.0 / (self.lambda - (self.rows.eval(t) - plain))
    }
}

impl EigenFunction for NystromFn {
    fn value(&self, t: f64) -> f64 {
        let sum: f64 = self
            .grid
            .nodes
            .iter()
            .zip(&self.coef)
            .map(|(&s, c)| c * self.kernel.eval(t, s))
            .sum();
        sum * self.factor(t)
    }

    /// First order in the grid spacing for kernels with a diagonal kink;
    /// the slope of the correction `d` is neglected.
    fn derivative(&self, t: f64, side: Option<Side>) -> Result<f64> {
        let mut acc = 0.0;
        for (&s, c) in self.grid.nodes.iter().zip(&self.coef) {
            // ∂_t G(t, s) = ∂_s G(s, t) by symmetry
            acc += c * self.kernel.partial_s(s, t, side)?;
        }
        Ok(acc * self.factor(t))
    }
}

/// Piecewise-linear interpolation of grid values, used when the eigenvalue
/// is too small for Nyström interpolation.
struct GridInterp {
    nodes: Arc<Vec<f64>>,
    values: Vec<f64>,
}

impl EigenFunction for GridInterp {
    fn value(&self, t: f64) -> f64 {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let s = (t - x0) / (x1 - x0);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }

    fn derivative(&self, t: f64, _side: Option<Side>) -> Result<f64> {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        Ok((self.values[i + 1] - self.values[i]) / (self.nodes[i + 1] - self.nodes[i]))
    }
}

/// Eigenvalues (decreasing) with grid-sampled, L₂-normalized eigenfunctions.
#[derive(Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
    pub grid: Grid,
    pub provenance: Provenance,
    pub labels: Vec<EigenLabel>,
    functions: Vec<Arc<dyn EigenFunction>>,
}

impl fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectrum")
            .field("len", &self.len())
            .field("provenance", &self.provenance)
            .field(
                "leading",
                &self.eigenvalues.iter().take(4).collect::<Vec<_>>(),
            )
            .finish()
    }
}

/// One eigenpair before sorting: value, grid samples, evaluator, label.
pub type SpectrumPart = (f64, Vec<f64>, Arc<dyn EigenFunction>, EigenLabel);

impl Spectrum {
    /// Assemble from unsorted parts; sorts by decreasing eigenvalue.
    pub fn from_parts(grid: Grid, provenance: Provenance, parts: Vec<SpectrumPart>) -> Self {
        let mut parts = parts;
        parts.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut s = Spectrum {
            eigenvalues: Vec::with_capacity(parts.len()),
            eigenfunctions: Vec::with_capacity(parts.len()),
            grid,
            provenance,
            labels: Vec::with_capacity(parts.len()),
            functions: Vec::with_capacity(parts.len()),
        };
        for (l, v, f, label) in parts {
            s.eigenvalues.push(l);
            s.eigenfunctions.push(v);
            s.functions.push(f);
            s.labels.push(label);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Keep the leading `n` eigenpairs.
    pub fn truncate(&mut self, n: usize) {
        self.eigenvalues.truncate(n);
        self.eigenfunctions.truncate(n);
        self.labels.truncate(n);
        self.functions.truncate(n);
    }

    /// `u_k(t)` off the grid (`k` is 0-based).
    pub fn value(&self, k: usize, t: f64) -> Result<f64> {
        self.function(k).map(|f| f.value(t))
    }

    pub fn derivative(&self, k: usize, t: f64, side: Option<Side>) -> Result<f64> {
        self.function(k)?.derivative(t, side)
    }

    pub fn function(&self, k: usize) -> Result<&Arc<dyn EigenFunction>> {
        self.functions.get(k).ok_or(Error::OutOfRange {
            index: k,
            len: self.len(),
        })
    }

    /// Largest `|⟨u_j,u_k⟩ − δ_jk|` under grid quadrature.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            for k in 0..=j {
                let ip = self
                    .grid
                    .inner(&self.eigenfunctions[j], &self.eigenfunctions[k]);
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }

    /// `Σ_{k<n} λ_k u_k(t) u_k(s)`.
    pub fn reconstruct(&self, n: usize, t: f64, s: f64) -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..n.min(self.len()) {
            acc += self.eigenvalues[k] * self.value(k, t)? * self.value(k, s)?;
        }
        Ok(acc)
    }
}

/// Normalize grid values to unit L₂ norm with the first nonzero entry positive.
/// Returns the applied factor.
pub(crate) fn normalize(grid: &Grid, values: &mut [f64]) -> f64 {
    let norm = grid.inner(values, values).sqrt();
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let first = values
        .iter()
        .find(|v| v.abs() > 1e-8 * scale)
        .copied()
        .unwrap_or(1.0);
    let c = first.signum() / norm;
    values.iter_mut().for_each(|v| *v *= c);
    c
}

/// `W^{1/2} G W^{1/2}` plus the diagonal `∫G(t_i, s)ds − Σ_j w_j G(t_i, t_j)`,
/// which makes the rule exact on constants despite the kink at `s = t_i`.
fn symmetric_weighted(kernel: &Kernel, grid: &Grid) -> faer::Mat<f64> {
    let n = grid.len();
    let g = kernel.gram(&grid.nodes);
    let rows = kernel.row_integrals(&grid.nodes);
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let sum: f64 = (0..n).map(|j| grid.weights[j] * g[i * n + j]).sum();
            rows[i] - sum
        })
        .collect();
    faer::Mat::<f64>::from_fn(n, n, |i, j| {
        let v = sw[i] * g[i * n + j] * sw[j];
        if i == j {
            v + diag[i]
        } else {
            v
        }
    })
}

fn check_psd(ev_desc: &[f64], tol: f64) -> Result<()> {
    let max = ev_desc[0];
    let min = *ev_desc.last().unwrap();
    if min < -tol * max.abs() {
        return Err(Error::NotPsd { min, max });
    }
    Ok(())
}

/// All Nyström eigenvalues (decreasing) on a Gauss–Legendre grid of `grid_size`.
pub fn nystrom_eigenvalues(kernel: &Kernel, grid_size: usize) -> Result<Vec<f64>> {
    let grid = Grid::gauss_legendre(grid_size);
    let m = symmetric_weighted(kernel, &grid);
    let mut ev = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    ev.reverse();
    check_psd(&ev, kernel.psd_tolerance())?;
    Ok(ev)
}

/// Leading `count` eigenpairs of `kernel` by the Nyström method.
pub fn nystrom_spectrum(kernel: &Kernel, grid_size: usize, count: usize) -> Result<Spectrum> {
    if count == 0 || grid_size < 4 * count {
        return Err(Error::Precondition(format!(
            "grid size {grid_size} must be at least 4·count = {}",
            4 * count
        )));
    }
    let grid = Grid::gauss_legendre(grid_size);
    let m = symmetric_weighted(kernel, &grid);
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let n = grid_size;
    let s = eig.S().column_vector();
    let u = eig.U();
    let ev: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    check_psd(&ev, kernel.psd_tolerance())?;
    let nodes = Arc::new(grid.nodes.clone());
    let shared = Arc::new(grid.clone());
    let rows = Arc::new(kernel.row_integrator());
    let top = ev[0];
    let mut parts = Vec::with_capacity(count);
    for (rank, col) in (0..n).rev().take(count).enumerate() {
        let lambda = ev[rank];
        let mut values: Vec<f64> = (0..n)
            .map(|i| u[(i, col)] / grid.weights[i].sqrt())
            .collect();
        normalize(&grid, &mut values);
        let f: Arc<dyn EigenFunction> = if lambda > 1e-10 * top {
            Arc::new(NystromFn {
                kernel: kernel.clone(),
                rows: rows.clone(),
                grid: shared.clone(),
                lambda,
                coef: values
                    .iter()
                    .zip(&grid.weights)
                    .map(|(v, w)| v * w)
                    .collect(),
            })
        } else {
            Arc::new(GridInterp {
                nodes: nodes.clone(),
                values: values.clone(),
            })
        };
        parts.push((lambda, values, f, EigenLabel::PLAIN));
    }
    Ok(Spectrum::from_parts(grid, Provenance::Nystrom, parts))
}

/// The smallest Nyström eigenpair next to the largest eigenvalue.
#[derive(Debug, Clone)]
pub struct NullMode {
    pub smallest: f64,
    pub largest: f64,
    /// Eigenfunction of `smallest` on `grid`, unit L₂ norm.
    pub values: Vec<f64>,
    pub grid: Grid,
}

impl NullMode {
    /// `|⟨v, f⟩| / (‖v‖ ‖f‖)` under grid quadrature.
    pub fn correlation_with(&self, f: impl Fn(f64) -> f64) -> f64 {
        let fv = self.grid.sample(f);
        let num = self.grid.inner(&self.values, &fv).abs();
        num / (self.grid.inner(&fv, &fv) * self.grid.inner(&self.values, &self.values)).sqrt()
    }
}

pub fn nystrom_null_mode(kernel: &Kernel, grid_size: usize) -> Result<NullMode> {
    let grid = Grid::gauss_legendre(grid_size);
    let m = symmetric_weighted(kernel, &grid);
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let n = grid.len();
    let mut values: Vec<f64> = (0..n).map(|i| u[(i, 0)] / grid.weights[i].sqrt()).collect();
    normalize(&grid, &mut values);
    Ok(NullMode {
        smallest: s[0],
        largest: s[n - 1],
        values,
        grid,
    })
}

/// Spectrum of a catalog process: closed form where known, Nyström otherwise.
pub fn base_spectrum(process: Process, count: usize, grid: &Grid) -> Result<Spectrum> {
    let Some(formula) = process.spectrum_formula() else {
        let size = grid.len().max(4 * count);
        return nystrom_spectrum(&Kernel::catalog(process), size, count);
    };
    let parts = (1..=count)
        .map(|k| {
            let f: Arc<dyn EigenFunction> = Arc::new(ClosedForm::new(
                move |t| formula.eigenfunction(k, t),
                Some(Arc::new(move |t| formula.eigenfunction_derivative(k, t))),
            ));
            let values = grid.sample(|t| formula.eigenfunction(k, t));
            (formula.lambda(k), values, f, EigenLabel::PLAIN)
        })
        .collect();
    Ok(Spectrum::from_parts(
        grid.clone(),
        Provenance::Analytic,
        parts,
    ))
}

/// Outcome of [`interlacing_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interlacing {
    pub holds: bool,
    /// First 0-based index where an inequality fails.
    pub first_violation: Option<usize>,
}

/// Check `λ_k ≥ λ̃_k ≥ λ_{k+1}` when `big_q < 0`, and
/// `λ̃_k ≥ λ_k ≥ λ̃_{k+1}` when `big_q > 0`.
pub fn interlacing_check(base: &[f64], transformed: &[f64], big_q: f64) -> Interlacing {
    let n = base.len().min(transformed.len());
    let slack = 1e-9 * base.first().copied().unwrap_or(0.0).abs();
    let (upper, lower) = if big_q < 0.0 {
        (base, transformed)
    } else {
        (transformed, base)
    };
    for k in 0..n {
        let ok_hi = upper[k] + slack >= lower[k];
        let ok_lo = k + 1 >= n || lower[k] + slack >= upper[k + 1];
        if !(ok_hi && ok_lo) {
            return Interlacing {
                holds: false,
                first_violation: Some(k),
            };
        }
    }
    Interlacing {
        holds: true,
        first_violation: None,
    }
}

/// `a_k = ⟨ψ, u_k⟩` and the partial sums of `a_k² μ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    pub a: Vec<f64>,
    pub partial_sums: Vec<f64>,
}

pub fn fourier_coefficients(
    spectrum: &Spectrum,
    tr: &Transform,
    count: usize,
) -> Result<FourierCoefficients> {
    let psi: Vec<f64> = if spectrum.grid == *tr.grid() {
        tr.psi_on_grid().to_vec()
    } else {
        spectrum.grid.sample(|t| tr.psi_at(t))
    };
    let n = count.min(spectrum.len());
    let mut a = Vec::with_capacity(n);
    let mut partial_sums = Vec::with_capacity(n);
    let mut acc = 0.0;
    for k in 0..n {
        let ak = spectrum.grid.inner(&psi, &spectrum.eigenfunctions[k]);
        acc += ak * ak / spectrum.eigenvalues[k];
        a.push(ak);
        partial_sums.push(acc);
    }
    Ok(FourierCoefficients { a, partial_sums })
}

/// Spectrum of the transform with `φ = u_m`: only entry `m` (0-based)
/// changes, to `λ_m (1 − qα)²` with `q = λ_m`.
pub fn eigenfunction_weight_shortcut(
    spectrum: &Spectrum,
    m: usize,
    alpha: f64,
) -> Result<Spectrum> {
    if m >= spectrum.len() {
        return Err(Error::OutOfRange {
            index: m,
            len: spectrum.len(),
        });
    }
    let lm = spectrum.eigenvalues[m];
    let parts = (0..spectrum.len())
        .map(|k| {
            let l = spectrum.eigenvalues[k];
            let l = if k == m {
                l * (1.0 - lm * alpha).powi(2)
            } else {
                l
            };
            (
                l,
                spectrum.eigenfunctions[k].clone(),
                spectrum.functions[k].clone(),
                spectrum.labels[k],
            )
        })
        .collect();
    Ok(Spectrum::from_parts(
        spectrum.grid.clone(),
        Provenance::Assembled,
        parts,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::Weight;
    use std::f64::consts::PI;

    #[test]
    fn nystrom_wiener_matches_formula() {
        let s = nystrom_spectrum(&Kernel::wiener(), 1000, 10).unwrap();
        for (k, l) in s.eigenvalues.iter().enumerate() {
            let exact = ((k as f64 + 0.5) * PI).powi(-2);
            assert!((l - exact).abs() < 1e-3 * exact, "k={k}");
        }
        assert!(s.orthonormality_defect() < 1e-6);
        // Nyström interpolation reproduces grid values and the closed form
        let t = 0.3137;
        let u0 = s.value(0, t).unwrap();
        assert!((u0 - 2f64.sqrt() * (0.5 * PI * t).sin()).abs() < 1e-6);
        // first order only: ∂_t min(t, s) is a step
        let du = s.derivative(0, t, None).unwrap();
        assert!((du - 2f64.sqrt() * 0.5 * PI * (0.5 * PI * t).cos()).abs() < 5e-3);
        assert!((s.value(1, s.grid.nodes[7]).unwrap() - s.eigenfunctions[1][7]).abs() < 1e-10);
    }

    #[test]
    fn nystrom_rank_one_kernel() {
        let table = crate::kernel::KernelTable::tabulate(65, |t, s| t * s).unwrap();
        let s = nystrom_spectrum(&Kernel::custom(table), 256, 4).unwrap();
        assert!((s.eigenvalues[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!(s.eigenvalues[1].abs() < 1e-12);
        assert!(matches!(
            nystrom_spectrum(&Kernel::bridge(), 8, 4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tabulated_kernels_tolerate_interpolation_artifacts() {
        let bridge = |t: f64, s: f64| t.min(s) - t * s;
        let table = crate::kernel::KernelTable::tabulate(41, bridge).unwrap();
        let s = nystrom_spectrum(&Kernel::custom(table), 200, 2).unwrap();
        assert!((s.eigenvalues[0] - PI.powi(-2)).abs() < 1e-3 * PI.powi(-2));
        let neg = crate::kernel::KernelTable::tabulate(41, |t, s| -bridge(t, s) + 0.1 * t * s);
        assert!(matches!(
            nystrom_eigenvalues(&Kernel::custom(neg.unwrap()), 64),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn critical_bridge_has_zero_mode() {
        let tr = Transform::new(&Kernel::bridge(), &Weight::constant(1.0), 12.0).unwrap();
        let z = nystrom_null_mode(&tr.transformed_kernel(), 2048).unwrap();
        assert!(
            z.smallest.abs() < 1e-6 * z.largest,
            "{} vs {}",
            z.smallest,
            z.largest
        );
        assert!(z.correlation_with(|_| 1.0) > 0.999);
    }

    #[test]
    fn analytic_base_spectrum() {
        let g = Grid::gauss_legendre(512);
        let s = base_spectrum(Process::BrownianBridge, 20, &g).unwrap();
        assert!(s.orthonormality_defect() < 1e-10);
        assert!((s.eigenvalues[0] - 1.0 / (PI * PI)).abs() < 1e-15);
        let exact = Kernel::bridge().eval(0.3, 0.7);
        let e5 = (s.reconstruct(5, 0.3, 0.7).unwrap() - exact).abs();
        let e20 = (s.reconstruct(20, 0.3, 0.7).unwrap() - exact).abs();
        assert!(e20 < e5);
        let iw = base_spectrum(Process::IntegratedWiener, 5, &Grid::gauss_legendre(256)).unwrap();
        assert_eq!(iw.provenance, Provenance::Nystrom);
    }

    #[test]
    fn bridge_fourier_coefficients() {
        let g = Grid::gauss_legendre(2048);
        let s = base_spectrum(Process::BrownianBridge, 200, &g).unwrap();
        let tr = Transform::with_grid(&Kernel::bridge(), &Weight::constant(1.0), 0.0, g).unwrap();
        let fc = fourier_coefficients(&s, &tr, 200).unwrap();
        for (k, a) in fc.a.iter().enumerate().take(20) {
            let k = (k + 1) as f64;
            let exact = if (k as usize) % 2 == 1 {
                2.0 * 2f64.sqrt() / (k * PI).powi(3)
            } else {
                0.0
            };
            assert!((a - exact).abs() < 1e-12, "k={k}");
        }
        assert!(fc.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        assert!((fc.partial_sums[199] - 1.0 / 12.0).abs() < 1e-6);
    }

    #[test]
    fn eigenfunction_weight() {
        let g = Grid::gauss_legendre(512);
        let s = base_spectrum(Process::BrownianBridge, 10, &g).unwrap();
        let m = 2;
        let q = s.eigenvalues[m];
        assert_eq!(
            eigenfunction_weight_shortcut(&s, m, 0.0)
                .unwrap()
                .eigenvalues,
            s.eigenvalues
        );
        let crit = eigenfunction_weight_shortcut(&s, m, 1.0 / q).unwrap();
        assert!(crit.eigenvalues[9].abs() < 1e-18);
        let dual = eigenfunction_weight_shortcut(&s, m, 2.0 / q).unwrap();
        for (a, b) in dual.eigenvalues.iter().zip(&s.eigenvalues) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(eigenfunction_weight_shortcut(&s, 10, 1.0).is_err());
        // the same thing through the general machinery
        let k = m + 1;
        let w = Weight::function("u3", move |t| 2f64.sqrt() * (k as f64 * PI * t).sin());
        let tr = Transform::with_grid(&Kernel::bridge(), &w, 0.7 / q, g.clone()).unwrap();
        assert!((tr.q() - q).abs() < 1e-12);
        let ny = nystrom_eigenvalues(&tr.transformed_kernel(), 512).unwrap();
        let short = eigenfunction_weight_shortcut(&s, m, 0.7 / q).unwrap();
        for i in 0..5 {
            assert!((ny[i] - short.eigenvalues[i]).abs() < 1e-3 * short.eigenvalues[i]);
        }
    }

    #[test]
    fn interlacing() {
        let base = [1.0, 0.5, 0.25];
        assert!(interlacing_check(&base, &base, 0.0).holds);
        assert!(interlacing_check(&base, &[0.7, 0.3, 0.2], -1.0).holds);
        let bad = interlacing_check(&base, &[0.7, 0.2, 0.1], -1.0);
        assert_eq!(bad.first_violation, Some(1));
        assert!(interlacing_check(&base, &[1.2, 0.6, 0.3], 1.0).holds);

        let tr = Transform::new(&Kernel::bridge(), &Weight::constant(1.0), 2.0).unwrap();
        let b = nystrom_eigenvalues(&Kernel::bridge(), 400).unwrap();
        let t = nystrom_eigenvalues(&tr.transformed_kernel(), 400).unwrap();
        assert!(interlacing_check(&b[..20], &t[..20], tr.big_q()).holds);
    }
}

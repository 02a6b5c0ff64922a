//! Covariance kernels on `[0, 1]²`: the closed-form process catalog,
//! tabulated user kernels, and rank-one perturbations of either.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{Rule, PIECE_ORDER};
use crate::smallball::AsymptoticDescriptor;

/// Processes with closed-form covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Process {
    Wiener,
    BrownianBridge,
    IntegratedWiener,
    IntegratedCenteredWiener,
    Slepian,
}

impl Process {
    pub const ALL: [Process; 5] = [
        Process::Wiener,
        Process::BrownianBridge,
        Process::IntegratedWiener,
        Process::IntegratedCenteredWiener,
        Process::Slepian,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Process::Wiener => "wiener",
            Process::BrownianBridge => "bridge",
            Process::IntegratedWiener => "iwiener",
            Process::IntegratedCenteredWiener => "icwiener",
            Process::Slepian => "slepian",
        }
    }

    /// Half-order ℓ of the differential operator whose Green function is
    /// the covariance, when the covariance is one.
    pub fn operator_order(self) -> Option<u32> {
        match self {
            Process::Wiener | Process::BrownianBridge => Some(1),
            Process::IntegratedWiener | Process::IntegratedCenteredWiener => Some(2),
            Process::Slepian => None,
        }
    }

    /// Closed-form KL spectrum, where one is known.
    pub fn spectrum_formula(self) -> Option<BaseSpectrumFormula> {
        match self {
            Process::Wiener | Process::BrownianBridge | Process::IntegratedCenteredWiener => {
                Some(BaseSpectrumFormula { process: self })
            }
            _ => None,
        }
    }

    /// Small-ball descriptor `F(r) ~ C r^β exp(-D r^{-d})` of the process
    /// itself, with `r = ε²`.
    pub fn base_small_ball(self) -> Option<BaseSmallBall> {
        let sqrt_pi = PI.sqrt();
        let descriptor = match self {
            // 4ε/√π · exp(-ε⁻²/8)
            Process::Wiener => AsymptoticDescriptor::new(4.0 / sqrt_pi, 0.5, 0.125, 1.0),
            // 2√2/√π · exp(-ε⁻²/8)
            Process::BrownianBridge => {
                AsymptoticDescriptor::new(2.0 * SQRT_2 / sqrt_pi, 0.0, 0.125, 1.0)
            }
            // 8√6 ε^{1/3} / (3√π) · exp(-3/8 ε^{-2/3})
            Process::IntegratedWiener => AsymptoticDescriptor::new(
                8.0 * 6f64.sqrt() / (3.0 * sqrt_pi),
                1.0 / 6.0,
                0.375,
                1.0 / 3.0,
            ),
            // 4√2 ε^{-1/3} / √(3π) · exp(-3/8 ε^{-2/3})
            Process::IntegratedCenteredWiener => AsymptoticDescriptor::new(
                4.0 * SQRT_2 / (3.0 * PI).sqrt(),
                -1.0 / 6.0,
                0.375,
                1.0 / 3.0,
            ),
            Process::Slepian => return None,
        };
        Some(BaseSmallBall {
            process: self,
            descriptor,
        })
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Process::ALL
            .into_iter()
            .find(|p| p.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown process tag `{s}`")))
    }
}

/// Catalog tag of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelId {
    Catalog(Process),
    Custom,
}

/// Closed-form eigenpairs `λ_k`, `u_k` of a catalog process (k from 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaseSpectrumFormula {
    pub process: Process,
}

impl BaseSpectrumFormula {
    fn frequency(&self, k: usize) -> f64 {
        let k = k as f64;
        match self.process {
            Process::Wiener => (k - 0.5) * PI,
            _ => k * PI,
        }
    }

    pub fn lambda(&self, k: usize) -> f64 {
        let w = self.frequency(k);
        match self.process {
            Process::IntegratedCenteredWiener => w.powi(-4),
            _ => w.powi(-2),
        }
    }

    pub fn eigenfunction(&self, k: usize, t: f64) -> f64 {
        SQRT_2 * (self.frequency(k) * t).sin()
    }

    pub fn eigenfunction_derivative(&self, k: usize, t: f64) -> f64 {
        let w = self.frequency(k);
        SQRT_2 * w * (w * t).cos()
    }
}

/// Small-ball descriptor of a catalog process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSmallBall {
    pub process: Process,
    pub descriptor: AsymptoticDescriptor,
}

/// Which side of the diagonal a derivative is taken from when `s == t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `s → t⁻`, the region `s < t`.
    Below,
    /// `s → t⁺`, the region `s > t`.
    Above,
}

/// A function that enters a kernel as a rank-one term `Q f(t) f(s)`.
pub trait RankOneFactor: Send + Sync + fmt::Debug {
    fn value(&self, t: f64) -> f64;

    /// Derivative at `t`; `side` resolves one-sided limits at atoms.
    fn derivative(&self, t: f64, side: Option<Side>) -> Result<f64>;

    /// Values at many points; implementations may share work.
    fn values(&self, ts: &[f64]) -> Vec<f64> {
        ts.iter().map(|&t| self.value(t)).collect()
    }

    /// Interior points where the factor may fail to be smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Covariance tabulated on a uniform `n × n` grid including the endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    n: usize,
    values: Vec<f64>,
}

impl KernelTable {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("kernel table needs n >= 2".into()));
        }
        if values.len() != n * n {
            return Err(Error::Config(format!(
                "kernel table has {} values, expected {}",
                values.len(),
                n * n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "kernel table contains non-finite values".into(),
            ));
        }
        Ok(KernelTable { n, values })
    }

    /// Parse the CSV grid format: a header row holding `n`, then `n × n`
    /// values in row-major order.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut tokens = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty());
        let n: usize = tokens
            .next()
            .ok_or_else(|| Error::Config("empty kernel file".into()))?
            .parse()
            .map_err(|_| Error::Config("kernel file header must be an integer n".into()))?;
        let values = tokens
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad kernel value `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }

    /// Tabulate `f` on the uniform grid.
    pub fn tabulate(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 1.0 / (n - 1) as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        Self::new(n, values)
    }

    fn eval(&self, t: f64, s: f64) -> f64 {
        let m = (self.n - 1) as f64;
        let locate = |x: f64| {
            let x = x.clamp(0.0, 1.0) * m;
            let i = (x.floor() as usize).min(self.n - 2);
            (i, x - i as f64)
        };
        let (i, a) = locate(t);
        let (j, b) = locate(s);
        let v = |i: usize, j: usize| self.values[i * self.n + j];
        (1.0 - a) * ((1.0 - b) * v(i, j) + b * v(i, j + 1))
            + a * ((1.0 - b) * v(i + 1, j) + b * v(i + 1, j + 1))
    }
}

#[derive(Debug, Clone)]
enum KernelKind {
    Catalog {
        process: Process,
        slepian_length: f64,
    },
    Table(Arc<KernelTable>),
    Perturbed {
        base: Box<Kernel>,
        terms: Vec<(f64, Arc<dyn RankOneFactor>)>,
    },
}

/// A symmetric positive-semidefinite covariance on `[0, 1]²`.
#[derive(Debug, Clone)]
pub struct Kernel {
    kind: KernelKind,
}

impl Kernel {
    pub fn catalog(process: Process) -> Self {
        Kernel {
            kind: KernelKind::Catalog {
                process,
                slepian_length: 1.0,
            },
        }
    }

    pub fn wiener() -> Self {
        Self::catalog(Process::Wiener)
    }

    pub fn bridge() -> Self {
        Self::catalog(Process::BrownianBridge)
    }

    /// Generalized Slepian covariance `c - |t - s|`.
    pub fn slepian(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!(
                "slepian length must be positive, got {c}"
            )));
        }
        Ok(Kernel {
            kind: KernelKind::Catalog {
                process: Process::Slepian,
                slepian_length: c,
            },
        })
    }

    pub fn custom(table: KernelTable) -> Self {
        Kernel {
            kind: KernelKind::Table(Arc::new(table)),
        }
    }

    /// `self + Σ Q_i f_i(t) f_i(s)`.
    pub fn perturbed(&self, terms: Vec<(f64, Arc<dyn RankOneFactor>)>) -> Self {
        Kernel {
            kind: KernelKind::Perturbed {
                base: Box::new(self.clone()),
                terms,
            },
        }
    }

    pub fn id(&self) -> KernelId {
        match &self.kind {
            KernelKind::Catalog { process, .. } => KernelId::Catalog(*process),
            _ => KernelId::Custom,
        }
    }

    /// Relative size of negative Nyström eigenvalues accepted as round-off.
    /// Tabulated kernels are only piecewise bilinear, so quadrature leaves
    /// artifacts of order `h²` in the table spacing.
    pub fn psd_tolerance(&self) -> f64 {
        match &self.kind {
            KernelKind::Catalog { .. } => 1e-9,
            KernelKind::Table(t) => (1.0 / (t.n - 1) as f64).powi(2).max(1e-9),
            KernelKind::Perturbed { base, .. } => base.psd_tolerance(),
        }
    }

    /// The catalog process, for unperturbed catalog kernels.
    pub fn process(&self) -> Option<Process> {
        match &self.kind {
            KernelKind::Catalog { process, .. } => Some(*process),
            _ => None,
        }
    }

    pub fn operator_order(&self) -> Option<u32> {
        self.process().and_then(Process::operator_order)
    }

    pub fn slepian_length(&self) -> Option<f64> {
        match &self.kind {
            KernelKind::Catalog {
                process: Process::Slepian,
                slepian_length,
            } => Some(*slepian_length),
            _ => None,
        }
    }

    /// Points in `(0, 1)` where `s ↦ G(t, s)` may fail to be smooth, other
    /// than `s = t` itself.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            KernelKind::Table(table) => {
                let m = table.n - 1;
                (1..m).map(|i| i as f64 / m as f64).collect()
            }
            KernelKind::Perturbed { base, .. } => base.kinks(),
            KernelKind::Catalog { .. } => Vec::new(),
        }
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match &self.kind {
            KernelKind::Catalog {
                process,
                slepian_length,
            } => catalog_eval(*process, *slepian_length, t, s),
            KernelKind::Table(table) => 0.5 * (table.eval(t, s) + table.eval(s, t)),
            KernelKind::Perturbed { base, terms } => {
                base.eval(t, s)
                    + terms
                        .iter()
                        .map(|(q, f)| q * f.value(t) * f.value(s))
                        .sum::<f64>()
            }
        }
    }

    /// `∂G/∂s` at `(t, s)`; on the diagonal the side must be given, except
    /// at the endpoints where the limit from inside `[0, 1]` is used.
    pub fn partial_s(&self, t: f64, s: f64, side: Option<Side>) -> Result<f64> {
        match &self.kind {
            KernelKind::Catalog { process, .. } => {
                let below = resolve_side(t, s, side)?;
                Ok(catalog_partial_s(*process, t, s, below))
            }
            KernelKind::Table(_) => Err(Error::Unsupported(
                "tabulated kernels have no differentiable closed form".into(),
            )),
            KernelKind::Perturbed { base, terms } => {
                let mut v = base.partial_s(t, s, side)?;
                for (q, f) in terms {
                    v += q * f.value(t) * f.derivative(s, side)?;
                }
                Ok(v)
            }
        }
    }

    /// `∂²G/∂t∂s` at `(t, s)`, same side convention as [`Kernel::partial_s`].
    pub fn mixed_partial(&self, t: f64, s: f64, side: Option<Side>) -> Result<f64> {
        match &self.kind {
            KernelKind::Catalog { process, .. } => {
                let below = resolve_side(t, s, side)?;
                Ok(catalog_mixed(*process, t, s, below))
            }
            KernelKind::Table(_) => Err(Error::Unsupported(
                "tabulated kernels have no differentiable closed form".into(),
            )),
            KernelKind::Perturbed { base, terms } => {
                let mut v = base.mixed_partial(t, s, side)?;
                let flip = side.map(|s| match s {
                    Side::Below => Side::Above,
                    Side::Above => Side::Below,
                });
                for (q, f) in terms {
                    v += q * f.derivative(t, flip)? * f.derivative(s, side)?;
                }
                Ok(v)
            }
        }
    }

    /// `∫₀¹ G(t_i, s) ds` for each node, split at `s = t_i` and the kinks.
    pub fn row_integrals(&self, nodes: &[f64]) -> Vec<f64> {
        let r = self.row_integrator();
        nodes.iter().map(|&t| r.eval(t)).collect()
    }

    pub fn row_integrator(&self) -> RowIntegrator {
        let mut kernel = self;
        let mut terms = Vec::new();
        let rule = Rule::new(PIECE_ORDER);
        while let KernelKind::Perturbed { base, terms: ts } = &kernel.kind {
            for (q, f) in ts {
                let mut b = vec![0.0, 1.0];
                b.extend(f.kinks().into_iter().filter(|&x| x > 0.0 && x < 1.0));
                b.extend(base.kinks());
                b.sort_by(f64::total_cmp);
                b.dedup();
                let total: f64 = b
                    .windows(2)
                    .map(|p| rule.integrate_composite(p[0], p[1], 16, |s| f.value(s)))
                    .sum();
                terms.push((*q, f.clone(), total));
            }
            kernel = base;
        }
        RowIntegrator {
            base: kernel.clone(),
            kinks: kernel.kinks(),
            terms,
            rule,
        }
    }

    /// Row-major Gram matrix `[G(t_i, t_j)]`.
    pub fn gram(&self, nodes: &[f64]) -> Vec<f64> {
        let n = nodes.len();
        let mut out = vec![0.0; n * n];
        match &self.kind {
            KernelKind::Perturbed { base, terms } => {
                out = base.gram(nodes);
                for (q, f) in terms {
                    let v = f.values(nodes);
                    for i in 0..n {
                        for j in 0..n {
                            out[i * n + j] += q * v[i] * v[j];
                        }
                    }
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..=i {
                        let g = self.eval(nodes[i], nodes[j]);
                        out[i * n + j] = g;
                        out[j * n + i] = g;
                    }
                }
            }
        }
        out
    }
}

/// `t ↦ ∫₀¹ G(t, s) ds` with the integrals of rank-one terms precomputed.
#[derive(Debug, Clone)]
pub struct RowIntegrator {
    base: Kernel,
    kinks: Vec<f64>,
    terms: Vec<(f64, Arc<dyn RankOneFactor>, f64)>,
    rule: Rule,
}

impl RowIntegrator {
    pub fn eval(&self, t: f64) -> f64 {
        let mut b = vec![0.0, 1.0];
        if t > 0.0 && t < 1.0 {
            b.push(t);
        }
        b.extend(self.kinks.iter().copied());
        b.sort_by(f64::total_cmp);
        b.dedup();
        let mut v = self.rule.integrate_pieces(&b, |s| self.base.eval(t, s));
        for (q, f, total) in &self.terms {
            v += q * f.value(t) * total;
        }
        v
    }
}

fn resolve_side(t: f64, s: f64, side: Option<Side>) -> Result<bool> {
    if s < t {
        return Ok(true);
    }
    if s > t {
        return Ok(false);
    }
    match side {
        Some(Side::Below) => Ok(true),
        Some(Side::Above) => Ok(false),
        None if s >= 1.0 => Ok(true),
        None if s <= 0.0 => Ok(false),
        None => Err(Error::Precondition(format!(
            "derivative on the diagonal at t = s = {s} needs an explicit side"
        ))),
    }
}

fn catalog_eval(process: Process, c: f64, t: f64, s: f64) -> f64 {
    let (lo, hi) = if t <= s { (t, s) } else { (s, t) };
    match process {
        Process::Wiener => lo,
        Process::BrownianBridge => lo - t * s,
        Process::IntegratedWiener => lo * lo * (3.0 * hi - lo) / 6.0,
        Process::IntegratedCenteredWiener => {
            // double integral of the centered Wiener covariance, lo <= hi
            let (x, y) = (lo, hi);
            y * y * y * x / 6.0 - y * y * x / 2.0 + y * x * x * x / 6.0 + y * x / 3.0
                - x * x * x / 6.0
        }
        Process::Slepian => c - (t - s).abs(),
    }
}

/// `∂_s G(t, s)`; `below` selects the region `s < t`.
fn catalog_partial_s(process: Process, t: f64, s: f64, below: bool) -> f64 {
    match (process, below) {
        (Process::Wiener, true) => 1.0,
        (Process::Wiener, false) => 0.0,
        (Process::BrownianBridge, true) => 1.0 - t,
        (Process::BrownianBridge, false) => -t,
        (Process::IntegratedWiener, true) => s * t - 0.5 * s * s,
        (Process::IntegratedWiener, false) => 0.5 * t * t,
        (Process::IntegratedCenteredWiener, true) => {
            t * t * t / 6.0 - t * t / 2.0 + t * s * s / 2.0 + t / 3.0 - s * s / 2.0
        }
        (Process::IntegratedCenteredWiener, false) => {
            s * s * t / 2.0 - s * t + t * t * t / 6.0 + t / 3.0
        }
        (Process::Slepian, true) => 1.0,
        (Process::Slepian, false) => -1.0,
    }
}

fn catalog_mixed(process: Process, t: f64, s: f64, below: bool) -> f64 {
    match (process, below) {
        (Process::Wiener, _) | (Process::Slepian, _) => 0.0,
        (Process::BrownianBridge, _) => -1.0,
        (Process::IntegratedWiener, true) => s,
        (Process::IntegratedWiener, false) => t,
        (Process::IntegratedCenteredWiener, true) => t * t / 2.0 - t + s * s / 2.0 + 1.0 / 3.0,
        (Process::IntegratedCenteredWiener, false) => s * s / 2.0 - s + t * t / 2.0 + 1.0 / 3.0,
    }
}

/// Max of `|G(t,s) - G(s,t)|` over a uniform `n`-point grid.
pub fn symmetry_defect(kernel: &Kernel, n: usize) -> f64 {
    let h = 1.0 / (n - 1) as f64;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            let (t, s) = (i as f64 * h, j as f64 * h);
            worst = worst.max((kernel.eval(t, s) - kernel.eval(s, t)).abs());
        }
    }
    worst
}

/// Smallest and largest eigenvalue of the Gram matrix on a uniform grid.
pub fn gram_extreme_eigenvalues(kernel: &Kernel, n: usize) -> Result<(f64, f64)> {
    let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let g = kernel.gram(&nodes);
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| g[i * n + j]);
    let ev = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok((ev[0], ev[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Rule;

    #[test]
    fn catalog_values() {
        assert_eq!(Kernel::wiener().eval(0.3, 0.7), 0.3);
        assert_eq!(Kernel::bridge().eval(0.5, 0.5), 0.25);
        let sl = Kernel::catalog(Process::Slepian);
        assert!((sl.eval(0.2, 0.9) - 0.3).abs() < 1e-15);
        assert!((Kernel::slepian(2.5).unwrap().eval(0.2, 0.9) - 1.8).abs() < 1e-15);
        assert!(Kernel::slepian(0.0).is_err());
    }

    #[test]
    fn partial_derivatives() {
        let iw = Kernel::catalog(Process::IntegratedWiener);
        // -∂_s G(0.6, 1) = -t²/2
        let d = iw.partial_s(0.6, 1.0, None).unwrap();
        assert!((-d + 0.18).abs() < 1e-15);
        let w = Kernel::wiener();
        assert_eq!(w.partial_s(0.4, 1.0, None).unwrap(), 0.0);
        assert_eq!(w.partial_s(0.9, 0.2, None).unwrap(), 1.0);
        assert!(w.partial_s(0.5, 0.5, None).is_err());
        assert_eq!(w.partial_s(0.5, 0.5, Some(Side::Below)).unwrap(), 1.0);
        assert_eq!(iw.mixed_partial(1.0, 1.0, None).unwrap(), 1.0);
        let table = KernelTable::tabulate(8, |t, s| t.min(s)).unwrap();
        assert!(matches!(
            Kernel::custom(table).partial_s(0.2, 0.3, None),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn partials_match_finite_differences() {
        let h = 1e-6;
        for p in Process::ALL {
            let k = Kernel::catalog(p);
            for &(t, s) in &[(0.3, 0.7), (0.8, 0.25), (0.55, 0.1)] {
                let fd = (k.eval(t, s + h) - k.eval(t, s - h)) / (2.0 * h);
                let an = k.partial_s(t, s, None).unwrap();
                assert!((fd - an).abs() < 1e-7, "{p} ∂s at ({t},{s}): {fd} vs {an}");
                let fd2 = (k.partial_s(t + h, s, None).unwrap()
                    - k.partial_s(t - h, s, None).unwrap())
                    / (2.0 * h);
                let an2 = k.mixed_partial(t, s, None).unwrap();
                assert!((fd2 - an2).abs() < 1e-6, "{p} ∂ts at ({t},{s})");
            }
        }
    }

    #[test]
    fn catalog_kernels_symmetric_and_psd() {
        for p in Process::ALL {
            let k = Kernel::catalog(p);
            for n in [64, 256] {
                assert!(symmetry_defect(&k, n) < 1e-12, "{p}");
                let (lo, hi) = gram_extreme_eigenvalues(&k, n).unwrap();
                assert!(lo >= -1e-9 * hi, "{p} n={n}: {lo} vs {hi}");
            }
        }
    }

    #[test]
    fn centered_integrated_wiener_matches_double_quadrature() {
        // Cov of W(a) - ∫W at (a, b), integrated over [0,t]×[0,s].
        let centered = |a: f64, b: f64| a.min(b) - a + a * a / 2.0 - b + b * b / 2.0 + 1.0 / 3.0;
        let rule = Rule::new(20);
        let k = Kernel::catalog(Process::IntegratedCenteredWiener);
        for &(t, s) in &[(0.3, 0.8), (0.9, 0.45), (1.0, 0.5), (0.6, 0.6)] {
            let v = rule.integrate(0.0, t, |a| {
                rule.integrate_pieces(&[0.0, a.min(s), s], |b| centered(a, b))
            });
            assert!((v - k.eval(t, s)).abs() < 1e-14, "({t},{s})");
        }
    }

    #[test]
    fn centered_integrated_wiener_is_green_function_of_squared_bridge_operator() {
        // G(·, s) is a cubic on each side of s with u = u'' = 0 at both ends
        // and a unit jump of ∂³_t G across the diagonal.
        let k = Kernel::catalog(Process::IntegratedCenteredWiener);
        let h = 1e-3;
        for &s in &[0.2, 0.5, 0.77] {
            assert!(k.eval(0.0, s).abs() < 1e-15 && k.eval(1.0, s).abs() < 1e-15);
            let d2 = |t: f64| (k.eval(t + h, s) - 2.0 * k.eval(t, s) + k.eval(t - h, s)) / (h * h);
            // the second difference is exact for cubics, so extrapolate linearly
            assert!((2.0 * d2(h) - d2(2.0 * h)).abs() < 1e-6);
            assert!((2.0 * d2(1.0 - h) - d2(1.0 - 2.0 * h)).abs() < 1e-6);
            let third = |t: f64| {
                (k.eval(t + 2.0 * h, s) - 2.0 * k.eval(t + h, s) + 2.0 * k.eval(t - h, s)
                    - k.eval(t - 2.0 * h, s))
                    / (2.0 * h * h * h)
            };
            let jump = third(s + 0.05) - third(s - 0.05);
            assert!((jump - 1.0).abs() < 1e-5, "jump {jump}");
        }
    }

    #[test]
    fn base_spectrum_formulas() {
        let w = Process::Wiener.spectrum_formula().unwrap();
        assert!((w.lambda(1) - 4.0 / (PI * PI)).abs() < 1e-15);
        assert!((w.lambda(10) - (9.5 * PI).powi(-2)).abs() < 1e-18);
        let b = Process::BrownianBridge.spectrum_formula().unwrap();
        assert!((b.lambda(2) - 1.0 / (4.0 * PI * PI)).abs() < 1e-16);
        assert!(Process::Slepian.spectrum_formula().is_none());
    }

    #[test]
    fn csv_table_round_trip_and_interpolation() {
        let text = "3\n0,0,0\n0,0.5,0.5\n0,0.5,1\n";
        let table = KernelTable::parse_csv(text).unwrap();
        let k = Kernel::custom(table);
        assert!((k.eval(0.5, 1.0) - 0.5).abs() < 1e-15);
        assert!((k.eval(0.75, 0.75) - 0.625).abs() < 1e-15);
        assert!(KernelTable::parse_csv("2\n1,2,3").is_err());
        assert!(KernelTable::parse_csv("x\n1").is_err());
    }

    #[test]
    fn process_tags_round_trip() {
        for p in Process::ALL {
            assert_eq!(p.tag().parse::<Process>().unwrap(), p);
        }
        assert!("brownian".parse::<Process>().is_err());
    }
}

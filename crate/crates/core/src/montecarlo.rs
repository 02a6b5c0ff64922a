//! Seeded simulation from truncated Karhunen–Loève expansions
//! `X = Σ √λ_k u_k ξ_k`.
//!
//! Every sample `i` draws its Gaussian coefficients from its own ChaCha
//! stream `offset + i` under the master seed, so batches are reproducible
//! bit for bit and independent batches are obtained by disjoint offsets.
//! Coefficients are never stored: any later pathwise functional regenerates
//! them from the stream.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, Side};
use crate::quadrature::{gauss_legendre, norm_cdf, Grid, NORMAL_CUTOFF};
use crate::spectral::{base_spectrum, nystrom_spectrum, Provenance, Spectrum};
use crate::transform::Transform;
use crate::weight::{Weight, WeightPart};

/// Samples per work unit. Results do not depend on the thread count.
const CHUNK: usize = 256;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;
/// Asymptotic two-sample Kolmogorov–Smirnov coefficient at level 1%.
const KS_C_1PCT: f64 = 1.627624;
/// Nyström eigenfunctions on coarser grids do not resolve derivatives.
const MIN_DIPOLE_GRID: usize = 256;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fill `out` with independent standard normals from stream `stream` of `seed`,
/// the same source every sampler here draws from.
pub fn fill_normals(seed: u64, stream: u64, out: &mut [f64]) {
    let mut rng = stream_rng(seed, stream);
    for x in out {
        *x = rng.sample(StandardNormal);
    }
}

/// Map `f` over consecutive chunks of `0..n` on all cores, in chunk order.
fn par_chunks<T: Send>(n: usize, f: impl Fn(Range<usize>) -> T + Sync) -> Vec<T> {
    let chunks = n.div_ceil(CHUNK);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..chunks).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let threads = std::thread::available_parallelism()
        .map(|t| t.get())
        .unwrap_or(1)
        .min(chunks.max(1));
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let c = next.fetch_add(1, Ordering::Relaxed);
                if c >= chunks {
                    break;
                }
                let out = f(c * CHUNK..((c + 1) * CHUNK).min(n));
                slots.lock().unwrap()[c] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every chunk is processed"))
        .collect()
}

/// `Σ_k ξ_k B[k, j]` for every sample and column `j` of the `N × m` matrix,
/// as a row-major `n × m` table.
fn project(seed: u64, offset: u64, n: usize, cols: &faer::Mat<f64>) -> Vec<f64> {
    let terms = cols.nrows();
    let m = cols.ncols();
    let parts = par_chunks(n, |range| {
        let rows = range.len();
        let mut xi = vec![0.0; rows * terms];
        for (r, i) in range.enumerate() {
            fill_normals(seed, offset + i as u64, &mut xi[r * terms..(r + 1) * terms]);
        }
        let xi = faer::Mat::<f64>::from_fn(rows, terms, |r, k| xi[r * terms + k]);
        let prod = &xi * cols;
        let mut out = Vec::with_capacity(rows * m);
        for r in 0..rows {
            for j in 0..m {
                out.push(prod[(r, j)]);
            }
        }
        out
    });
    parts.concat()
}

/// Estimate of `Σ_{k>n} λ_k`: the listed remainder plus a power-law
/// extrapolation `λ_k ≈ λ_m (k/m)^{−p}` past the last listed value.
pub fn tail_estimate(eigenvalues: &[f64], n: usize) -> f64 {
    let m = eigenvalues.len();
    let listed: f64 = eigenvalues.iter().skip(n).sum();
    if m < 8 {
        return listed;
    }
    let (a, b) = (eigenvalues[m / 2 - 1], eigenvalues[m - 1]);
    if !(a > 0.0 && b > 0.0) {
        return listed;
    }
    let p = (a / b).ln() / (m as f64 / (m / 2) as f64).ln();
    if p <= 1.01 {
        return f64::INFINITY;
    }
    listed + b * m as f64 / (p - 1.0)
}

/// Quadrature form of the linear functional `X ↦ ⟨φ, X⟩`.
///
/// Density parts use composite Gauss–Legendre nodes between the weight's
/// breakpoints; the normal-quantile part is integrated in `x = Φ⁻¹(t)` over
/// `|x| ≤ 8`; point masses evaluate and dipoles differentiate
/// (`⟨δ′(·−a), X⟩ = −X′(a)`, one-sided at the endpoints).
#[derive(Debug, Clone)]
pub struct Functional {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    atoms: Vec<(f64, f64)>,
    dipoles: Vec<(f64, f64)>,
    /// True when `nodes` are the nodes of the grid passed to [`Functional::on_grid`].
    grid_aligned: bool,
}

impl Functional {
    /// Resolution `panels` per unit length, 8 nodes per panel.
    pub fn new(weight: &Weight, panels: usize) -> Self {
        let panels = panels.max(16);
        let (gx, gw) = gauss_legendre(8);
        let mut f = Self::atoms_of(weight);
        for part in weight.parts() {
            match part {
                WeightPart::Density(w) => {
                    let mut b = vec![0.0, 1.0];
                    b.extend(w.breakpoints().into_iter().filter(|&x| x > 0.0 && x < 1.0));
                    b.sort_by(f64::total_cmp);
                    b.dedup();
                    for piece in b.windows(2) {
                        let len = piece[1] - piece[0];
                        let np = ((len * panels as f64).ceil() as usize).max(1);
                        let h = len / np as f64;
                        for p in 0..np {
                            let lo = piece[0] + p as f64 * h;
                            for (x, wt) in gx.iter().zip(&gw) {
                                let t = lo + 0.5 * h * (x + 1.0);
                                f.nodes.push(t);
                                f.weights.push(0.5 * h * wt * w.eval(t));
                            }
                        }
                    }
                }
                WeightPart::NormalQuantile { coef } => {
                    // dt = ϕ(x) dx ≤ 0.4 dx, so 8× the panels keeps the t-spacing
                    let np = 8 * panels;
                    let h = 2.0 * NORMAL_CUTOFF / np as f64;
                    for p in 0..np {
                        let lo = -NORMAL_CUTOFF + p as f64 * h;
                        for (x, wt) in gx.iter().zip(&gw) {
                            f.nodes.push(norm_cdf(lo + 0.5 * h * (x + 1.0)));
                            f.weights.push(coef * 0.5 * h * wt);
                        }
                    }
                }
                _ => {}
            }
        }
        f
    }

    /// Density parts integrated with the rule of `grid`; other parts as in
    /// [`Functional::new`].
    pub fn on_grid(weight: &Weight, grid: &Grid) -> Self {
        let mut f = Self::new(&Self::without_density(weight), 16);
        if f.nodes.is_empty() {
            f.grid_aligned = true;
        }
        let density: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&t| {
                weight
                    .parts()
                    .iter()
                    .map(|p| match p {
                        WeightPart::Density(w) => w.eval(t),
                        _ => 0.0,
                    })
                    .sum::<f64>()
            })
            .collect();
        if weight
            .parts()
            .iter()
            .any(|p| matches!(p, WeightPart::Density(_)))
        {
            let (mut nodes, mut weights) = (grid.nodes.clone(), Vec::with_capacity(grid.len()));
            for (w, d) in grid.weights.iter().zip(&density) {
                weights.push(w * d);
            }
            nodes.append(&mut f.nodes);
            weights.append(&mut f.weights);
            f.nodes = nodes;
            f.weights = weights;
        }
        f
    }

    fn without_density(weight: &Weight) -> Weight {
        let parts: Vec<WeightPart> = weight
            .parts()
            .iter()
            .filter(|p| !matches!(p, WeightPart::Density(_)))
            .cloned()
            .collect();
        Weight::from_parts(parts).unwrap_or_else(|_| Weight::point_mass(0.0))
    }

    fn atoms_of(weight: &Weight) -> Self {
        let mut f = Functional {
            nodes: Vec::new(),
            weights: Vec::new(),
            atoms: Vec::new(),
            dipoles: Vec::new(),
            grid_aligned: false,
        };
        for part in weight.parts() {
            match part {
                WeightPart::PointMass { at, coef } => f.atoms.push((*at, *coef)),
                WeightPart::Dipole { at, coef } => f.dipoles.push((*at, *coef)),
                _ => {}
            }
        }
        f
    }

    pub fn has_dipole(&self) -> bool {
        !self.dipoles.is_empty()
    }

    /// `⟨φ, f⟩` given `f` and its one-sided derivative.
    pub fn apply(
        &self,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64, Option<Side>) -> Result<f64>,
    ) -> Result<f64> {
        let mut total: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, w)| w * f(t))
            .sum();
        for &(at, c) in &self.atoms {
            total += c * f(at);
        }
        for &(at, c) in &self.dipoles {
            let d = if at >= 1.0 {
                df(at, Some(Side::Below))?
            } else if at <= 0.0 {
                df(at, Some(Side::Above))?
            } else {
                0.5 * (df(at, Some(Side::Below))? + df(at, Some(Side::Above))?)
            };
            total -= c * d;
        }
        Ok(total)
    }

    /// `c_k = ⟨φ, u_k⟩` for the leading `n` eigenfunctions.
    pub fn coefficients(&self, spectrum: &Spectrum, n: usize) -> Result<Vec<f64>> {
        if n > spectrum.len() {
            return Err(Error::OutOfRange {
                index: n,
                len: spectrum.len(),
            });
        }
        if self.has_dipole()
            && spectrum.provenance == Provenance::Nystrom
            && spectrum.grid.len() < MIN_DIPOLE_GRID
        {
            return Err(Error::Resolution(format!(
                "dipole functional needs a Nyström grid of at least {MIN_DIPOLE_GRID} nodes, got {}",
                spectrum.grid.len()
            )));
        }
        let aligned = self.grid_aligned || self.nodes.starts_with(&spectrum.grid.nodes);
        let on_grid = if aligned { spectrum.grid.len() } else { 0 };
        (0..n)
            .map(|k| {
                let u = spectrum.function(k)?;
                let mut c: f64 = self.weights[..on_grid]
                    .iter()
                    .zip(&spectrum.eigenfunctions[k])
                    .map(|(w, v)| w * v)
                    .sum();
                let rest = Functional {
                    nodes: self.nodes[on_grid..].to_vec(),
                    weights: self.weights[on_grid..].to_vec(),
                    atoms: self.atoms.clone(),
                    dipoles: self.dipoles.clone(),
                    grid_aligned: false,
                };
                c += rest.apply(|t| u.value(t), |t, side| u.derivative(t, side))?;
                Ok(c)
            })
            .collect()
    }
}

/// Where paths are observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLayout {
    pub points: Vec<f64>,
    /// Quadrature weights when the points form a grid, enabling path norms.
    pub weights: Option<Vec<f64>>,
}

impl PathLayout {
    pub fn points(points: Vec<f64>) -> Self {
        PathLayout {
            points,
            weights: None,
        }
    }

    pub fn grid(grid: &Grid) -> Self {
        PathLayout {
            points: grid.nodes.clone(),
            weights: Some(grid.weights.clone()),
        }
    }

    /// Midpoints `(i + ½)/n`.
    pub fn midpoints(n: usize) -> Self {
        Self::points((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect())
    }
}

/// A transform applied to a batch, with its per-path functional values.
#[derive(Debug, Clone)]
struct Applied {
    tr: Transform,
    functional: Vec<f64>,
}

/// Sampled paths on a [`PathLayout`], with enough state to regenerate the
/// Gaussian coefficients.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub layout: PathLayout,
    /// Row-major `n_paths × points`.
    pub values: Vec<f64>,
    pub n_paths: usize,
    basis: Arc<Spectrum>,
    applied: Vec<Applied>,
}

impl PathSet {
    pub fn path(&self, i: usize) -> &[f64] {
        let m = self.layout.points.len();
        &self.values[i * m..(i + 1) * m]
    }

    /// Number of transforms applied since sampling.
    pub fn transforms(&self) -> usize {
        self.applied.len()
    }
}

#[derive(Debug, Clone)]
pub enum Samples {
    Paths(PathSet),
    Norm2(Vec<f64>),
}

/// A reproducible Monte Carlo batch.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub seed: u64,
    /// Stream of sample `i` is `stream_offset + i`.
    pub stream_offset: u64,
    /// Number of KL terms `N`.
    pub truncation: usize,
    /// Estimate of `Σ_{k>N} λ_k`.
    pub tail_bound: f64,
    pub samples: Samples,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        match &self.samples {
            Samples::Paths(p) => p.n_paths,
            Samples::Norm2(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn paths(&self) -> Result<&PathSet> {
        match &self.samples {
            Samples::Paths(p) => Ok(p),
            Samples::Norm2(_) => Err(Error::Precondition("batch holds norm samples".into())),
        }
    }

    /// True when the tail is below `1e-4` of the total mass.
    pub fn meets_truncation_rule(&self, total: f64) -> bool {
        self.tail_bound < 1e-4 * total
    }

    /// Squared L₂ norms: the samples themselves, or grid quadrature of the
    /// paths when the layout carries weights.
    pub fn norms2(&self) -> Result<Vec<f64>> {
        match &self.samples {
            Samples::Norm2(v) => Ok(v.clone()),
            Samples::Paths(p) => {
                let w = p.layout.weights.as_ref().ok_or_else(|| {
                    Error::Precondition("path norms need a quadrature layout".into())
                })?;
                Ok((0..p.n_paths)
                    .map(|i| p.path(i).iter().zip(w).map(|(x, w)| w * x * x).sum())
                    .collect())
            }
        }
    }
}

/// KL spectrum of a kernel for simulation: closed form for catalog
/// processes that have one, Nyström otherwise.
pub fn base_kl(kernel: &Kernel, n_terms: usize) -> Result<Spectrum> {
    if let Some(p) = kernel.process() {
        if p.spectrum_formula().is_some() {
            return base_spectrum(p, n_terms, &Grid::gauss_legendre(64));
        }
    }
    nystrom_spectrum(kernel, 1024.max(4 * n_terms), n_terms)
}

/// Paths `Σ_{k≤N} √λ_k u_k ξ_k` on `layout` from streams `0..n_paths`.
pub fn sample_paths(
    spectrum: &Spectrum,
    layout: &PathLayout,
    n_paths: usize,
    n_terms: usize,
    seed: u64,
) -> Result<SampleBatch> {
    sample_paths_from(spectrum, layout, n_paths, n_terms, seed, 0)
}

/// [`sample_paths`] from streams `offset..offset + n_paths`.
pub fn sample_paths_from(
    spectrum: &Spectrum,
    layout: &PathLayout,
    n_paths: usize,
    n_terms: usize,
    seed: u64,
    offset: u64,
) -> Result<SampleBatch> {
    if n_terms == 0 || n_terms > spectrum.len() {
        return Err(Error::Precondition(format!(
            "need 1 ≤ terms ≤ {} available eigenpairs, got {n_terms}",
            spectrum.len()
        )));
    }
    let m = layout.points.len();
    let mut cols = faer::Mat::<f64>::zeros(n_terms, m);
    for k in 0..n_terms {
        let s = spectrum.eigenvalues[k].max(0.0).sqrt();
        let u = spectrum.function(k)?;
        for (j, &t) in layout.points.iter().enumerate() {
            cols[(k, j)] = s * u.value(t);
        }
    }
    let values = project(seed, offset, n_paths, &cols);
    Ok(SampleBatch {
        seed,
        stream_offset: offset,
        truncation: n_terms,
        tail_bound: tail_estimate(&spectrum.eigenvalues, n_terms),
        samples: Samples::Paths(PathSet {
            layout: layout.clone(),
            values,
            n_paths,
            basis: Arc::new(spectrum.clone()),
            applied: Vec::new(),
        }),
    })
}

/// `⟨φ, X⟩` for every path of the batch, where `X` is the process the
/// batch currently represents (base paths with all applied transforms).
pub fn pathwise_functional(batch: &SampleBatch, weight: &Weight) -> Result<Vec<f64>> {
    let p = batch.paths()?;
    let f = functional_for(weight, &p.basis, batch.truncation);
    let c = f.coefficients(&p.basis, batch.truncation)?;
    let cols = faer::Mat::<f64>::from_fn(batch.truncation, 1, |k, _| {
        p.basis.eigenvalues[k].max(0.0).sqrt() * c[k]
    });
    let mut values = project(batch.seed, batch.stream_offset, p.n_paths, &cols);
    // ⟨φ, X − Σ α_j ψ_j F_j⟩ = ⟨φ, X⟩ − Σ α_j ⟨φ, ψ_j⟩ F_j
    for a in &p.applied {
        let psi = a.tr.psi();
        let pair = f.apply(|t| psi.eval(t), |t, side| psi.derivative_at(t, side))?;
        let g = a.tr.alpha() * pair;
        for (v, fj) in values.iter_mut().zip(&a.functional) {
            *v -= g * fj;
        }
    }
    Ok(values)
}

fn functional_for(weight: &Weight, basis: &Spectrum, n_terms: usize) -> Functional {
    if basis.provenance == Provenance::Nystrom {
        Functional::on_grid(weight, &basis.grid)
    } else {
        Functional::new(weight, n_terms.max(256))
    }
}

/// Apply `X ↦ X − α ψ ⟨φ, X⟩` to every path.
pub fn transform_paths(batch: &SampleBatch, tr: &Transform) -> Result<SampleBatch> {
    let p = batch.paths()?;
    if tr.alpha() == 0.0 {
        return Ok(batch.clone());
    }
    let f = pathwise_functional(batch, tr.weight())?;
    let psi: Vec<f64> = p.layout.points.iter().map(|&t| tr.psi_at(t)).collect();
    let m = psi.len();
    let mut values = p.values.clone();
    for (i, fi) in f.iter().enumerate() {
        for (v, s) in values[i * m..(i + 1) * m].iter_mut().zip(&psi) {
            *v -= tr.alpha() * s * fi;
        }
    }
    let mut applied = p.applied.clone();
    applied.push(Applied {
        tr: tr.clone(),
        functional: f,
    });
    Ok(SampleBatch {
        samples: Samples::Paths(PathSet {
            values,
            applied,
            layout: p.layout.clone(),
            n_paths: p.n_paths,
            basis: p.basis.clone(),
        }),
        ..batch.clone()
    })
}

/// Samples of `Σ_{k≤N} λ_k ξ_k²` for all listed eigenvalues.
pub fn sample_norm2(eigenvalues: &[f64], n_samples: usize, seed: u64) -> Result<SampleBatch> {
    sample_norm2_from(eigenvalues, n_samples, seed, 0)
}

pub fn sample_norm2_from(
    eigenvalues: &[f64],
    n_samples: usize,
    seed: u64,
    offset: u64,
) -> Result<SampleBatch> {
    if eigenvalues.is_empty() || eigenvalues.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Precondition(
            "eigenvalues must be finite and non-negative".into(),
        ));
    }
    let n = eigenvalues.len();
    let parts = par_chunks(n_samples, |range| {
        let mut xi = vec![0.0; n];
        range
            .map(|i| {
                fill_normals(seed, offset + i as u64, &mut xi);
                eigenvalues
                    .iter()
                    .zip(&xi)
                    .map(|(l, x)| l * x * x)
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
    });
    Ok(SampleBatch {
        seed,
        stream_offset: offset,
        truncation: n,
        tail_bound: tail_estimate(eigenvalues, n),
        samples: Samples::Norm2(parts.concat()),
    })
}

/// Empirical `P{‖X‖₂ ≤ ε}` with a 95% Wilson score interval.
///
/// Truncation only shrinks the norm, so the estimate is biased upward by at
/// most the effect of the neglected tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallEstimate {
    pub eps: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub hits: usize,
    pub n: usize,
    /// At least 10 hits: the moderate regime where MC is meaningful.
    pub moderate: bool,
    pub warning: Option<String>,
}

pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = Z95 / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    if hits == 0 {
        return (0.0, centre + half);
    }
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn empirical_small_ball(batch: &SampleBatch, eps: f64) -> Result<SmallBallEstimate> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let norms = batch.norms2()?;
    let r = eps * eps;
    let hits = norms.iter().filter(|&&v| v <= r).count();
    let n = norms.len();
    let (lower, upper) = wilson_interval(hits, n);
    let warning = if hits == 0 {
        Some(format!(
            "no sample below ε = {eps}; only an upper bound is available"
        ))
    } else if hits < 10 {
        Some(format!("only {hits} samples below ε = {eps}"))
    } else {
        None
    };
    Ok(SmallBallEstimate {
        eps,
        estimate: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
        lower,
        upper,
        hits,
        n,
        moderate: hits >= 10,
        warning,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic with the asymptotic 1% critical
/// value and p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub critical_1pct: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("both samples must be non-empty".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        p += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    Ok(KsTest {
        statistic: d,
        critical_1pct: KS_C_1PCT * ((n + m) / (n * m)).sqrt(),
        p_value: p.clamp(0.0, 1.0),
    })
}

/// Uncentered empirical covariance `mean(X(s)X(t))` on the probe points
/// (the process has zero mean), with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub points: Vec<f64>,
    /// Row-major `m × m`.
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n: usize,
}

/// Worst disagreement of a covariance estimate, in absolute and SE units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub max_z: f64,
    pub max_abs: f64,
    pub worst: (usize, usize),
}

impl Discrepancy {
    fn over(m: usize, f: impl Fn(usize, usize) -> (f64, f64)) -> Self {
        let mut d = Discrepancy {
            max_z: 0.0,
            max_abs: 0.0,
            worst: (0, 0),
        };
        for i in 0..m {
            for j in 0..m {
                let (diff, se) = f(i, j);
                let z = if se > 0.0 {
                    diff.abs() / se
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                d.max_abs = d.max_abs.max(diff.abs());
                if z > d.max_z {
                    d.max_z = z;
                    d.worst = (i, j);
                }
            }
        }
        d
    }
}

impl CovarianceEstimate {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.points.len() + j]
    }

    /// Against a kernel evaluated exactly at the probe pairs.
    pub fn against_kernel(&self, kernel: &Kernel) -> Discrepancy {
        let m = self.points.len();
        Discrepancy::over(m, |i, j| {
            let k = i * m + j;
            (
                self.values[k] - kernel.eval(self.points[i], self.points[j]),
                self.std_errors[k],
            )
        })
    }

    /// Against an independent estimate on the same points.
    pub fn against(&self, other: &CovarianceEstimate) -> Result<Discrepancy> {
        if self.points != other.points {
            return Err(Error::Precondition(
                "estimates use different probe points".into(),
            ));
        }
        let m = self.points.len();
        Ok(Discrepancy::over(m, |i, j| {
            let k = i * m + j;
            (
                self.values[k] - other.values[k],
                self.std_errors[k].hypot(other.std_errors[k]),
            )
        }))
    }
}

pub fn empirical_covariance(batch: &SampleBatch) -> Result<CovarianceEstimate> {
    let p = batch.paths()?;
    let m = p.layout.points.len();
    if p.n_paths < 2 {
        return Err(Error::Precondition("need at least two paths".into()));
    }
    let sums = par_chunks(p.n_paths, |range| {
        let mut s1 = vec![0.0; m * m];
        let mut s2 = vec![0.0; m * m];
        for i in range {
            let x = p.path(i);
            for a in 0..m {
                for b in 0..m {
                    let v = x[a] * x[b];
                    s1[a * m + b] += v;
                    s2[a * m + b] += v * v;
                }
            }
        }
        (s1, s2)
    });
    let mut s1 = vec![0.0; m * m];
    let mut s2 = vec![0.0; m * m];
    for (a, b) in sums {
        s1.iter_mut().zip(&a).for_each(|(x, y)| *x += y);
        s2.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
    }
    let n = p.n_paths as f64;
    let values: Vec<f64> = s1.iter().map(|s| s / n).collect();
    let std_errors = s2
        .iter()
        .zip(&values)
        .map(|(s, mean)| ((s / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok(CovarianceEstimate {
        points: p.layout.points.clone(),
        values,
        std_errors,
        n: p.n_paths,
    })
}

/// Sizes and seed of a covariance experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub n_paths: usize,
    pub n_terms: usize,
    pub seed: u64,
    /// Probes are the midpoints `(i + ½)/n_probes`.
    pub n_probes: usize,
}

/// Empirical covariance of transformed paths against `G + Qψψᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainLemmaReport {
    pub alpha: f64,
    pub big_q: f64,
    pub n_paths: usize,
    pub n_terms: usize,
    pub pairs: usize,
    pub tail_bound: f64,
    pub discrepancy: Discrepancy,
}

pub fn main_lemma_check(tr: &Transform, s: &McSettings) -> Result<MainLemmaReport> {
    let basis = base_kl(tr.kernel(), s.n_terms)?;
    let layout = PathLayout::midpoints(s.n_probes);
    let batch = sample_paths(&basis, &layout, s.n_paths, s.n_terms, s.seed)?;
    let out = transform_paths(&batch, tr)?;
    let cov = empirical_covariance(&out)?;
    Ok(MainLemmaReport {
        alpha: tr.alpha(),
        big_q: tr.big_q(),
        n_paths: s.n_paths,
        n_terms: s.n_terms,
        pairs: s.n_probes * s.n_probes,
        tail_bound: batch.tail_bound,
        discrepancy: cov.against_kernel(&tr.transformed_kernel()),
    })
}

/// Covariances of the transforms at `α` and at `2/q − α` from disjoint
/// streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary1Report {
    pub alpha: f64,
    pub dual_alpha: f64,
    pub n_paths: usize,
    pub n_terms: usize,
    pub pairs: usize,
    pub discrepancy: Discrepancy,
}

pub fn corollary1_check(tr: &Transform, s: &McSettings) -> Result<Corollary1Report> {
    let basis = base_kl(tr.kernel(), s.n_terms)?;
    let layout = PathLayout::midpoints(s.n_probes);
    let dual = tr.dual();
    let a = sample_paths_from(&basis, &layout, s.n_paths, s.n_terms, s.seed, 0)?;
    let b = sample_paths_from(
        &basis,
        &layout,
        s.n_paths,
        s.n_terms,
        s.seed,
        s.n_paths as u64,
    )?;
    let ca = empirical_covariance(&transform_paths(&a, tr)?)?;
    let cb = empirical_covariance(&transform_paths(&b, &dual)?)?;
    Ok(Corollary1Report {
        alpha: tr.alpha(),
        dual_alpha: dual.alpha(),
        n_paths: s.n_paths,
        n_terms: s.n_terms,
        pairs: s.n_probes * s.n_probes,
        discrepancy: ca.against(&cb)?,
    })
}

/// `(max_i |⟨φ, X̃_i⟩|, corr(X̃(x*), ⟨φ, X⟩))` for untransformed paths, where
/// `x*` is the middle probe. Any `α`; see [`corollary2_residual`].
pub fn functional_residual(tr: &Transform, batch: &SampleBatch) -> Result<(f64, f64)> {
    let p = batch.paths()?;
    if p.transforms() > 0 {
        return Err(Error::Precondition(
            "paths must come from the base process".into(),
        ));
    }
    let f = pathwise_functional(batch, tr.weight())?;
    let out = transform_paths(batch, tr)?;
    let ft = pathwise_functional(&out, tr.weight())?;
    let residual = ft.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pt = out.paths()?;
    let mid = pt.layout.points.len() / 2;
    let x: Vec<f64> = (0..pt.n_paths).map(|i| pt.path(i)[mid]).collect();
    Ok((residual, correlation(&x, &f)))
}

/// [`functional_residual`] restricted to the critical `α = 1/q`, where both
/// numbers vanish up to quadrature and sampling error.
pub fn corollary2_residual(tr: &Transform, batch: &SampleBatch) -> Result<(f64, f64)> {
    if !tr.is_critical() {
        return Err(Error::Precondition(format!(
            "α = {} is not critical (1/q = {})",
            tr.alpha(),
            1.0 / tr.q()
        )));
    }
    functional_residual(tr, batch)
}

/// Sample Pearson correlation; zero when either side is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Sample mean and its standard error.
pub fn mean_with_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

//! Validation suites: named numerical checks with measured values and
//! tolerances, collected into a machine-readable report.
//!
//! Reports contain no timings, so a fixed seed gives byte-identical output.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, Process};
use crate::montecarlo::{
    base_kl, corollary1_check, corollary2_residual, empirical_small_ball, fill_normals,
    ks_two_sample, main_lemma_check, mean_with_se, sample_norm2_from, sample_paths,
    transform_paths, McSettings, PathLayout,
};
use crate::quadrature::Grid;
use crate::smallball::{
    deconvolve_first, jensen_limit, predict, theorem2_convolution, theorem3_scale,
    DistributionCurve, JensenProbe,
};
use crate::spectral::{
    base_spectrum, fourier_coefficients, interlacing_check, nystrom_null_mode, nystrom_spectrum,
    solve_branch, solve_roots, transformed_kl, EigenEquationSpec, EquationBranch, Example,
};
use crate::transform::{compute_q, critical_alpha, dual_alpha, q_double_integral, Transform};
use crate::weight::Weight;

/// Version of the report layout.
pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma,
    Spectra,
    Smallball,
    Montecarlo,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["lemma", "spectra", "smallball", "montecarlo", "all"];

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma" => Ok(Suite::Lemma),
            "spectra" => Ok(Suite::Spectra),
            "smallball" => Ok(Suite::Smallball),
            "montecarlo" => Ok(Suite::Montecarlo),
            "all" => Ok(Suite::All),
            _ => Err(Error::Config(format!(
                "unknown suite `{s}`; expected one of {}",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = *self as usize;
        f.write_str(Suite::NAMES[i])
    }
}

/// How `measured` is compared with `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// Pass when `measured ≤ tolerance`.
    Below,
    /// Pass when `measured ≥ tolerance`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    /// Acceptance criterion number, for checks that implement one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u8>,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
    /// Advisory checks are reported but do not decide the report outcome.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub advisory: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64, relation: Relation) -> Self {
        let passed = match relation {
            Relation::Below => measured <= tolerance,
            Relation::Above => measured >= tolerance,
        };
        Check {
            suite: Suite::All,
            criterion: None,
            name: name.into(),
            measured,
            tolerance,
            relation,
            passed,
            advisory: false,
            note: None,
        }
    }

    fn below(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, tolerance, Relation::Below)
    }

    fn above(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, tolerance, Relation::Above)
    }

    /// A yes/no outcome recorded as `1` or `0` against `1`.
    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::above(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && !c.advisory)
    }
}

struct Group {
    suite: Suite,
    criterion: Option<u8>,
    label: &'static str,
    run: fn(u64) -> Result<Vec<Check>>,
}

const GROUPS: &[Group] = &[
    Group {
        suite: Suite::Lemma,
        criterion: None,
        label: "transform identities",
        run: identities,
    },
    Group {
        suite: Suite::Lemma,
        criterion: Some(8),
        label: "main lemma covariance",
        run: main_lemma,
    },
    Group {
        suite: Suite::Spectra,
        criterion: Some(2),
        label: "eigen-equation reductions",
        run: reductions,
    },
    Group {
        suite: Suite::Spectra,
        criterion: Some(3),
        label: "oracle agreement",
        run: oracle_agreement,
    },
    Group {
        suite: Suite::Spectra,
        criterion: Some(5),
        label: "parseval",
        run: parseval,
    },
    Group {
        suite: Suite::Spectra,
        criterion: Some(6),
        label: "critical zero mode",
        run: zero_mode,
    },
    Group {
        suite: Suite::Spectra,
        criterion: Some(7),
        label: "double root",
        run: double_root,
    },
    Group {
        suite: Suite::Spectra,
        criterion: None,
        label: "interlacing",
        run: interlacing,
    },
    Group {
        suite: Suite::Smallball,
        criterion: Some(1),
        label: "small-ball constants",
        run: constants,
    },
    Group {
        suite: Suite::Smallball,
        criterion: Some(4),
        label: "fredholm ratio",
        run: fredholm,
    },
    Group {
        suite: Suite::Smallball,
        criterion: Some(10),
        label: "critical convolution",
        run: convolution,
    },
    Group {
        suite: Suite::Smallball,
        criterion: Some(11),
        label: "deconvolution",
        run: deconvolution,
    },
    Group {
        suite: Suite::Smallball,
        criterion: Some(12),
        label: "contour limit",
        run: contour_limit,
    },
    Group {
        suite: Suite::Montecarlo,
        criterion: Some(9),
        label: "duality covariance",
        run: duality,
    },
    Group {
        suite: Suite::Montecarlo,
        criterion: None,
        label: "critical decoupling",
        run: decoupling,
    },
    Group {
        suite: Suite::Montecarlo,
        criterion: None,
        label: "norm moments",
        run: norm_moments,
    },
    Group {
        suite: Suite::Montecarlo,
        criterion: None,
        label: "two-route norm law",
        run: two_routes,
    },
    Group {
        suite: Suite::Montecarlo,
        criterion: None,
        label: "small-ball trend",
        run: small_ball_trend,
    },
];

fn execute(g: &Group, seed: u64) -> Vec<Check> {
    let mut checks = (g.run)(seed)
        .unwrap_or_else(|e| vec![Check::holds(g.label, false).with_note(e.to_string())]);
    for c in &mut checks {
        c.suite = g.suite;
        c.criterion = g.criterion;
    }
    checks
}

/// Run every check of `suite`.
pub fn run(suite: Suite, seed: u64) -> Report {
    let checks: Vec<Check> = GROUPS
        .iter()
        .filter(|g| suite.includes(g.suite))
        .flat_map(|g| execute(g, seed))
        .collect();
    Report {
        schema: SCHEMA,
        suite,
        seed,
        passed: checks.iter().all(|c| c.passed || c.advisory),
        checks,
    }
}

/// Criterion numbers implemented here; determinism of whole reports is
/// checked by running [`run`] twice.
pub fn criteria() -> Vec<u8> {
    let mut ids: Vec<u8> = GROUPS.iter().filter_map(|g| g.criterion).collect();
    ids.sort_unstable();
    ids
}

/// The checks of one acceptance criterion, or `None` for an unknown number.
pub fn criterion(id: u8, seed: u64) -> Option<Vec<Check>> {
    let g = GROUPS.iter().find(|g| g.criterion == Some(id))?;
    Some(execute(g, seed))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn transform(kernel: Kernel, weight: &str, alpha: f64) -> Result<Transform> {
    Transform::new(&kernel, &Weight::parse(weight)?, alpha)
}

fn bridge_eigenvalues(n: usize) -> Vec<f64> {
    (1..=n).map(|k| (k as f64 * PI).powi(-2)).collect()
}

fn identities(_: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (kernel, weight, alpha) in [
        (Kernel::bridge(), "const1", 3.0),
        (Kernel::wiener(), "const1", 0.7),
        (Kernel::bridge(), "poly:t*(1-t)", 50.0),
        (
            Kernel::catalog(Process::IntegratedCenteredWiener),
            "const1",
            30.0,
        ),
    ] {
        let tr = transform(kernel.clone(), weight, alpha)?;
        let name = format!(
            "{} {weight}",
            kernel.process().map_or("custom", Process::tag)
        );
        let (a, b) = (tr.transformed_kernel(), tr.dual().transformed_kernel());
        let grid = Grid::uniform(41);
        let mut gap = 0.0f64;
        for &t in &grid.nodes {
            for &s in &grid.nodes {
                gap = gap.max((a.eval(t, s) - b.eval(t, s)).abs());
            }
        }
        out.push(Check::below(
            format!("{name}: dual kernels agree"),
            gap,
            1e-12,
        ));
        let q = tr.q();
        let lhs = 1.0 + tr.big_q() * q;
        out.push(Check::below(
            format!("{name}: 1 + Qq = (1 - alpha q)^2"),
            (lhs - (1.0 - alpha * q).powi(2)).abs(),
            1e-12,
        ));
        let direct = q_double_integral(&kernel, tr.weight())?;
        out.push(Check::below(
            format!("{name}: q by two quadrature routes"),
            rel(compute_q(&kernel, tr.weight())?, direct),
            1e-8,
        ));
    }
    Ok(out)
}

fn main_lemma(seed: u64) -> Result<Vec<Check>> {
    let tr = transform(Kernel::bridge(), "const1", 5.0)?;
    let s = McSettings {
        n_paths: 100_000,
        n_terms: 2000,
        seed,
        n_probes: 32,
    };
    let r = main_lemma_check(&tr, &s)?;
    Ok(vec![Check::below(
        "bridge const1 alpha=5: covariance max |z| over 32x32 probes",
        r.discrepancy.max_z,
        4.0,
    )
    .with_note(format!(
        "{} paths, {} terms, max abs deviation {:.3e}",
        r.n_paths, r.n_terms, r.discrepancy.max_abs
    ))])
}

fn reductions(_: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let spec = EigenEquationSpec::new(Example::Ex1, 0.0, EquationBranch::Second)?;
    let roots = solve_branch(&spec, 20)?;
    let gap = roots
        .iter()
        .enumerate()
        .map(|(k, x)| (x - (k as f64 + 0.5) * PI).abs())
        .fold(0.0, f64::max);
    out.push(Check::below("Ex1 at Q=0: roots (k - 1/2) pi", gap, 1e-12));
    for ex in [Example::Ex2, Example::Ex3, Example::Ex4] {
        let seq = solve_roots(ex, 0.0, 10)?;
        let gap = seq
            .roots
            .iter()
            .take(20)
            .enumerate()
            .map(|(k, r)| (r.x - (k as f64 + 1.0) * 0.5 * PI).abs())
            .fold(0.0, f64::max);
        out.push(Check::below(
            format!("{ex:?} at Q=0: merged roots k pi/2"),
            gap,
            1e-12,
        ));
    }
    for (ex, alpha) in [(Example::Ex1, 3.0), (Example::Ex2, 12.0)] {
        let q = ex.canonical_q();
        let spec =
            EigenEquationSpec::new(ex, q * alpha * alpha - 2.0 * alpha, EquationBranch::Second)?;
        let roots = solve_branch(&spec, 10)?;
        let res = roots
            .iter()
            .map(|x| (x.sin() - x * x.cos()).abs())
            .fold(0.0, f64::max);
        out.push(Check::below(
            format!("{ex:?} alpha={alpha}: roots solve tan x = x"),
            res,
            1e-10,
        ));
    }
    Ok(out)
}

fn oracle_agreement(_: u64) -> Result<Vec<Check>> {
    let cases = [
        (Example::Ex1, Kernel::wiener(), "const1"),
        (Example::Ex2, Kernel::bridge(), "const1"),
        (Example::Ex3, Kernel::bridge(), "poly:t*(1-t)"),
        (
            Example::Ex4,
            Kernel::catalog(Process::IntegratedCenteredWiener),
            "const1",
        ),
    ];
    let mut out = Vec::new();
    for (ex, kernel, weight) in cases {
        let base = transform(kernel, weight, 0.0)?;
        let q = base.q();
        for (label, alpha) in [
            ("0", 0.0),
            ("1", 1.0),
            ("1/q", critical_alpha(q)),
            ("2/q", dual_alpha(q, 0.0)),
        ] {
            let tr = base.with_alpha(alpha);
            let analytic = transformed_kl(&tr, 10)?.eigenvalues;
            let oracle = nystrom_spectrum(&tr.transformed_kernel(), 1000, 10)?.eigenvalues;
            let err = analytic
                .iter()
                .zip(&oracle)
                .map(|(a, b)| rel(*b, *a))
                .fold(0.0, f64::max);
            out.push(Check::below(
                format!("{ex:?} alpha={label}: first 10 eigenvalues vs Nystrom"),
                err,
                1e-3,
            ));
        }
    }
    Ok(out)
}

fn parseval(_: u64) -> Result<Vec<Check>> {
    let grid = Grid::gauss_legendre(2048);
    let mut out = Vec::new();
    for process in [Process::BrownianBridge, Process::Wiener] {
        let spectrum = base_spectrum(process, 200, &grid)?;
        for weight in ["const1", "poly:t*(1-t)"] {
            let tr = Transform::with_grid(
                &Kernel::catalog(process),
                &Weight::parse(weight)?,
                1.0,
                grid.clone(),
            )?;
            let fc = fourier_coefficients(&spectrum, &tr, 200)?;
            let sum = *fc.partial_sums.last().unwrap();
            out.push(Check::below(
                format!("{process} {weight}: 200-term coefficient sum vs q"),
                rel(sum, tr.q()),
                1e-2,
            ));
        }
    }
    Ok(out)
}

fn zero_mode(_: u64) -> Result<Vec<Check>> {
    let tr = transform(Kernel::bridge(), "const1", 12.0)?;
    let m = nystrom_null_mode(&tr.transformed_kernel(), 1000)?;
    Ok(vec![
        Check::below(
            "bridge const1 alpha=12: smallest / largest Nystrom eigenvalue",
            m.smallest.abs() / m.largest,
            1e-6,
        ),
        Check::above(
            "bridge const1 alpha=12: null vector correlation with the weight",
            m.correlation_with(|_| 1.0),
            0.999,
        ),
    ])
}

fn double_root(_: u64) -> Result<Vec<Check>> {
    let qd = -12.0 / (1.0 + 3.0 / (PI * PI));
    let first = solve_branch(
        &EigenEquationSpec::new(Example::Ex2, qd, EquationBranch::First)?,
        1,
    )?;
    let second = solve_branch(
        &EigenEquationSpec::new(Example::Ex2, qd, EquationBranch::Second)?,
        1,
    )?;
    let seq = solve_roots(Example::Ex2, qd, 3)?;
    let flagged = seq
        .roots
        .first()
        .is_some_and(|r| r.multiplicity == 2 && (r.x - PI).abs() < 1e-8);
    Ok(vec![
        Check::below(
            "Ex2 at the double-root Q: first roots of both branches",
            (first[0] - second[0]).abs(),
            1e-8,
        ),
        Check::holds(
            "Ex2 at the double-root Q: first root has multiplicity 2",
            flagged,
        ),
    ])
}

fn interlacing(_: u64) -> Result<Vec<Check>> {
    let base = bridge_eigenvalues(50);
    let mut out = Vec::new();
    for alpha in [5.0, 30.0] {
        let tr = transform(Kernel::bridge(), "const1", alpha)?;
        let t = transformed_kl(&tr, 50)?.eigenvalues;
        let r = interlacing_check(&base, &t, tr.big_q());
        out.push(Check::holds(
            format!(
                "bridge const1 alpha={alpha} (Q={:.4}): 50 eigenvalues interlace",
                tr.big_q()
            ),
            r.holds,
        ));
    }
    Ok(out)
}

fn constants(_: u64) -> Result<Vec<Check>> {
    let sp = PI.sqrt();
    let s2 = 2f64.sqrt();
    let cases = [
        (Process::Wiener, "const1", 1.0, 4.0 / sp / (2.0 / 3.0), 0.5),
        (
            Process::Wiener,
            "const1",
            3.0,
            2.0 / (3.0 * PI).sqrt(),
            -0.5,
        ),
        (
            Process::BrownianBridge,
            "const1",
            1.0,
            2.0 * s2 / sp / (11.0 / 12.0),
            0.0,
        ),
        (
            Process::BrownianBridge,
            "const1",
            12.0,
            1.0 / (6.0 * PI).sqrt(),
            -1.0,
        ),
        (
            Process::BrownianBridge,
            "poly:t*(1-t)",
            1.0,
            2.0 * s2 / sp / (1.0 - 17.0 / 5040.0),
            0.0,
        ),
        (
            Process::BrownianBridge,
            "poly:t*(1-t)",
            5040.0 / 17.0,
            17f64.sqrt() / (2.0 * (21.0 * PI).sqrt()),
            -1.0,
        ),
        (
            Process::IntegratedCenteredWiener,
            "const1",
            1.0,
            4.0 * s2 / (3.0 * PI).sqrt() / (1.0 - 1.0 / 120.0),
            -1.0 / 6.0,
        ),
        (
            Process::IntegratedCenteredWiener,
            "const1",
            120.0,
            1.0 / (3.0 * (5.0 * PI).sqrt()),
            -5.0 / 6.0,
        ),
        (
            Process::BrownianBridge,
            "normquant",
            0.5,
            2.0 * s2 / (sp * 0.5),
            0.0,
        ),
    ];
    let mut out = Vec::new();
    for (process, weight, alpha, c, beta) in cases {
        let tr = transform(Kernel::catalog(process), weight, alpha)?;
        let (d, branch) = predict(&tr)?;
        let err = rel(d.scale, c).max((d.power - beta).abs());
        out.push(
            Check::below(
                format!("{process} {weight} alpha={alpha}: C and beta"),
                err,
                1e-12,
            )
            .with_note(format!(
                "{branch:?}: C = {:.15e}, beta = {}",
                d.scale, d.power
            )),
        );
    }
    let tr = transform(Kernel::bridge(), "normquant", 1.0)?;
    let refused = matches!(predict(&tr), Err(Error::Inapplicable(_)));
    out.push(
        Check::holds(
            "bridge normquant alpha=1: critical closed form refused",
            refused,
        )
        .with_note("the weight is not square integrable"),
    );
    Ok(out)
}

fn fredholm(_: u64) -> Result<Vec<Check>> {
    let base = bridge_eigenvalues(500);
    let mut out = Vec::new();
    for (alpha, expected) in [(2.0, 25.0 / 36.0), (24.0, 1.0)] {
        let tr = transform(Kernel::bridge(), "const1", alpha)?;
        let t = transformed_kl(&tr, 500)?.eigenvalues;
        let ratio = crate::smallball::fredholm_ratio(&base, &t, 500, false)?;
        let tol = if alpha == 2.0 { 1e-2 } else { 1e-6 };
        out.push(Check::below(
            format!("bridge const1 alpha={alpha}: 500-term eigenvalue product ratio"),
            (ratio - expected).abs(),
            tol,
        ));
    }
    Ok(out)
}

fn convolution(_: u64) -> Result<Vec<Check>> {
    let bridge = Process::BrownianBridge
        .base_small_ball()
        .ok_or_else(|| Error::Unsupported("bridge small-ball constants".into()))?
        .descriptor;
    let q = 1.0 / 12.0;
    let closed = theorem3_scale(&bridge, q, 1.0)?;
    let mut out = Vec::new();
    for (eps, tol) in [(0.05, 0.1), (0.02, 0.03)] {
        let r = eps * eps;
        let curve = DistributionCurve::from_descriptor(&bridge, r, 4001)?;
        let v = theorem2_convolution(&curve, q, 1.0, r)?;
        out.push(Check::below(
            format!("critical bridge eps={eps}: convolution vs closed form"),
            rel(v, closed.eval_r(r)),
            tol,
        ));
    }
    Ok(out)
}

/// Removes `ξ₁²` from the simulated law of `Y = ξ₁² + ξ₂²/4` and compares
/// with the exact law `erf(√(2r))` of `ξ₂²/4`.
///
/// Removal is a half-derivative, so its noise is far above the binomial
/// error of the empirical curve; the standard error is taken from the
/// spread of independent batches instead. The statistic is the mean
/// deviation over the probes `r = 0.05, …, 1`.
fn deconvolution(seed: u64) -> Result<Vec<Check>> {
    const BATCHES: usize = 100;
    const PER_BATCH: usize = 10_000;
    let grid: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
    let probes: Vec<f64> = (1..=20).map(|j| 0.05 * j as f64).collect();
    let exact: Vec<f64> = probes.iter().map(|r| libm::erf((2.0 * r).sqrt())).collect();
    let mut pair = [0.0; 2];
    let mut means = Vec::with_capacity(BATCHES);
    let mut per_probe = vec![Vec::with_capacity(BATCHES); probes.len()];
    for b in 0..BATCHES {
        let y: Vec<f64> = (0..PER_BATCH)
            .map(|i| {
                fill_normals(seed, (1 << 48) + (b * PER_BATCH + i) as u64, &mut pair);
                pair[0] * pair[0] + 0.25 * pair[1] * pair[1]
            })
            .collect();
        let removed = deconvolve_first(&DistributionCurve::from_samples(&y, grid.clone())?, 1.0)?;
        let dev: Vec<f64> = probes
            .iter()
            .zip(&exact)
            .map(|(r, f)| removed.eval(*r) - f)
            .collect();
        means.push(dev.iter().sum::<f64>() / dev.len() as f64);
        for (acc, d) in per_probe.iter_mut().zip(dev) {
            acc.push(d);
        }
    }
    let (m, se) = mean_with_se(&means);
    let worst = per_probe
        .iter()
        .map(|d| {
            let (m, se) = mean_with_se(d);
            (m / se).abs()
        })
        .fold(0.0, f64::max);
    Ok(vec![Check::below(
        "first chi-square term removed: mean deviation over 20 probes in standard errors",
        (m / se).abs(),
        2.0,
    )
    .with_note(format!(
        "{} samples, mean deviation {m:.2e} (SE {se:.2e}), largest single-probe |z| {worst:.2}",
        BATCHES * PER_BATCH
    ))])
}

/// The target is `ln|γ₁ + γ₂ Σ b_k|` over the probe's own truncated series,
/// which is the exact limit `R → ∞` of the truncated probe.
fn contour_limit(_: u64) -> Result<Vec<Check>> {
    let geometric: fn(usize) -> f64 = |k| 0.5f64.powi(k as i32);
    let inverse_square: fn(usize) -> f64 = |k| 1.0 / (k * k) as f64;
    let cases = [
        ("geometric b, gamma1=0", 0.0, geometric),
        ("inverse-square b, gamma1=1", 1.0, inverse_square),
    ];
    let mut out = Vec::new();
    for (name, g1, b) in cases {
        let error = |radius: f64| -> Result<(f64, usize)> {
            let p = JensenProbe::from_fn(g1, 1.0, b, |k| (k * k) as f64, radius, 1 << 16);
            let target = (g1 + p.b.iter().sum::<f64>()).abs().ln();
            Ok(((jensen_limit(&p)? - target).abs(), p.b.len()))
        };
        let (e6, terms) = error(1e6)?;
        let (e7, _) = error(1e7)?;
        out.push(
            Check::below(format!("{name}: error at R=1e6"), e6, 1e-3)
                .with_note(format!("{terms} terms")),
        );
        out.push(Check::below(
            format!("{name}: error at R=1e7 against max(error at R=1e6, 1e-12)"),
            e7,
            e6.max(1e-12),
        ));
    }
    Ok(out)
}

fn duality(seed: u64) -> Result<Vec<Check>> {
    let s = McSettings {
        n_paths: 100_000,
        n_terms: 2000,
        seed,
        n_probes: 32,
    };
    let mut out = Vec::new();
    for (kernel, weight, alpha) in [
        (Kernel::bridge(), "const1", 3.0),
        (Kernel::wiener(), "delta:1", 0.5),
    ] {
        let tr = transform(kernel.clone(), weight, alpha)?;
        let r = corollary1_check(&tr, &s)?;
        out.push(
            Check::below(
                format!(
                    "{} {weight} alpha={:.4} vs {:.4}: covariance max |z|",
                    kernel.process().map_or("custom", Process::tag),
                    r.alpha,
                    r.dual_alpha
                ),
                r.discrepancy.max_z,
                4.0,
            )
            .with_note(format!("{} paths per side, {} terms", r.n_paths, r.n_terms)),
        );
    }
    Ok(out)
}

fn decoupling(seed: u64) -> Result<Vec<Check>> {
    let tr = transform(Kernel::bridge(), "const1", 12.0)?;
    let basis = base_kl(tr.kernel(), 2000)?;
    let batch = sample_paths(&basis, &PathLayout::midpoints(32), 10_000, 2000, seed)?;
    let (residual, corr) = corollary2_residual(&tr, &batch)?;
    Ok(vec![
        Check::below(
            "critical bridge: max |<phi, transformed path>|",
            residual,
            5e-3,
        ),
        Check::below(
            "critical bridge: |corr(transformed X(1/2), <phi, X>)|",
            corr.abs(),
            4.0 / (batch.len() as f64).sqrt(),
        ),
    ])
}

fn norm_moments(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let wiener: Vec<f64> = (1..=2000)
        .map(|k| ((k as f64 - 0.5) * PI).powi(-2))
        .collect();
    for (i, (name, ev, mean)) in [
        ("bridge", bridge_eigenvalues(2000), 1.0 / 6.0),
        ("wiener", wiener, 0.5),
    ]
    .into_iter()
    .enumerate()
    {
        let b = sample_norm2_from(&ev, 100_000, seed, (i as u64) << 32)?;
        let (m, se) = mean_with_se(&b.norms2()?);
        out.push(Check::below(
            format!("{name}: mean squared norm vs trace, in standard errors"),
            (m + b.tail_bound - mean).abs() / se,
            4.0,
        ));
    }
    Ok(out)
}

fn two_routes(seed: u64) -> Result<Vec<Check>> {
    let tr = transform(Kernel::bridge(), "const1", 6.0)?;
    let n = 200;
    let lt = transformed_kl(&tr, n)?;
    let direct = sample_norm2_from(&lt.eigenvalues, 10_000, seed, 1 << 40)?;
    let basis = base_kl(tr.kernel(), n)?;
    let grid = Grid::gauss_legendre(1024);
    let paths = sample_paths(&basis, &PathLayout::grid(&grid), 10_000, n, seed)?;
    let via_paths = transform_paths(&paths, &tr)?;
    let t = ks_two_sample(&direct.norms2()?, &via_paths.norms2()?)?;
    Ok(vec![Check::below(
        "bridge const1 alpha=6: KS statistic, eigenvalues vs transformed paths",
        t.statistic,
        t.critical_1pct,
    )
    .with_note(format!("p = {:.3}", t.p_value))])
}

/// Ratio of transformed to base small-ball probabilities against the
/// asymptotic factor `1/|1 − αq|`, which is a limit as `ε → 0`. The ratio
/// must climb towards the factor as `ε` decreases through the moderate
/// range and be within 15% at its smallest `ε`; the same tolerance at
/// `ε = 0.35` alone is reported as advisory, since the limit has not set in
/// there.
fn small_ball_trend(seed: u64) -> Result<Vec<Check>> {
    let tr = transform(Kernel::bridge(), "const1", 6.0)?;
    let n = 200;
    let samples = 1_000_000;
    let base = sample_norm2_from(&bridge_eigenvalues(n), samples, seed, 2 << 40)?;
    let lt = transformed_kl(&tr, n)?;
    let moved = sample_norm2_from(&lt.eigenvalues, samples, seed, 3 << 40)?;
    let factor = 1.0 / (1.0 - tr.alpha() * tr.q()).abs();
    let mut ratios = Vec::new();
    for eps in [0.35, 0.3, 0.25, 0.2, 0.15] {
        let a = empirical_small_ball(&moved, eps)?;
        let b = empirical_small_ball(&base, eps)?;
        if !(a.moderate && b.moderate) {
            return Err(Error::Resolution(format!("eps = {eps} is not moderate")));
        }
        ratios.push((eps, a.estimate / b.estimate));
    }
    let listing = ratios
        .iter()
        .map(|(e, r)| format!("{e}: {r:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    let rising = ratios.windows(2).all(|w| w[1].1 > w[0].1);
    let (last_eps, last) = *ratios.last().unwrap();
    Ok(vec![
        Check::holds(
            "bridge const1 alpha=6: ratio rises as eps decreases",
            rising,
        )
        .with_note(format!("ratios {listing}; factor {factor:.4}")),
        Check::below(
            format!("bridge const1 alpha=6 eps={last_eps}: ratio vs asymptotic factor"),
            rel(last, factor),
            0.15,
        ),
        Check::below(
            "bridge const1 alpha=6 eps=0.35: ratio vs asymptotic factor",
            rel(ratios[0].1, factor),
            0.15,
        )
        .advisory(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            let s: Suite = name.parse().unwrap();
            assert_eq!(s.to_string(), name);
        }
        assert!("spectrum".parse::<Suite>().is_err());
    }

    #[test]
    fn relations() {
        assert!(Check::below("x", 1.0, 1.0).passed);
        assert!(!Check::below("x", f64::NAN, 1.0).passed);
        assert!(!Check::above("x", 0.5, 1.0).passed);
        assert!(Check::holds("x", true).passed);
        let a = Check::below("x", 2.0, 1.0).advisory();
        let r = Report {
            schema: SCHEMA,
            suite: Suite::All,
            seed: 0,
            passed: true,
            checks: vec![a],
        };
        assert_eq!(r.failures().count(), 0);
    }

    #[test]
    fn every_criterion_but_determinism_is_implemented() {
        assert_eq!(criteria(), (1..=12).collect::<Vec<u8>>());
        assert!(criterion(13, 0).is_none());
    }

    #[test]
    fn algebraic_criteria_pass() {
        for id in [1, 2, 7] {
            let checks = criterion(id, 0).unwrap();
            assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
        }
    }

    #[test]
    fn failed_groups_become_failed_checks() {
        let g = Group {
            suite: Suite::Lemma,
            criterion: None,
            label: "broken",
            run: |_| Err(Error::Config("nope".into())),
        };
        let c = execute(&g, 0);
        assert_eq!(c.len(), 1);
        assert!(!c[0].passed && c[0].note.as_deref().unwrap().contains("nope"));
    }
}

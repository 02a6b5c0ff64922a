use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::equations::{EigenEquationSpec, EquationBranch, Example};
use crate::error::{Error, Result};

/// Scan step: each quarter period is split into this many cells.
const SUBDIVISIONS: usize = 16;
/// Bisection stops at this bracket width.
const BRACKET_WIDTH: f64 = 1e-13;
/// Largest accepted scaled residual.
const RESIDUAL_TOL: f64 = 1e-10;
/// Roots of different branches closer than this are one double root.
const MERGE_TOL: f64 = 1e-9;
/// Start of the scan; no example has an eigenvalue this large.
const SCAN_START: f64 = 1e-4;
/// Residuals below this fraction of their scale carry no reliable sign.
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootBranch {
    First,
    Second,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub x: f64,
    pub branch: RootBranch,
    pub multiplicity: u8,
}

/// Roots of both branches of an example, merged in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSequence {
    pub example: Example,
    pub big_q: f64,
    pub roots: Vec<Root>,
}

impl RootSequence {
    /// Root values of one branch; double roots count for both.
    pub fn branch(&self, branch: RootBranch) -> Vec<f64> {
        self.roots
            .iter()
            .filter(|r| r.branch == branch || r.branch == RootBranch::Both)
            .map(|r| r.x)
            .collect()
    }
}

/// First `count` roots of one branch, in increasing order.
pub fn solve_branch(spec: &EigenEquationSpec, count: usize) -> Result<Vec<f64>> {
    let periods = if spec.example == Example::Ex5 { 2 } else { 1 };
    let limit = ((count * periods) as f64 + 64.0) * PI;
    solve_branch_below(spec, count, limit)
}

/// Like [`solve_branch`], giving up with a search-window error at `limit`.
pub fn solve_branch_below(spec: &EigenEquationSpec, count: usize, limit: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Precondition("count must be at least 1".into()));
    }
    if spec.branch == EquationBranch::First {
        let period = if spec.example == Example::Ex5 {
            2.0 * PI
        } else {
            PI
        };
        let roots: Vec<f64> = (1..=count)
            .map(|k| k as f64 * period)
            .take_while(|&x| x <= limit)
            .collect();
        if roots.len() < count {
            return Err(Error::SearchWindow {
                found: roots.len(),
                wanted: count,
                limit,
            });
        }
        return Ok(roots);
    }
    if spec.example == Example::Ex5 && spec.big_q == 0.0 {
        // Q = 0: the determinant degenerates to sin ω; the second branch
        // keeps the odd multiples of π.
        let roots: Vec<f64> = (1..=count)
            .map(|k| (2 * k - 1) as f64 * PI)
            .take_while(|&x| x <= limit)
            .collect();
        if roots.len() < count {
            return Err(Error::SearchWindow {
                found: roots.len(),
                wanted: count,
                limit,
            });
        }
        return Ok(roots);
    }

    let f = |x: f64| spec.scaled(x, None);
    // Ex5 is offset so that no scan point sits on a removed root 2πk.
    let offset = if spec.example == Example::Ex5 {
        1e-3
    } else {
        0.0
    };
    let step = 0.5 * PI / SUBDIVISIONS as f64;
    let mut roots = Vec::with_capacity(count);
    // (a, fa) is the last scan point whose sign can be trusted
    let mut a = SCAN_START;
    let mut fa: f64 = 0.0;
    let mut j = 1usize;
    while roots.len() < count {
        let b = j as f64 * step + offset;
        j += 1;
        if b > limit {
            return Err(Error::SearchWindow {
                found: roots.len(),
                wanted: count,
                limit,
            });
        }
        let (fb, scale) = f(b);
        if fb.abs() <= NOISE_FLOOR * scale {
            continue;
        }
        if fa != 0.0 && fa.signum() != fb.signum() {
            let x = refine(&f, a, b, fa);
            let (r, scale) = f(x);
            if r.abs() <= RESIDUAL_TOL * scale {
                roots.push(x);
            }
        }
        a = b;
        fa = fb;
    }
    Ok(roots)
}

/// Bisection to [`BRACKET_WIDTH`], then one secant step kept only if it
/// stays inside the bracket and improves the residual.
fn refine(f: &impl Fn(f64) -> (f64, f64), mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    let mut fb = f(b).0;
    while b - a > BRACKET_WIDTH {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m).0;
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    let mid = 0.5 * (a + b);
    if fb != fa {
        let s = b - fb * (b - a) / (fb - fa);
        if s > a && s < b && f(s).0.abs() < f(mid).0.abs() {
            return s;
        }
    }
    mid
}

/// First `count` roots of each branch, merged and sorted.
pub fn solve_roots(example: Example, big_q: f64, count: usize) -> Result<RootSequence> {
    let second = solve_branch(
        &EigenEquationSpec::new(example, big_q, EquationBranch::Second)?,
        count,
    )?;
    let first = if example.has_first_branch() {
        solve_branch(
            &EigenEquationSpec::new(example, big_q, EquationBranch::First)?,
            count,
        )?
    } else {
        Vec::new()
    };
    let mut tagged: Vec<(f64, RootBranch)> = first
        .into_iter()
        .map(|x| (x, RootBranch::First))
        .chain(second.into_iter().map(|x| (x, RootBranch::Second)))
        .collect();
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut roots: Vec<Root> = Vec::with_capacity(tagged.len());
    for (x, branch) in tagged {
        if let Some(last) = roots.last_mut() {
            if last.branch != branch && last.multiplicity == 1 && (x - last.x).abs() < MERGE_TOL {
                // report the exact lattice value of the first branch
                if branch == RootBranch::First {
                    last.x = x;
                }
                last.branch = RootBranch::Both;
                last.multiplicity = 2;
                continue;
            }
        }
        roots.push(Root {
            x,
            branch,
            multiplicity: 1,
        });
    }
    Ok(RootSequence {
        example,
        big_q,
        roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn second(e: Example, q: f64) -> EigenEquationSpec {
        EigenEquationSpec::new(e, q, EquationBranch::Second).unwrap()
    }

    /// Bisection for `tan x = x` on `(π, 3π/2)` written as `sin x − x cos x`.
    fn tan_fixed_point() -> f64 {
        let g = |x: f64| x.sin() - x * x.cos();
        let (mut a, mut b) = (PI, 1.5 * PI - 1e-12);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m).signum() == g(a).signum() {
                a = m
            } else {
                b = m
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn wiener_constant_weight_at_zero_q() {
        let r = solve_branch(&second(Example::Ex1, 0.0), 10).unwrap();
        for (k, x) in r.iter().enumerate() {
            assert!((x - (k as f64 + 0.5) * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn tan_equation_roots() {
        let want = tan_fixed_point();
        assert!((want - 4.493409457909064).abs() < 1e-12);
        let r = solve_branch(&second(Example::Ex1, -3.0), 3).unwrap();
        assert!((r[0] - want).abs() < 1e-9, "{}", r[0]);
        let r = solve_branch(&second(Example::Ex2, -12.0), 3).unwrap();
        assert!((r[0] - want).abs() < 1e-9, "{}", r[0]);
    }

    #[test]
    fn roots_have_small_residuals() {
        for e in [
            Example::Ex1,
            Example::Ex2,
            Example::Ex3,
            Example::Ex4,
            Example::Ex5,
        ] {
            for q in [-20.0, -3.0, 0.5, 40.0] {
                let sp = second(e, q);
                let r = solve_branch(&sp, 8).unwrap();
                assert!(r.windows(2).all(|w| w[1] > w[0]));
                for x in r {
                    let (v, scale) = sp.scaled(x, None);
                    assert!(v.abs() < 1e-10 * scale, "{e:?} Q={q} x={x}");
                }
            }
        }
    }

    #[test]
    fn double_roots_are_merged() {
        for k in 1..=3 {
            let kpi = k as f64 * PI;
            let qk = -12.0 / (1.0 + 3.0 / (kpi * kpi));
            let seq = solve_roots(Example::Ex2, qk, 5).unwrap();
            let doubles: Vec<&Root> = seq.roots.iter().filter(|r| r.multiplicity == 2).collect();
            assert_eq!(doubles.len(), 1, "k={k}");
            assert!((doubles[0].x - kpi).abs() < 1e-8);
            assert_eq!(seq.roots.len(), 9);
        }
        let seq = solve_roots(Example::Ex2, 0.0, 4).unwrap();
        assert!(seq.roots.iter().all(|r| r.multiplicity == 1));
        for (k, r) in seq.roots.iter().enumerate() {
            assert!((r.x - (k as f64 + 1.0) * 0.5 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_quantile_example_at_zero_q_is_the_bridge() {
        let seq = solve_roots(Example::Ex5, 0.0, 5).unwrap();
        for (k, r) in seq.roots.iter().enumerate() {
            assert!((r.x - (k + 1) as f64 * PI).abs() < 1e-12);
        }
        // small Q perturbs only the odd multiples
        let r = solve_branch(&second(Example::Ex5, -0.01), 3).unwrap();
        for (k, x) in r.iter().enumerate() {
            let base = (2 * k + 1) as f64 * PI;
            assert!((x - base).abs() < 0.05 && (x - base).abs() > 1e-8);
        }
    }

    #[test]
    fn window_exhaustion_is_reported() {
        let e = solve_branch_below(&second(Example::Ex2, 1.0), 10, 5.0).unwrap_err();
        assert!(matches!(e, Error::SearchWindow { wanted: 10, .. }));
        let sp = EigenEquationSpec::new(Example::Ex2, 1.0, EquationBranch::First).unwrap();
        assert!(solve_branch_below(&sp, 10, 5.0).is_err());
    }
}

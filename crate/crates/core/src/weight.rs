//! Generalized weights φ: densities, point masses δ(·−t₀), dipoles
//! δ′(·−t₀), and the normal-quantile weight 1/ϕ(Φ⁻¹(t)).
//!
//! Weight specs used on the command line and in config files:
//!
//! ```text
//! const1            φ ≡ 1
//! const:<c>         φ ≡ c
//! poly:<expr>       polynomial in t with + - * / ^ and rational constants
//! delta:<t0>        point mass at t0
//! ddelta:<t0>       dipole at t0
//! normquant         1/ϕ(Φ⁻¹(t))
//! csv:<path>        tabulated density, linear interpolation
//! ```
//!
//! Several specs joined by `&` are summed, e.g. `delta:0&delta:1`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::Rule;

/// Dense polynomial, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn add(&self, other: &Self, sign: f64) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(0.0)
                        + sign * other.coeffs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `Some(c)` if this polynomial equals `c · other`.
    pub fn multiple_of(&self, other: &Self) -> Option<f64> {
        let (i, lead) = other.coeffs.iter().enumerate().find(|(_, c)| **c != 0.0)?;
        let c = self.coeffs.get(i).copied().unwrap_or(0.0) / lead;
        let n = self.coeffs.len().max(other.coeffs.len());
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        (0..n)
            .all(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or(0.0);
                let b = other.coeffs.get(k).copied().unwrap_or(0.0);
                (a - c * b).abs() <= 1e-12 * scale
            })
            .then_some(c)
    }

    /// `∫₀¹ p(t)² dt`.
    pub fn l2_norm_squared(&self) -> f64 {
        let sq = self.mul(self);
        sq.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c / (i + 1) as f64)
            .sum()
    }

    /// Parse the restricted expression grammar over `t`.
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = PolyParser {
            src: src.as_bytes(),
            pos: 0,
        };
        let poly = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(poly)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && !(self.coeffs.len() == 1) {
                continue;
            }
            let mag = c.abs();
            if first {
                if c < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c < 0.0 { "-" } else { "+" })?;
            }
            first = false;
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if mag != 1.0 {
                        write!(f, "{mag}*")?;
                    }
                    f.write_str("t")?;
                    if i > 1 {
                        write!(f, "^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

struct PolyParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl PolyParser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = acc.add(&rhs, if op == b'+' { 1.0 } else { -1.0 });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.power()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.power()?;
            if op == b'*' {
                acc = acc.mul(&rhs);
            } else {
                if rhs.degree() != 0 || rhs.coeffs[0] == 0.0 {
                    return Err(self.error("division only by nonzero constants"));
                }
                acc = acc.mul(&Polynomial::constant(1.0 / rhs.coeffs[0]));
            }
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let exp: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .filter(|&e| e <= 64)
                .ok_or_else(|| self.error("exponent must be an integer in 0..=64"))?;
            let mut out = Polynomial::constant(1.0);
            for _ in 0..exp {
                out = out.mul(&base);
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.mul(&Polynomial::constant(-1.0)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b't') => {
                self.pos += 1;
                Ok(Polynomial::new(vec![0.0, 1.0]))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let v: f64 = s.parse().map_err(|_| self.error("bad number"))?;
                Ok(Polynomial::constant(v))
            }
            _ => Err(self.error("expected number, `t`, or `(`")),
        }
    }
}

/// A locally summable density on `[0, 1]`.
#[derive(Clone)]
pub enum WeightFn {
    Polynomial(Polynomial),
    /// Piecewise-linear interpolation of `(t, value)` pairs, ascending in `t`.
    Table {
        nodes: Vec<f64>,
        values: Vec<f64>,
    },
    /// Any other function, with a label used for display.
    Custom {
        label: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFn::Polynomial(p) => write!(f, "Polynomial({p})"),
            WeightFn::Table { nodes, .. } => write!(f, "Table({} nodes)", nodes.len()),
            WeightFn::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl WeightFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            WeightFn::Polynomial(p) => p.eval(t),
            WeightFn::Table { nodes, values } => {
                let i = nodes.partition_point(|&x| x <= t);
                if i == 0 {
                    values[0]
                } else if i >= nodes.len() {
                    values[nodes.len() - 1]
                } else {
                    let a = (t - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
                    values[i - 1] + a * (values[i] - values[i - 1])
                }
            }
            WeightFn::Custom { f, .. } => f(t),
        }
    }

    /// Interior points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            WeightFn::Table { nodes, .. } => nodes
                .iter()
                .copied()
                .filter(|&x| x > 0.0 && x < 1.0)
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        match self {
            WeightFn::Polynomial(p) => p.l2_norm_squared().sqrt(),
            _ => {
                let rule = Rule::new(crate::quadrature::PIECE_ORDER);
                let mut breaks = vec![0.0];
                breaks.extend(self.breakpoints());
                breaks.push(1.0);
                let sq: f64 = breaks
                    .windows(2)
                    .map(|w| rule.integrate_composite(w[0], w[1], 16, |t| self.eval(t).powi(2)))
                    .sum();
                sq.sqrt()
            }
        }
    }

    /// Load a tabulated density: lines of `t,value`, or bare values on a
    /// uniform grid including both endpoints.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut bare = Vec::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad weight value `{s}`")))
            };
            match fields.as_slice() {
                [v] => bare.push(parse(v)?),
                [t, v] => pairs.push((parse(t)?, parse(v)?)),
                _ => return Err(Error::Config(format!("bad weight line `{line}`"))),
            }
        }
        if !pairs.is_empty() && !bare.is_empty() {
            return Err(Error::Config(
                "mixed one- and two-column weight rows".into(),
            ));
        }
        if pairs.is_empty() {
            let n = bare.len();
            if n < 2 {
                return Err(Error::Config(
                    "weight table needs at least two values".into(),
                ));
            }
            pairs = bare
                .into_iter()
                .enumerate()
                .map(|(i, v)| (i as f64 / (n - 1) as f64, v))
                .collect();
        }
        if pairs.len() < 2 || pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "weight table nodes must be strictly increasing".into(),
            ));
        }
        if pairs.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::Config(
                "weight table contains non-finite values".into(),
            ));
        }
        let (nodes, values) = pairs.into_iter().unzip();
        Ok(WeightFn::Table { nodes, values })
    }
}

/// One additive component of a weight.
#[derive(Debug, Clone)]
pub enum WeightPart {
    Density(WeightFn),
    PointMass { at: f64, coef: f64 },
    Dipole { at: f64, coef: f64 },
    NormalQuantile { coef: f64 },
}

/// A generalized weight φ, a finite sum of [`WeightPart`]s.
#[derive(Debug, Clone)]
pub struct Weight {
    parts: Vec<WeightPart>,
    spec: Option<String>,
}

impl Weight {
    pub fn from_parts(parts: Vec<WeightPart>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Config("weight has no components".into()));
        }
        for part in &parts {
            match part {
                WeightPart::PointMass { at, .. } | WeightPart::Dipole { at, .. }
                    if !(0.0..=1.0).contains(at) =>
                {
                    return Err(Error::Config(format!("atom location {at} outside [0, 1]")));
                }
                WeightPart::Density(WeightFn::Table { values, .. })
                    if values.iter().any(|v| !v.is_finite()) =>
                {
                    return Err(Error::Config("non-finite density values".into()));
                }
                _ => {}
            }
        }
        Ok(Weight { parts, spec: None })
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(Polynomial::constant(c))
    }

    pub fn polynomial(p: Polynomial) -> Self {
        Weight {
            parts: vec![WeightPart::Density(WeightFn::Polynomial(p))],
            spec: None,
        }
    }

    pub fn density(f: WeightFn) -> Self {
        Weight {
            parts: vec![WeightPart::Density(f)],
            spec: None,
        }
    }

    pub fn function(label: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::density(WeightFn::Custom {
            label: label.to_string(),
            f: Arc::new(f),
        })
    }

    pub fn point_mass(at: f64) -> Self {
        Weight {
            parts: vec![WeightPart::PointMass { at, coef: 1.0 }],
            spec: None,
        }
    }

    pub fn dipole(at: f64) -> Self {
        Weight {
            parts: vec![WeightPart::Dipole { at, coef: 1.0 }],
            spec: None,
        }
    }

    pub fn normal_quantile() -> Self {
        Weight {
            parts: vec![WeightPart::NormalQuantile { coef: 1.0 }],
            spec: None,
        }
    }

    pub fn plus(mut self, other: Weight) -> Self {
        self.parts.extend(other.parts);
        self.spec = match (self.spec, other.spec) {
            (Some(a), Some(b)) => Some(format!("{a}&{b}")),
            _ => None,
        };
        self
    }

    pub fn parts(&self) -> &[WeightPart] {
        &self.parts
    }

    /// Parse a weight spec (see module docs).
    pub fn parse(spec: &str) -> Result<Self> {
        let mut out: Option<Weight> = None;
        for piece in spec.split('&').map(str::trim) {
            let w = Self::parse_single(piece)?;
            out = Some(match out {
                None => w,
                Some(acc) => acc.plus(w),
            });
        }
        out.ok_or_else(|| Error::Config("empty weight spec".into()))
    }

    fn parse_single(spec: &str) -> Result<Self> {
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{s}` in weight spec")))
        };
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (spec, None),
        };
        let mut w = match (head, arg) {
            ("const1", None) => Weight::constant(1.0),
            ("const", Some(c)) => Weight::constant(num(c)?),
            ("poly", Some(e)) => Weight::polynomial(Polynomial::parse(e)?),
            ("delta", Some(t)) => Weight::from_parts(vec![WeightPart::PointMass {
                at: num(t)?,
                coef: 1.0,
            }])?,
            ("ddelta", Some(t)) => Weight::from_parts(vec![WeightPart::Dipole {
                at: num(t)?,
                coef: 1.0,
            }])?,
            ("normquant", None) => Weight::normal_quantile(),
            ("csv", Some(path)) => Weight::density(WeightFn::from_csv_path(path)?),
            _ => return Err(Error::Config(format!("unrecognized weight spec `{spec}`"))),
        };
        w.spec = Some(match &w.parts[0] {
            WeightPart::Density(WeightFn::Polynomial(p)) => canonical_poly(p),
            WeightPart::PointMass { at, .. } => format!("delta:{at}"),
            WeightPart::Dipole { at, .. } => format!("ddelta:{at}"),
            WeightPart::NormalQuantile { .. } => "normquant".to_string(),
            _ => spec.to_string(),
        });
        Ok(w)
    }

    /// Canonical spec string, when the weight came from one.
    pub fn spec(&self) -> Option<&str> {
        self.spec.as_deref()
    }

    /// True when the weight is an `L₂(0,1)` function.
    pub fn is_square_integrable(&self) -> bool {
        self.parts
            .iter()
            .all(|p| matches!(p, WeightPart::Density(_)))
    }

    /// `Some(f)` when the weight is a single density.
    pub fn as_density(&self) -> Option<&WeightFn> {
        match self.parts.as_slice() {
            [WeightPart::Density(f)] => Some(f),
            _ => None,
        }
    }

    /// `Some(p)` when the weight is a single polynomial density.
    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match self.as_density() {
            Some(WeightFn::Polynomial(p)) => Some(p),
            _ => None,
        }
    }

    /// `‖φ‖₂`, or an error for weights outside `L₂`.
    pub fn l2_norm(&self) -> Result<f64> {
        if !self.is_square_integrable() {
            return Err(Error::Inapplicable(
                "weight is not square integrable".into(),
            ));
        }
        match self.parts.as_slice() {
            [WeightPart::Density(f)] => Ok(f.l2_norm()),
            _ => {
                let fs: Vec<&WeightFn> = self
                    .parts
                    .iter()
                    .filter_map(|p| match p {
                        WeightPart::Density(f) => Some(f),
                        _ => None,
                    })
                    .collect();
                let combined = WeightFn::Custom {
                    label: "sum".into(),
                    f: {
                        let fs: Vec<WeightFn> = fs.iter().map(|f| (*f).clone()).collect();
                        Arc::new(move |t| fs.iter().map(|f| f.eval(t)).sum())
                    },
                };
                Ok(combined.l2_norm())
            }
        }
    }

    /// Density value at `t` (sum of density parts; atoms contribute nothing).
    pub fn density_at(&self, t: f64) -> f64 {
        self.parts
            .iter()
            .map(|p| match p {
                WeightPart::Density(f) => f.eval(t),
                WeightPart::NormalQuantile { coef } => {
                    coef / crate::quadrature::norm_pdf(crate::quadrature::norm_inv_cdf(t))
                }
                _ => 0.0,
            })
            .sum()
    }
}

fn canonical_poly(p: &Polynomial) -> String {
    if p.coeffs() == [1.0] {
        "const1".to_string()
    } else if p.degree() == 0 {
        format!("const:{}", p.coeffs()[0])
    } else {
        format!("poly:{p}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_polynomials() {
        let p = Polynomial::parse("t*(1-t)").unwrap();
        assert_eq!(p.coeffs(), &[0.0, 1.0, -1.0]);
        let p = Polynomial::parse(" 1/3 - 2*t^3 + (t+1)^2 ").unwrap();
        assert!((p.eval(0.5) - (1.0 / 3.0 - 0.25 + 2.25)).abs() < 1e-15);
        assert_eq!(Polynomial::parse("-t").unwrap().coeffs(), &[0.0, -1.0]);
        assert!(Polynomial::parse("t/t").is_err());
        assert!(Polynomial::parse("t^").is_err());
        assert!(Polynomial::parse("2*x").is_err());
        assert!(Polynomial::parse("(t").is_err());
    }

    #[test]
    fn polynomial_l2_norm() {
        let p = Polynomial::parse("t*(1-t)").unwrap();
        assert!((p.l2_norm_squared() - 1.0 / 30.0).abs() < 1e-16);
    }

    #[test]
    fn weight_specs_canonicalize() {
        for (input, canon) in [
            ("const1", "const1"),
            ("poly:1", "const1"),
            ("const:2.5", "const:2.5"),
            ("poly:t*(1-t)", "poly:t-t^2"),
            ("poly: 3*t^2 - t/2", "poly:-0.5*t+3*t^2"),
            ("delta:1.0", "delta:1"),
            ("ddelta:1", "ddelta:1"),
            ("normquant", "normquant"),
            ("delta:0&delta:1", "delta:0&delta:1"),
        ] {
            let w = Weight::parse(input).unwrap();
            assert_eq!(w.spec().unwrap(), canon, "{input}");
            let again = Weight::parse(canon).unwrap();
            assert_eq!(again.spec().unwrap(), canon);
        }
        assert!(Weight::parse("delta:1.5").is_err());
        assert!(Weight::parse("gauss").is_err());
        assert!(Weight::parse("").is_err());
    }

    #[test]
    fn square_integrability_flags() {
        assert!(Weight::constant(1.0).is_square_integrable());
        assert!(!Weight::normal_quantile().is_square_integrable());
        assert!(!Weight::point_mass(1.0).is_square_integrable());
        assert!(Weight::normal_quantile().l2_norm().is_err());
    }

    #[test]
    fn table_weight_interpolates() {
        let f = WeightFn::parse_csv("0,0\n0.5,1\n1,0\n").unwrap();
        assert!((f.eval(0.25) - 0.5).abs() < 1e-15);
        assert_eq!(f.breakpoints(), vec![0.5]);
        assert!((f.l2_norm() - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let g = WeightFn::parse_csv("1\n1\n1\n").unwrap();
        assert_eq!(g.eval(0.3), 1.0);
        assert!(WeightFn::parse_csv("0,1\n0,2\n").is_err());
    }
}

//! Run configuration: `key = value` files merged with command-line flags.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use klx_core::validate::Suite;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Analytic,
    Nystrom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Auto,
    Theorem1,
    Theorem2,
    Theorem3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    /// Sample `Σ λ̃_k ξ_k²` from the transformed eigenvalues.
    Eigen,
    /// Simulate base paths, transform them and integrate on a grid.
    Paths,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Everything a subcommand may read. Unset fields fall back to per-command
/// defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub process: Option<String>,
    pub weight: Option<String>,
    pub alpha: Option<f64>,
    pub count: Option<usize>,
    pub paths: Option<usize>,
    pub terms: Option<usize>,
    pub eps: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub method: Option<Method>,
    pub form: Option<Form>,
    pub route: Option<Route>,
    pub suite: Option<Suite>,
    pub format: Option<Format>,
    pub out: Option<String>,
}

pub const MAX_COUNT: usize = 10_000;
pub const MAX_PATHS: usize = 100_000_000;
pub const MAX_TERMS: usize = 100_000;
pub const GRID_RANGE: (usize, usize) = (8, 8192);

pub const KEYS: [&str; 15] = [
    "process", "weight", "alpha", "count", "paths", "terms", "eps", "seed", "grid", "method",
    "form", "route", "suite", "format", "out",
];

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::Config(format!("`{key} = {value}`: {why}"))
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, "not a number"))
}

fn ranged(key: &str, value: &str, lo: usize, hi: usize) -> Result<usize, CliError> {
    let v: usize = number(key, value)?;
    if v < lo || v > hi {
        return Err(bad(key, value, &format!("must lie in {lo}..={hi}")));
    }
    Ok(v)
}

fn choice<T: ValueEnum>(key: &str, value: &str) -> Result<T, CliError> {
    T::from_str(value, false).map_err(|_| {
        let names: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        bad(key, value, &format!("expected one of {}", names.join(", ")))
    })
}

pub(crate) fn name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

pub fn parse_alpha(value: &str) -> Result<f64, CliError> {
    let a: f64 = number("alpha", value)?;
    if !a.is_finite() {
        return Err(bad("alpha", value, "must be finite"));
    }
    Ok(a)
}

pub fn parse_eps(value: &str) -> Result<Vec<f64>, CliError> {
    let list = value
        .split(',')
        .map(|s| {
            let e: f64 = number("eps", s.trim())?;
            if !(e > 0.0 && e.is_finite()) {
                return Err(bad("eps", value, "values must be positive"));
            }
            Ok(e)
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    Ok(list)
}

impl RunConfig {
    /// Parse a configuration file body. Blank lines and lines starting with
    /// `#` are ignored; unknown and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", no + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(CliError::Config(format!(
                    "line {}: `{key}` repeated",
                    no + 1
                )));
            }
            seen.push(key);
            cfg.set(key, value)
                .map_err(|e| CliError::Config(format!("line {}: {}", no + 1, e.message())))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if value.is_empty() {
            return Err(bad(key, value, "empty value"));
        }
        match key {
            "process" => self.process = Some(value.to_string()),
            "weight" => self.weight = Some(value.to_string()),
            "alpha" => self.alpha = Some(parse_alpha(value)?),
            "count" => self.count = Some(ranged(key, value, 1, MAX_COUNT)?),
            "paths" => self.paths = Some(ranged(key, value, 2, MAX_PATHS)?),
            "terms" => self.terms = Some(ranged(key, value, 1, MAX_TERMS)?),
            "eps" => self.eps = Some(parse_eps(value)?),
            "seed" => self.seed = Some(number(key, value)?),
            "grid" => self.grid = Some(ranged(key, value, GRID_RANGE.0, GRID_RANGE.1)?),
            "method" => self.method = Some(choice(key, value)?),
            "form" => self.form = Some(choice(key, value)?),
            "route" => self.route = Some(choice(key, value)?),
            "suite" => {
                self.suite = Some(
                    value
                        .parse()
                        .map_err(|e: klx_core::Error| bad(key, value, &e.to_string()))?,
                )
            }
            "format" => self.format = Some(choice(key, value)?),
            "out" => self.out = Some(value.to_string()),
            _ => {
                return Err(CliError::Config(format!(
                    "unknown key `{key}`; known keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Fields set in `other` replace those of `self`.
    pub fn overlay(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(if other.$f.is_some() { self.$f = other.$f; })*};
        }
        take!(
            process, weight, alpha, count, paths, terms, eps, seed, grid, method, form, route,
            suite, format, out
        );
        self
    }

    /// Canonical file form: set keys only, in [`KEYS`] order.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {v}");
            }
        };
        put("process", self.process.clone());
        put("weight", self.weight.clone());
        put("alpha", self.alpha.map(|a| a.to_string()));
        put("count", self.count.map(|v| v.to_string()));
        put("paths", self.paths.map(|v| v.to_string()));
        put("terms", self.terms.map(|v| v.to_string()));
        put(
            "eps",
            self.eps
                .as_ref()
                .map(|e| e.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")),
        );
        put("seed", self.seed.map(|v| v.to_string()));
        put("grid", self.grid.map(|v| v.to_string()));
        put("method", self.method.as_ref().map(name));
        put("form", self.form.as_ref().map(name));
        put("route", self.route.as_ref().map(name));
        put("suite", self.suite.map(|v| v.to_string()));
        put("format", self.format.as_ref().map(name));
        put("out", self.out.clone());
        s
    }
}

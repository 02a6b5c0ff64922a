//! The `klx` command line: spectra, small-ball asymptotics, simulation,
//! validation suites and plot tables.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{name, parse_alpha, Form, Format, Method, Route, RunConfig};

/// Version of every JSON document written by `klx`.
pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad input: exit code 2.
    Config(String),
    /// A numerical routine failed: exit code 3.
    Numeric(String),
    /// A validation check failed: exit code 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Failed(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl From<klx_core::Error> for CliError {
    fn from(e: klx_core::Error) -> Self {
        use klx_core::Error as E;
        let user = e.is_config()
            || matches!(
                e,
                E::WrongBranch(_) | E::Inapplicable(_) | E::Precondition(_)
            );
        if user {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "klx",
    version,
    about = "Karhunen-Loeve spectra and L2 small-ball asymptotics of rank-one transformed Gaussian processes"
)]
pub struct Cli {
    /// File of `key = value` lines; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalue table of a transformed covariance.
    Spectrum(SpectrumArgs),
    /// Small-ball asymptotic constants and values.
    Smallball(SmallballArgs),
    /// Monte Carlo small-ball estimates.
    Simulate(SimulateArgs),
    /// Run a validation suite and write its report.
    Validate(ValidateArgs),
    /// Plot data: predicted and simulated small-ball probabilities over eps.
    Table(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Catalog tag (wiener, bridge, iwiener, icwiener, slepian) or csv:<path>.
    #[arg(long)]
    pub process: Option<String>,
    /// Weight spec, e.g. const1, poly:t*(1-t), delta:1, ddelta:1, normquant.
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_alpha_arg)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// `csv` or `json` selects the format; `-` is standard output; anything
    /// else is a file path.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of eigenvalues.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Nystrom grid size.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SmallballArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated radii.
    #[arg(long, value_name = "LIST")]
    pub eps: Option<String>,
    #[arg(long, value_enum)]
    pub form: Option<Form>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Truncation of the expansion.
    #[arg(long)]
    pub terms: Option<usize>,
    /// Comma-separated radii.
    #[arg(long, value_name = "LIST")]
    pub eps: Option<String>,
    /// Master seed; defaults to KLX_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub route: Option<Route>,
    /// Quadrature grid size for the paths route.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// lemma, spectra, smallball, montecarlo or all.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_alpha_arg(s: &str) -> Result<f64, String> {
    parse_alpha(s).map_err(|e| e.to_string())
}

/// Flag values as a configuration layer; ranges are checked by routing
/// each value through [`RunConfig::set`].
fn flags(command: &Command) -> Result<RunConfig, CliError> {
    let num = |v: Option<usize>| v.map(|v| v.to_string());
    let model = |m: &ModelArgs| {
        vec![
            ("process", m.process.clone()),
            ("weight", m.weight.clone()),
            ("alpha", m.alpha.map(|a| a.to_string())),
        ]
    };
    let output = |o: &OutputArgs| {
        vec![
            ("out", o.out.clone()),
            ("format", o.format.as_ref().map(name)),
        ]
    };
    let pairs = match command {
        Command::Spectrum(a) => [
            model(&a.model),
            vec![
                ("count", num(a.count)),
                ("method", a.method.as_ref().map(name)),
                ("grid", num(a.grid)),
            ],
            output(&a.output),
        ]
        .concat(),
        Command::Smallball(a) => [
            model(&a.model),
            vec![("eps", a.eps.clone()), ("form", a.form.as_ref().map(name))],
            output(&a.output),
        ]
        .concat(),
        Command::Simulate(a) | Command::Table(a) => [
            model(&a.model),
            vec![
                ("paths", num(a.paths)),
                ("terms", num(a.terms)),
                ("eps", a.eps.clone()),
                ("seed", a.seed.map(|v| v.to_string())),
                ("route", a.route.as_ref().map(name)),
                ("grid", num(a.grid)),
            ],
            output(&a.output),
        ]
        .concat(),
        Command::Validate(a) => [
            vec![
                ("suite", a.suite.clone()),
                ("seed", a.seed.map(|v| v.to_string())),
            ],
            output(&a.output),
        ]
        .concat(),
    };
    let mut cfg = RunConfig::default();
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    Ok(cfg)
}

/// Resolve the configuration of a parsed command line: config file, then
/// flags on top.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(file.overlay(flags(&cli.command)?))
}

/// Run `klx` with `args` (program name first) and return the exit code.
/// Output goes where the configuration says; errors go to standard error.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = resolve(&cli).and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("klx: {e}");
            e.exit_code()
        }
    }
}

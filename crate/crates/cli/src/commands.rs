//! Subcommand implementations. Each one reads a resolved [`RunConfig`] and
//! writes a CSV or JSON document.

use std::fmt::Write as _;
use std::path::Path;

use klx_core::kernel::KernelTable;
use klx_core::montecarlo::{
    base_kl, empirical_small_ball, mean_with_se, sample_norm2, sample_paths, transform_paths,
    PathLayout, SampleBatch,
};
use klx_core::smallball::{
    eval_asymptotic, predict, theorem1_scale, theorem2_convolution, theorem3_scale, Branch,
    DistributionCurve,
};
use klx_core::spectral::{nystrom_spectrum, transformed_kl};
use klx_core::validate::{self, Suite};
use klx_core::{AsymptoticDescriptor, Grid, Kernel, Process, Transform, Weight};
use serde_json::{json, Value};

use crate::config::{name, Form, Format, Method, Route, RunConfig};
use crate::{CliError, Command, SCHEMA};

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_SEED: u64 = 0;
/// Nodes of the base curve fed to the convolution form.
const CURVE_NODES: usize = 4001;
const TABLE_EPS: [f64; 8] = [0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5];

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Spectrum(_) => spectrum(cfg),
        Command::Smallball(_) => smallball(cfg),
        Command::Simulate(_) => simulate(cfg),
        Command::Validate(_) => run_validate(cfg),
        Command::Table(_) => table(cfg),
    }
}

/// Where a document goes and in which format.
struct Sink {
    format: Format,
    path: Option<String>,
}

impl Sink {
    fn new(cfg: &RunConfig, default: Format) -> Result<Self> {
        let (implied, path) = match cfg.out.as_deref() {
            None | Some("-") => (None, None),
            Some("csv") => (Some(Format::Csv), None),
            Some("json") => (Some(Format::Json), None),
            Some(p) => {
                let ext = Path::new(p).extension().and_then(|e| e.to_str());
                let f = match ext {
                    Some("csv") => Some(Format::Csv),
                    Some("json") => Some(Format::Json),
                    _ => None,
                };
                (f, Some(p.to_string()))
            }
        };
        let format = match (cfg.format, implied, &path) {
            (Some(f), Some(g), None) if f != g => {
                return Err(CliError::Config(format!(
                    "--out {} conflicts with --format {}",
                    name(&g),
                    name(&f)
                )))
            }
            (Some(f), _, _) => f,
            (None, Some(g), _) => g,
            (None, None, _) => default,
        };
        Ok(Sink { format, path })
    }

    fn write(&self, text: &str) -> Result<()> {
        match &self.path {
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::Config(format!("cannot write output: {e}")))
            }
            Some(p) => std::fs::write(p, text)
                .map_err(|e| CliError::Config(format!("cannot write {p}: {e}"))),
        }
    }

    fn json(&self, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)
            .map_err(|e| CliError::Numeric(format!("cannot serialize output: {e}")))?;
        s.push('\n');
        self.write(&s)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `KLX_SEED` fills in when neither flag nor config file sets a seed.
fn seed(cfg: &RunConfig) -> Result<u64> {
    if let Some(s) = cfg.seed {
        return Ok(s);
    }
    match std::env::var("KLX_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("KLX_SEED = `{v}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn process_spec(cfg: &RunConfig) -> Result<&str> {
    cfg.process
        .as_deref()
        .ok_or_else(|| CliError::Config("--process is required".into()))
}

fn kernel(cfg: &RunConfig) -> Result<Kernel> {
    let spec = process_spec(cfg)?;
    if let Some(path) = spec.strip_prefix("csv:") {
        return Ok(Kernel::custom(KernelTable::from_csv_path(path)?));
    }
    Ok(Kernel::catalog(spec.parse::<Process>()?))
}

fn weight_spec(cfg: &RunConfig) -> &str {
    cfg.weight.as_deref().unwrap_or("const1")
}

fn transform(cfg: &RunConfig) -> Result<Transform> {
    let k = kernel(cfg)?;
    let w = Weight::parse(weight_spec(cfg))?;
    Ok(Transform::new(&k, &w, cfg.alpha.unwrap_or(0.0))?)
}

fn header(cfg: &RunConfig, tr: &Transform) -> Result<serde_json::Map<String, Value>> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("process".into(), json!(process_spec(cfg)?));
    m.insert("weight".into(), json!(weight_spec(cfg)));
    m.insert("alpha".into(), json!(tr.alpha()));
    m.insert("q".into(), json!(tr.q()));
    m.insert("big_q".into(), json!(tr.big_q()));
    Ok(m)
}

fn spectrum(cfg: &RunConfig) -> Result<()> {
    let tr = transform(cfg)?;
    let count = cfg.count.unwrap_or(10);
    let method = cfg.method.unwrap_or(Method::Analytic);
    let sp = match method {
        Method::Analytic => transformed_kl(&tr, count)?,
        Method::Nystrom => {
            let grid = cfg.grid.unwrap_or(1000).max(4 * count);
            nystrom_spectrum(&tr.transformed_kernel(), grid, count)?
        }
    };
    let sink = Sink::new(cfg, Format::Csv)?;
    let rows = sp.eigenvalues.iter().zip(&sp.labels).enumerate();
    match sink.format {
        Format::Csv => {
            let mut s = String::from("k,branch,omega_or_tau,lambda,multiplicity\n");
            for (i, (l, label)) in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    i + 1,
                    opt(label.branch),
                    opt(label.root),
                    l,
                    label.multiplicity
                );
            }
            sink.write(&s)
        }
        Format::Json => {
            let mut doc = header(cfg, &tr)?;
            doc.insert("method".into(), json!(name(&method)));
            doc.insert("provenance".into(), json!(sp.provenance));
            let rows: Vec<Value> = rows
                .map(|(i, (l, label))| {
                    json!({
                        "k": i + 1,
                        "branch": label.branch,
                        "omega_or_tau": label.root,
                        "lambda": l,
                        "multiplicity": label.multiplicity,
                    })
                })
                .collect();
            doc.insert("rows".into(), Value::Array(rows));
            sink.json(&Value::Object(doc))
        }
    }
}

fn base_descriptor(tr: &Transform) -> Result<AsymptoticDescriptor> {
    let process = tr
        .kernel()
        .process()
        .ok_or_else(|| CliError::Config("small-ball constants need a catalog process".into()))?;
    Ok(process
        .base_small_ball()
        .ok_or_else(|| CliError::Config(format!("no small-ball constants for `{process}`")))?
        .descriptor)
}

fn require_critical(tr: &Transform, form: &str) -> Result<()> {
    if !tr.is_critical() {
        return Err(CliError::Config(format!(
            "{form} applies only at alpha = 1/q = {}",
            1.0 / tr.q()
        )));
    }
    Ok(())
}

fn smallball(cfg: &RunConfig) -> Result<()> {
    let tr = transform(cfg)?;
    let eps = match cfg.eps.as_deref() {
        None => None,
        Some([e]) => Some(*e),
        Some(_) => {
            return Err(CliError::Config(
                "smallball takes a single eps; use `table` for a range".into(),
            ))
        }
    };
    let form = cfg.form.unwrap_or(Form::Auto);
    let (desc, branch) = match form {
        Form::Auto => predict(&tr)?,
        Form::Theorem1 => (
            theorem1_scale(&base_descriptor(&tr)?, tr.q(), tr.alpha())?,
            Branch::Theorem1,
        ),
        Form::Theorem3 => {
            require_critical(&tr, "theorem3")?;
            let norm = tr.weight().l2_norm()?;
            (
                theorem3_scale(&base_descriptor(&tr)?, tr.q(), norm)?,
                Branch::Theorem3,
            )
        }
        Form::Theorem2 => {
            require_critical(&tr, "theorem2")?;
            (base_descriptor(&tr)?, Branch::Theorem2)
        }
    };
    let mut doc = header(cfg, &tr)?;
    doc.insert("branch".into(), json!(branch));
    doc.insert("C".into(), json!(desc.scale));
    doc.insert("beta".into(), json!(desc.power));
    doc.insert("D".into(), json!(desc.rate));
    doc.insert("d".into(), json!(desc.exponent));
    if branch == Branch::Theorem2 {
        doc.insert("descriptor_of".into(), json!("base"));
    }
    if let Some(e) = eps {
        let (value, clamped) = if branch == Branch::Theorem2 {
            let r = e * e;
            let curve = DistributionCurve::from_descriptor(&desc, r, CURVE_NODES)?;
            let norm = tr.weight().l2_norm()?;
            (theorem2_convolution(&curve, tr.q(), norm, r)?, false)
        } else {
            eval_asymptotic(&desc, e)
        };
        doc.insert("eps".into(), json!(e));
        doc.insert("value_at_eps".into(), json!(value));
        doc.insert("clamped".into(), json!(clamped));
    }
    let sink = Sink::new(cfg, Format::Json)?;
    if sink.format != Format::Json {
        return Err(CliError::Config("smallball writes JSON only".into()));
    }
    sink.json(&Value::Object(doc))
}

struct Simulation {
    batch: SampleBatch,
    /// Listed mass plus the tail estimate.
    trace: f64,
}

fn simulate_batch(cfg: &RunConfig, tr: &Transform, paths: usize) -> Result<Simulation> {
    let terms = cfg.terms.unwrap_or(200);
    let seed = seed(cfg)?;
    match cfg.route.unwrap_or(Route::Eigen) {
        Route::Eigen => {
            let ev = transformed_kl(tr, terms)?.eigenvalues;
            let batch = sample_norm2(&ev, paths, seed)?;
            let trace = ev.iter().sum::<f64>() + batch.tail_bound;
            Ok(Simulation { batch, trace })
        }
        Route::Paths => {
            let basis = base_kl(tr.kernel(), terms)?;
            let grid = Grid::gauss_legendre(cfg.grid.unwrap_or(256));
            let base = sample_paths(&basis, &PathLayout::grid(&grid), paths, terms, seed)?;
            let trace = basis.eigenvalues.iter().sum::<f64>() + base.tail_bound;
            let batch = transform_paths(&base, tr)?;
            Ok(Simulation { batch, trace })
        }
    }
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let tr = transform(cfg)?;
    let paths = cfg.paths.unwrap_or(10_000);
    let sim = simulate_batch(cfg, &tr, paths)?;
    let norms = sim.batch.norms2()?;
    let (mean, se) = mean_with_se(&norms);
    let prediction = predict(&tr).ok();
    let mut rows = Vec::new();
    for &e in cfg.eps.as_deref().unwrap_or(&[]) {
        let est = empirical_small_ball(&sim.batch, e)?;
        let predicted = prediction.map(|(d, _)| eval_asymptotic(&d, e));
        rows.push(json!({
            "eps": e,
            "estimate": est.estimate,
            "lower": est.lower,
            "upper": est.upper,
            "hits": est.hits,
            "moderate": est.moderate,
            "predicted": predicted.map(|p| p.0),
            "predicted_clamped": predicted.map(|p| p.1),
            "warning": est.warning,
        }));
    }
    let mut doc = header(cfg, &tr)?;
    doc.insert(
        "route".into(),
        json!(name(&cfg.route.unwrap_or(Route::Eigen))),
    );
    doc.insert("paths".into(), json!(paths));
    doc.insert("terms".into(), json!(sim.batch.truncation));
    doc.insert("seed".into(), json!(sim.batch.seed));
    doc.insert("tail_bound".into(), json!(sim.batch.tail_bound));
    doc.insert(
        "truncation_ok".into(),
        json!(sim.batch.meets_truncation_rule(sim.trace)),
    );
    doc.insert("norm2_mean".into(), json!(mean));
    doc.insert("norm2_se".into(), json!(se));
    doc.insert("branch".into(), json!(prediction.map(|(_, b)| b)));
    doc.insert("small_ball".into(), Value::Array(rows));
    let sink = Sink::new(cfg, Format::Json)?;
    if sink.format != Format::Json {
        return Err(CliError::Config(
            "simulate writes JSON only; use `table` for CSV".into(),
        ));
    }
    sink.json(&Value::Object(doc))
}

fn table(cfg: &RunConfig) -> Result<()> {
    let tr = transform(cfg)?;
    let paths = cfg.paths.unwrap_or(100_000);
    let sim = simulate_batch(cfg, &tr, paths)?;
    let prediction = predict(&tr).ok().map(|(d, _)| d);
    let eps = cfg.eps.clone().unwrap_or_else(|| TABLE_EPS.to_vec());
    let mut rows = Vec::with_capacity(eps.len());
    for e in eps {
        let est = empirical_small_ball(&sim.batch, e)?;
        rows.push((e, prediction.map(|d| eval_asymptotic(&d, e).0), est));
    }
    let sink = Sink::new(cfg, Format::Csv)?;
    match sink.format {
        Format::Csv => {
            let mut s = String::from("eps,predicted,empirical,lower,upper,hits,moderate\n");
            for (e, p, est) in &rows {
                let _ = writeln!(
                    s,
                    "{e},{},{},{},{},{},{}",
                    opt(*p),
                    est.estimate,
                    est.lower,
                    est.upper,
                    est.hits,
                    est.moderate
                );
            }
            sink.write(&s)
        }
        Format::Json => {
            let mut doc = header(cfg, &tr)?;
            doc.insert("paths".into(), json!(paths));
            doc.insert("seed".into(), json!(sim.batch.seed));
            let rows: Vec<Value> = rows
                .iter()
                .map(|(e, p, est)| {
                    json!({
                        "eps": e,
                        "predicted": p,
                        "empirical": est.estimate,
                        "lower": est.lower,
                        "upper": est.upper,
                        "hits": est.hits,
                        "moderate": est.moderate,
                    })
                })
                .collect();
            doc.insert("rows".into(), Value::Array(rows));
            sink.json(&Value::Object(doc))
        }
    }
}

fn run_validate(cfg: &RunConfig) -> Result<()> {
    let suite = cfg.suite.unwrap_or(Suite::All);
    let report = validate::run(suite, seed(cfg)?);
    let sink = Sink::new(cfg, Format::Json)?;
    match sink.format {
        Format::Json => {
            let v = serde_json::to_value(&report)
                .map_err(|e| CliError::Numeric(format!("cannot serialize report: {e}")))?;
            sink.json(&v)?;
        }
        Format::Csv => {
            let mut s = String::from(
                "suite,criterion,name,measured,tolerance,relation,passed,advisory,note\n",
            );
            for c in &report.checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    c.suite,
                    opt(c.criterion),
                    csv_field(&c.name),
                    c.measured,
                    c.tolerance,
                    name_of(c.relation),
                    c.passed,
                    c.advisory,
                    csv_field(c.note.as_deref().unwrap_or(""))
                );
            }
            sink.write(&s)?;
        }
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} check(s) failed: {}",
            failed.len(),
            failed.join("; ")
        )))
    }
}

fn name_of(r: validate::Relation) -> &'static str {
    match r {
        validate::Relation::Below => "below",
        validate::Relation::Above => "above",
    }
}

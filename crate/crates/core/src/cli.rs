//! Run configuration, subcommand drivers and on-disk artifacts.
//!
//! Config files are line oriented `key = value` with `#` comments. Keys:
//!
//! | key | default |
//! |-----|---------|
//! | `grid.type` (`radial` or `box`), `grid.n`, `grid.L` | required |
//! | `model.variant` (`homogeneous`, `piecewise`, `zero`), `model.mu` | required |
//! | `model.p`, `model.q` | required for `piecewise` |
//! | `model.theta`, `model.c0` | model default |
//! | `potential.variant` (`example1`, `example2`, `example3`, `constant`, `table`) | required |
//! | `potential.v0`, `potential.q` | `example1` |
//! | `potential.delta` | `example2` |
//! | `potential.w0` (number or `auto`) | `auto` |
//! | `potential.value` | `constant` |
//! | `potential.path` | `table`, relative to the config file |
//! | `penalty.R` | required |
//! | `penalty.ell` (number or `auto`) | `auto` |
//! | `penalty.samples`, `penalty.margin`, `penalty.seed` | 200, 0.1, 42 |
//! | `penalty.holdout`, `penalty.holdout_seed` | 50, 43 |
//! | `penalty.level_trials`, `penalty.level_nodes` | 64, 1024 |
//! | `penalty.strauss_margin` | 0.2 |
//! | `penalty.verdict_cutoffs` (comma list) | `R, 2R, 4R, 8R` |
//! | `solver.max_iter`, `solver.grad_tol` | 20000, 1e-6 |
//! | `solver.init_scale`, `solver.init_width`, `solver.seed` | 1, 1, 42 |
//! | `output.directory` | `.` relative to the config file |
//! | `output.formats` (subset of `csv,report,bin`) | all |
//!
//! `solve` writes `solution.csv` (`r,u,V,K,g_of_u`), `solution.bin`
//! (little-endian `u64` count then `f64` values of `u`) and `report.txt`.
//! The report holds `run.*`, `solver.*` and `audit.*` keys; the audit keys
//! are those of [`AuditReport::to_pairs`]. `verify` recomputes the audit
//! from `solution.bin` and compares every `audit.*` value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::energy::{d_estimate, Functional};
use crate::error::{ChoquardError, Result};
use crate::field::Field;
use crate::grid::{make_box_grid, make_radial_grid, Grid};
use crate::nonlinearity::{NonlinearityModel, DIM};
use crate::penalty::{estimate_ell0, k_op, EnergyBall, PenalizationConfig, PenalizedNonlinearity};
use crate::potential::PotentialModel;
use crate::riesz::ConvolutionEngine;
use crate::solver::{solve, InitProfile, SolutionReport, SolverConfig};
use crate::verify::{
    audit_field, convolution_agreement, cutoff_ladder, decay_functional, example3_ladder, measure_strauss_constant,
    scale_example3, threshold_kind, AuditInputs, AuditReport, StraussConstant,
};

/// Upper end of the admissible `μ` window, `(N+2)/2`.
pub const MU_MAX: f64 = (DIM + 2.0) / 2.0;

/// Tolerance of the `verify` round trip.
pub const ROUND_TRIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Radial,
    Box,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub kind: GridKind,
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelVariant {
    Homogeneous,
    Piecewise { p: f64, q: f64 },
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub mu: f64,
    pub theta: Option<f64>,
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Example1 { v0: f64, q: f64 },
    Example2 { delta: f64 },
    /// `None` picks the smallest admissible scaling.
    Example3 { w0: Option<f64> },
    Constant(f64),
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub cutoff: f64,
    /// `None` means `ℓ = ℓ₀`.
    pub ell: Option<f64>,
    pub samples: usize,
    pub margin: f64,
    pub seed: u64,
    pub holdout: usize,
    pub holdout_seed: u64,
    pub level_trials: usize,
    pub level_nodes: usize,
    pub strauss_margin: f64,
    pub verdict_cutoffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub init_scale: f64,
    pub init_width: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Report,
    Bin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: BTreeSet<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub potential: PotentialSpec,
    pub penalty: PenaltySpec,
    pub solver: SolverSpec,
    pub output: OutputSpec,
}

const REQUIRED: [&str; 7] = [
    "grid.type",
    "grid.n",
    "grid.L",
    "model.variant",
    "model.mu",
    "potential.variant",
    "penalty.R",
];

const OPTIONAL: [&str; 27] = [
    "model.p",
    "model.q",
    "model.theta",
    "model.c0",
    "potential.v0",
    "potential.q",
    "potential.delta",
    "potential.w0",
    "potential.value",
    "potential.path",
    "penalty.ell",
    "penalty.samples",
    "penalty.margin",
    "penalty.seed",
    "penalty.holdout",
    "penalty.holdout_seed",
    "penalty.level_trials",
    "penalty.level_nodes",
    "penalty.strauss_margin",
    "penalty.verdict_cutoffs",
    "solver.max_iter",
    "solver.grad_tol",
    "solver.init_scale",
    "solver.init_width",
    "solver.seed",
    "output.directory",
    "output.formats",
];

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ChoquardError::Config(msg.into()))
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .or_else(|_| cfg_err(format!("line {line}: `{key}` has unparsable value `{v}`"))),
        }
    }

    fn need<T: std::str::FromStr>(&self, key: &str, why: &str) -> Result<T> {
        self.num(key)?
            .map_or_else(|| cfg_err(format!("missing key `{key}` ({why})")), Ok)
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.num(key)?.unwrap_or(default))
    }
}

fn window(key: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value > lo && value < hi {
        Ok(())
    } else {
        cfg_err(format!("`{key} = {value}` lies outside the window ({lo}, {hi})"))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ChoquardError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

/// Parses config text; relative paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return cfg_err(format!("line {}: expected `key = value`", i + 1));
        };
        let (k, v) = (k.trim(), v.trim());
        if !REQUIRED.contains(&k) && !OPTIONAL.contains(&k) {
            return cfg_err(format!("line {}: unknown key `{k}`", i + 1));
        }
        if map.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
            return cfg_err(format!("line {}: duplicate key `{k}`", i + 1));
        }
    }
    let missing: Vec<&str> = REQUIRED.iter().filter(|k| !map.contains_key(**k)).copied().collect();
    if !missing.is_empty() {
        return cfg_err(format!("missing required keys: {}", missing.join(", ")));
    }
    let e = Entries { map };

    let kind = match e.raw("grid.type").unwrap() {
        "radial" => GridKind::Radial,
        "box" => GridKind::Box,
        other => return cfg_err(format!("`grid.type` must be radial or box, got `{other}`")),
    };
    let grid = GridSpec {
        kind,
        n: e.need("grid.n", "grid size")?,
        length: e.need("grid.L", "domain size")?,
    };
    if grid.n < 2 || !(grid.length > 0.0) {
        return cfg_err("grid needs n >= 2 and L > 0");
    }

    let mu: f64 = e.need("model.mu", "Riesz exponent")?;
    window("model.mu", mu, 0.0, MU_MAX)?;
    let variant = match e.raw("model.variant").unwrap() {
        "homogeneous" => {
            window("model.mu", mu, 0.0, MU_MAX.min(4.0))?;
            ModelVariant::Homogeneous
        }
        "piecewise" => {
            let p: f64 = e.need("model.p", "piecewise model")?;
            window("model.p", p, 1.0, 2.0 * (DIM - mu) / (DIM - 2.0))?;
            let q: f64 = e.need("model.q", "piecewise model")?;
            ModelVariant::Piecewise { p, q }
        }
        "zero" => ModelVariant::Zero,
        other => return cfg_err(format!("unknown `model.variant` `{other}`")),
    };
    let theta: Option<f64> = e.num("model.theta")?;
    if let Some(t) = theta {
        window("model.theta", t, 2.0, 4.0)?;
    }
    let model = ModelSpec {
        variant,
        mu,
        theta,
        c0: e.num("model.c0")?,
    };

    let potential = match e.raw("potential.variant").unwrap() {
        "example1" => PotentialSpec::Example1 {
            v0: e.need("potential.v0", "example1")?,
            q: e.need("potential.q", "example1")?,
        },
        "example2" => PotentialSpec::Example2 {
            delta: e.need("potential.delta", "example2")?,
        },
        "example3" => PotentialSpec::Example3 {
            w0: match e.raw("potential.w0") {
                None | Some("auto") => None,
                Some(_) => e.num("potential.w0")?,
            },
        },
        "constant" => PotentialSpec::Constant(e.need("potential.value", "constant potential")?),
        "table" => PotentialSpec::Table(base.join(e.raw("potential.path").ok_or_else(|| {
            ChoquardError::Config("missing key `potential.path` (table potential)".into())
        })?)),
        other => return cfg_err(format!("unknown `potential.variant` `{other}`")),
    };

    let verdict_cutoffs = match e.raw("penalty.verdict_cutoffs") {
        None => None,
        Some(v) => Some(
            v.split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .or_else(|_| cfg_err(format!("`penalty.verdict_cutoffs` is not a number list: `{v}`")))?,
        ),
    };
    let penalty = PenaltySpec {
        cutoff: e.need("penalty.R", "cutoff radius")?,
        ell: match e.raw("penalty.ell") {
            None | Some("auto") => None,
            Some(_) => e.num("penalty.ell")?,
        },
        samples: e.or("penalty.samples", 200)?,
        margin: e.or("penalty.margin", 0.10)?,
        seed: e.or("penalty.seed", 42)?,
        holdout: e.or("penalty.holdout", 50)?,
        holdout_seed: e.or("penalty.holdout_seed", 43)?,
        level_trials: e.or("penalty.level_trials", 64)?,
        level_nodes: e.or("penalty.level_nodes", 1024)?,
        strauss_margin: e.or("penalty.strauss_margin", 0.20)?,
        verdict_cutoffs,
    };
    if !(penalty.cutoff > 1.0) {
        return cfg_err(format!("`penalty.R = {}` must exceed 1", penalty.cutoff));
    }

    let solver = SolverSpec {
        max_iter: e.or("solver.max_iter", 20_000)?,
        grad_tol: e.or("solver.grad_tol", 1e-6)?,
        init_scale: e.or("solver.init_scale", 1.0)?,
        init_width: e.or("solver.init_width", 1.0)?,
        seed: e.or("solver.seed", 42)?,
    };

    let mut formats = BTreeSet::new();
    for f in e.raw("output.formats").unwrap_or("csv,report,bin").split(',') {
        formats.insert(match f.trim() {
            "csv" => Format::Csv,
            "report" => Format::Report,
            "bin" => Format::Bin,
            other => return cfg_err(format!("unknown output format `{other}`")),
        });
    }
    let output = OutputSpec {
        directory: base.join(e.raw("output.directory").unwrap_or(".")),
        formats,
    };
    Ok(RunConfig {
        grid,
        model,
        potential,
        penalty,
        solver,
        output,
    })
}

/// Everything a run needs before the solver starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub grid: Arc<Grid>,
    pub engine: ConvolutionEngine,
    pub model: NonlinearityModel,
    pub potential_model: PotentialModel,
    pub potential: Vec<f64>,
    pub d: f64,
    pub ell0: f64,
    pub penalization: PenalizationConfig,
    pub strauss: StraussConstant,
    pub audit_inputs: AuditInputs,
}

impl Prepared {
    pub fn functional(&self) -> Result<Functional> {
        let pen = PenalizedNonlinearity::new(self.penalization, self.model.clone(), &self.grid, &self.potential)?;
        Functional::penalized(self.engine.clone(), self.potential.clone(), pen)
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<NonlinearityModel> {
    let theta = spec.theta.unwrap_or(3.0);
    let mut m = match spec.variant {
        ModelVariant::Homogeneous => NonlinearityModel::homogeneous(spec.mu)?.with_theta(theta)?,
        ModelVariant::Piecewise { p, q } => NonlinearityModel::piecewise(p, q, spec.mu, theta)?,
        ModelVariant::Zero => NonlinearityModel::zero(spec.mu).with_theta(theta)?,
    };
    if let Some(c0) = spec.c0 {
        m = m.with_c0(c0)?;
    }
    Ok(m)
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let grid: Arc<Grid> = Arc::new(match cfg.grid.kind {
        GridKind::Radial => make_radial_grid(cfg.grid.n, cfg.grid.length)?.into(),
        GridKind::Box => make_box_grid(cfg.grid.n, cfg.grid.length)?.into(),
    });
    let engine = ConvolutionEngine::for_grid(grid.clone(), cfg.model.mu)?;
    let model = build_model(&cfg.model)?;
    let strauss = measure_strauss_constant(&grid, cfg.penalty.strauss_margin)?;
    let p = &cfg.penalty;
    let potential_model = match &cfg.potential {
        PotentialSpec::Example1 { v0, q } => PotentialModel::example1(*v0, *q)?,
        PotentialSpec::Example2 { delta } => PotentialModel::example2(*delta, model.mu)?,
        PotentialSpec::Example3 { w0: Some(w0) } => PotentialModel::example3(*w0, model.mu)?,
        PotentialSpec::Example3 { w0: None } => {
            let s = scale_example3(
                &engine,
                &model,
                strauss.value,
                p.level_trials,
                p.level_nodes,
                p.samples,
                p.seed,
                &example3_ladder(),
            )?;
            PotentialModel::example3(s.w0, model.mu)?
        }
        PotentialSpec::Constant(v) => PotentialModel::Constant(*v),
        PotentialSpec::Table(path) => PotentialModel::from_csv(path)?,
    };
    let potential = potential_model.sample(&grid)?;
    let d = d_estimate(&model, potential_model.m(), p.level_trials, p.level_nodes)?.d;
    let ball = EnergyBall::new(model.theta, d)?;
    let ell0 = estimate_ell0(&engine, &model, &potential, &ball, p.samples, p.margin, p.seed)?.ell0;
    let ell = match p.ell {
        None => ell0,
        Some(l) if l >= ell0 => l,
        Some(l) => return cfg_err(format!("`penalty.ell = {l}` is below the estimated ell0 = {ell0}")),
    };
    let penalization = PenalizationConfig::new(p.cutoff, ell)?;
    let audit_inputs = AuditInputs {
        ell0,
        d,
        c_strauss: Some(strauss),
        potential: potential_model.clone(),
        verdict_cutoffs: p
            .verdict_cutoffs
            .clone()
            .unwrap_or_else(|| cutoff_ladder(p.cutoff, 2.0, 4)),
        holdout_count: p.holdout,
        holdout_seed: p.holdout_seed,
    };
    Ok(Prepared {
        grid,
        engine,
        model,
        potential_model,
        potential,
        d,
        ell0,
        penalization,
        strauss,
        audit_inputs,
    })
}

pub fn solver_config(spec: &SolverSpec) -> SolverConfig {
    SolverConfig {
        max_iter: spec.max_iter,
        grad_tol: spec.grad_tol,
        init: InitProfile::Gaussian { width: spec.init_width },
        init_scale: spec.init_scale,
        seed: spec.seed,
        ..SolverConfig::default()
    }
}

/// Result of a solve: solution, audit and the prepared inputs.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub prepared: Prepared,
    pub report: SolutionReport,
    pub audit: AuditReport,
}

pub fn run_solve(cfg: &RunConfig) -> Result<SolveOutcome> {
    let prepared = prepare(cfg)?;
    let functional = prepared.functional()?;
    let report = solve(&functional, &prepared.penalization, &solver_config(&cfg.solver), None)?;
    let audit = audit_field(&report.u, &functional, &prepared.penalization, &prepared.audit_inputs)?;
    Ok(SolveOutcome {
        prepared,
        report,
        audit,
    })
}

fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Profile CSV with columns `r,u,V,K,g_of_u`.
pub fn profile_csv(p: &Prepared, u: &Field) -> Result<String> {
    let pen = PenalizedNonlinearity::new(p.penalization, p.model.clone(), &p.grid, &p.potential)?;
    let (k, _) = k_op(&p.engine, &pen, u)?;
    let mut out = String::from("r,u,V,K,g_of_u\n");
    for (i, ((r, x), v)) in p.grid.radii().iter().zip(u.values()).zip(&p.potential).enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", g17(*r), g17(*x), g17(*v), g17(k.values()[i]), g17(pen.g(i, *x)));
    }
    Ok(out)
}

pub fn encode_field(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * values.len());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() < 8 {
        return cfg_err("binary dump shorter than its header");
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 8 * n {
        return cfg_err(format!("binary dump announces {n} values but holds {} bytes", bytes.len() - 8));
    }
    Ok(bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn report_pairs(o: &SolveOutcome) -> Vec<(String, String)> {
    let p = &o.prepared;
    let r = &o.report;
    let mut out: Vec<(String, String)> = vec![
        ("run.nodes".into(), p.grid.len().to_string()),
        ("run.engine".into(), p.engine.name().into()),
        ("run.mu".into(), g17(p.model.mu)),
        ("run.theta".into(), g17(p.model.theta)),
        ("run.c0".into(), g17(p.model.c0)),
        ("run.potential_m".into(), g17(p.potential_model.m())),
        ("run.cutoff".into(), g17(p.penalization.cutoff)),
        ("run.d".into(), g17(p.d)),
        ("run.ell0".into(), g17(p.ell0)),
        ("run.ell".into(), g17(p.penalization.ell)),
        ("run.c_strauss".into(), g17(p.strauss.value)),
        ("run.c_strauss_library".into(), g17(p.strauss.library_max)),
    ];
    if let PotentialModel::Example3 { w0, .. } = p.potential_model {
        out.push(("run.w0".into(), g17(w0)));
    }
    out.extend([
        ("solver.iterations".into(), r.iterations.to_string()),
        ("solver.converged".into(), r.converged.to_string()),
        ("solver.collapsed".into(), r.collapsed.to_string()),
        ("solver.relaunches".into(), r.relaunches.to_string()),
        ("solver.phi".into(), g17(r.phi)),
        ("solver.e_norm_sq".into(), g17(r.e_norm_sq)),
        ("solver.sup_u".into(), g17(r.sup_u)),
        ("solver.min_value".into(), g17(r.min_value)),
        ("solver.grad_norm".into(), g17(r.grad_norm)),
        ("solver.grad_ratio".into(), g17(r.grad_ratio())),
    ]);
    for (k, v) in o.audit.to_pairs() {
        out.push((format!("audit.{k}"), v));
    }
    out.push(("audit.pass".into(), o.audit.passed().to_string()));
    out
}

pub fn format_pairs(pairs: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

pub fn parse_pairs(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| {
            let l = l.trim();
            if l.starts_with('#') {
                return None;
            }
            l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Writes the requested artifacts into `dir` and returns their paths.
pub fn write_artifacts(o: &SolveOutcome, dir: &Path, formats: &BTreeSet<Format>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        let (name, bytes) = match f {
            Format::Csv => ("solution.csv", profile_csv(&o.prepared, &o.report.u)?.into_bytes()),
            Format::Report => ("report.txt", format_pairs(&report_pairs(o)).into_bytes()),
            Format::Bin => ("solution.bin", encode_field(o.report.u.values())),
        };
        let path = dir.join(name);
        std::fs::write(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip {
    pub audit: AuditReport,
    /// Largest relative gap over numeric `audit.*` values.
    pub max_gap: f64,
    /// Keys whose value differs or is missing on one side.
    pub mismatches: Vec<String>,
}

impl RoundTrip {
    pub fn reproduced(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-audits the stored `solution.bin` in `dir` against `report.txt`.
pub fn run_verify(cfg: &RunConfig, dir: &Path) -> Result<RoundTrip> {
    let prepared = prepare(cfg)?;
    let values = decode_field(&std::fs::read(dir.join("solution.bin"))?)?;
    let u = Field::new(prepared.grid.clone(), values)?;
    let functional = prepared.functional()?;
    let audit = audit_field(&u, &functional, &prepared.penalization, &prepared.audit_inputs)?;
    let stored = parse_pairs(&std::fs::read_to_string(dir.join("report.txt"))?);
    let mut fresh: BTreeMap<String, String> =
        audit.to_pairs().into_iter().map(|(k, v)| (format!("audit.{k}"), v)).collect();
    fresh.insert("audit.pass".into(), audit.passed().to_string());
    let mut max_gap: f64 = 0.0;
    let mut mismatches = Vec::new();
    let keys: BTreeSet<&String> = fresh.keys().chain(stored.keys().filter(|k| k.starts_with("audit."))).collect();
    for k in keys {
        match (fresh.get(k), stored.get(k)) {
            (Some(a), Some(b)) if a == b => {}
            (Some(a), Some(b)) => match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    let gap = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
                    max_gap = max_gap.max(gap);
                    if !(gap <= ROUND_TRIP_TOL) {
                        mismatches.push(k.clone());
                    }
                }
                _ => mismatches.push(k.clone()),
            },
            _ => mismatches.push(k.clone()),
        }
    }
    Ok(RoundTrip {
        audit,
        max_gap,
        mismatches,
    })
}

/// One sweep point; `None` keeps the config value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub cutoff: f64,
    pub delta: Option<f64>,
    pub w0_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub hash: u64,
    pub threshold_kind: &'static str,
    pub threshold: f64,
    /// `𝒱(R)` or `𝒲(R)` at the sweep cutoff.
    pub decay_value: f64,
    pub verdict: bool,
    pub converged: bool,
    pub phi: f64,
    pub sup_u: f64,
    pub consistency: bool,
    pub audit_pass: bool,
}

pub const SWEEP_HEADER: &str =
    "hash,R,delta,w0_scale,threshold_kind,threshold,decay_value,verdict,converged,phi,sup_u,consistency,audit_pass";

impl SweepRow {
    pub fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), g17);
        format!(
            "{:016x},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.hash,
            g17(self.point.cutoff),
            opt(self.point.delta),
            opt(self.point.w0_scale),
            self.threshold_kind,
            g17(self.threshold),
            g17(self.decay_value),
            self.verdict,
            self.converged,
            g17(self.phi),
            g17(self.sup_u),
            self.consistency,
            self.audit_pass
        )
    }
}

fn apply_point(cfg: &RunConfig, pt: &SweepPoint) -> Result<RunConfig> {
    let mut c = cfg.clone();
    c.penalty.cutoff = pt.cutoff;
    if c.penalty.verdict_cutoffs.is_none() {
        c.penalty.verdict_cutoffs = Some(vec![pt.cutoff]);
    }
    if let Some(delta) = pt.delta {
        match &mut c.potential {
            PotentialSpec::Example2 { delta: d } => *d = delta,
            _ => return cfg_err("a delta sweep needs potential.variant = example2"),
        }
    }
    if let Some(scale) = pt.w0_scale {
        match &c.potential {
            PotentialSpec::Example3 { w0 } => {
                let base = match w0 {
                    Some(w) => *w,
                    None => match prepare(cfg)?.potential_model {
                        PotentialModel::Example3 { w0, .. } => w0,
                        _ => unreachable!(),
                    },
                };
                c.potential = PotentialSpec::Example3 { w0: Some(base * scale) };
            }
            _ => return cfg_err("a w0-scale sweep needs potential.variant = example3"),
        }
    }
    Ok(c)
}

fn point_hash(pt: &SweepPoint) -> u64 {
    let mut h = DefaultHasher::new();
    pt.cutoff.to_bits().hash(&mut h);
    pt.delta.map(f64::to_bits).hash(&mut h);
    pt.w0_scale.map(f64::to_bits).hash(&mut h);
    h.finish()
}

/// Cartesian product of the sweep axes; empty axes keep the config value.
pub fn sweep_points(cfg: &RunConfig, cutoffs: &[f64], deltas: &[f64], scales: &[f64]) -> Vec<SweepPoint> {
    let cutoffs = if cutoffs.is_empty() { vec![cfg.penalty.cutoff] } else { cutoffs.to_vec() };
    let deltas: Vec<Option<f64>> = if deltas.is_empty() { vec![None] } else { deltas.iter().map(|d| Some(*d)).collect() };
    let scales: Vec<Option<f64>> = if scales.is_empty() { vec![None] } else { scales.iter().map(|s| Some(*s)).collect() };
    let mut out = Vec::new();
    for &cutoff in &cutoffs {
        for &delta in &deltas {
            for &w0_scale in &scales {
                out.push(SweepPoint { cutoff, delta, w0_scale });
            }
        }
    }
    out
}

/// Runs every point in parallel; each writes `run-<hash>/` artifacts under
/// the output directory. Rows come back in input order.
pub fn run_sweep(cfg: &RunConfig, points: &[SweepPoint]) -> Result<Vec<SweepRow>> {
    points
        .par_iter()
        .map(|pt| {
            let c = apply_point(cfg, pt)?;
            let o = run_solve(&c)?;
            let hash = point_hash(pt);
            let dir = cfg.output.directory.join(format!("run-{hash:016x}"));
            write_artifacts(&o, &dir, &c.output.formats)?;
            let (kind, exponent) = threshold_kind(&o.prepared.model);
            let decay_value = decay_functional(&o.prepared.potential_model, kind, pt.cutoff, exponent)?;
            Ok(SweepRow {
                point: *pt,
                hash,
                threshold_kind: kind.as_str(),
                threshold: o.audit.verdict.threshold,
                decay_value,
                verdict: decay_value > o.audit.verdict.threshold,
                converged: o.report.converged,
                phi: o.report.phi,
                sup_u: o.report.sup_u,
                consistency: o.audit.consistency.pass,
                audit_pass: o.audit.passed(),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

/// Default engine-agreement diagnostic: 20 radial densities on 128 nodes
/// and 2 box densities on `16³`.
pub fn run_convolve_test(mu: f64, seed: u64) -> Result<crate::verify::AgreementReport> {
    convolution_agreement(mu, seed, (128, 20.0, 20), (16, 4.0, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "grid.type = radial\ngrid.n = 256\ngrid.L = 20\nmodel.variant = homogeneous\n\
                        model.mu = 1\npotential.variant = example3\npenalty.R = 2\n";

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, Path::new("/tmp"))
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.grid.n, 256);
        assert_eq!(c.penalty.seed, 42);
        assert_eq!(c.penalty.ell, None);
        assert_eq!(c.potential, PotentialSpec::Example3 { w0: None });
        assert_eq!(c.output.formats.len(), 3);
    }

    #[test]
    fn mu_window_is_enforced() {
        let err = parse(&BASE.replace("model.mu = 1", "model.mu = 2.6")).unwrap_err().to_string();
        assert!(err.contains("(0, 2.5)"), "{err}");
    }

    #[test]
    fn p_window_accepts_interior() {
        let text = BASE.replace("homogeneous", "piecewise") + "model.p = 1.5\nmodel.q = 6\n";
        assert!(parse(&text).is_ok());
        let err = parse(&text.replace("model.p = 1.5", "model.p = 4")).unwrap_err().to_string();
        assert!(err.contains("(1, 4)"), "{err}");
    }

    #[test]
    fn theta_window() {
        assert!(parse(&(BASE.to_string() + "model.theta = 4\n")).is_err());
        assert!(parse(&(BASE.to_string() + "model.theta = 3.5\n")).is_ok());
    }

    #[test]
    fn empty_file_lists_required_keys() {
        let err = parse("").unwrap_err().to_string();
        for k in REQUIRED {
            assert!(err.contains(k), "{err}");
        }
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(parse(&(BASE.to_string() + "grid.nn = 3\n")).unwrap_err().to_string().contains("unknown key"));
        assert!(parse(&(BASE.to_string() + "grid.n = 3\n")).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn comments_and_lists() {
        let text = BASE.to_string() + "# note\npenalty.verdict_cutoffs = 2, 4 ,8 # trailing\npenalty.ell = auto\n";
        let c = parse(&text).unwrap();
        assert_eq!(c.penalty.verdict_cutoffs, Some(vec![2.0, 4.0, 8.0]));
    }

    #[test]
    fn binary_round_trip() {
        let v = vec![1.0, -0.0, f64::MIN_POSITIVE, 3.25e300];
        let b = encode_field(&v);
        assert_eq!(b.len(), 8 + 32);
        assert_eq!(&b[..8], &4u64.to_le_bytes());
        let back = decode_field(&b).unwrap();
        assert!(v.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(decode_field(&b[..20]).is_err());
    }

    #[test]
    fn sweep_points_product() {
        let c = parse(BASE).unwrap();
        assert_eq!(sweep_points(&c, &[2.0, 4.0], &[], &[1.0, 2.0, 3.0]).len(), 6);
        assert_eq!(sweep_points(&c, &[], &[], &[]), vec![SweepPoint { cutoff: 2.0, delta: None, w0_scale: None }]);
    }
}

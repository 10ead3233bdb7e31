//! Batch runner: reads a TOML configuration, solves the requested modes and
//! writes CSV and JSON artifacts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 violated precondition,
//! 4 solver instability, 5 certificate failure.

pub mod artifacts;
pub mod config;
pub mod expr;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use scri_core::energy::{audit_h1_with_source, AuditOptions, EnergyWeights};
use scri_core::expansion::{
    extract_radiation_field, fit_coefficients, recursion_coefficients, remainder_certificate, MetricSeries,
};
use scri_core::grid::{Grid, ModeField};
use scri_core::metric::{conformal_reduce, make_minkowski, make_schwarzschild, Domain, MetricFile, ReducedProblem};
use scri_core::operator::{assemble, mode_reduce, ModeCoefficients};
use scri_core::oracle::{evaluate_series, substitution_oracle, taylor_solve, BuiltinMetric};
use scri_core::solver::{convergence_study, solve_with, BoundaryData, Profile, SolverOptions};

use artifacts::{ArtifactWriter, Header};
use config::{MetricConfig, ParsedData, RunConfig};
use expr::{parse_expression, Expr};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] scri_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        use scri_core::Error as E;
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Core(e) => match e {
                E::Domain(_) | E::Resolution(_) | E::Shape(_) | E::Input(_) | E::Io(_) | E::Json(_) => 2,
                E::AssumptionViolation { .. }
                | E::UnsupportedClass(_)
                | E::CornerIncompatibility { .. }
                | E::IllConditionedFit { .. } => 3,
                E::Instability { .. } => 4,
                E::CertificateFailure { .. } | E::ViolatedUniqueness { .. } => 5,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "precondition",
            4 => "instability",
            _ => "certificate",
        }
    }

    /// Machine-readable diagnostic.
    pub fn diagnostic(&self) -> serde_json::Value {
        json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Expand,
    Audit,
    Converge,
    Oracle,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Expand => "expand",
            Command::Audit => "audit",
            Command::Converge => "converge",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
    /// Overrides `rng_seed`.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub artifacts: Vec<String>,
    pub error: Option<serde_json::Value>,
}

/// Everything a mode job needs, shared across workers.
struct Setup {
    config: RunConfig,
    data: ParsedData,
    problem: Arc<ReducedProblem>,
    builtin: Option<BuiltinMetric>,
    grid: Grid,
    base: PathBuf,
    seed: u64,
}

fn build_problem(config: &RunConfig, base: &Path) -> Result<(ReducedProblem, Option<BuiltinMetric>), RunError> {
    let (t, z0) = (config.domain.t_max, config.domain.z0);
    Ok(match &config.metric {
        MetricConfig::Minkowski => (conformal_reduce(&make_minkowski(t, z0)?)?, Some(BuiltinMetric::Minkowski)),
        MetricConfig::Schwarzschild { mass } => {
            (conformal_reduce(&make_schwarzschild(*mass, t, z0)?)?, Some(BuiltinMetric::Schwarzschild { mass: *mass }))
        }
        MetricConfig::File { path } => {
            let p = MetricFile::load(&base.join(path))?.reduced_problem()?;
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
            if !close(p.domain.t_max, t) || !close(p.domain.z0, z0) {
                return Err(RunError::Config(format!(
                    "metric file covers T = {}, z0 = {} but the config asks for T = {t}, z0 = {z0}",
                    p.domain.t_max, p.domain.z0
                )));
            }
            (p, None)
        }
    })
}

fn read_profile(path: &Path) -> Result<Profile, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                xs.push(v[0]);
                ys.push(v[1]);
            }
            // a header row
            None if xs.is_empty() => continue,
            _ => {
                return Err(RunError::Config(format!("{}:{}: expected two numeric columns", path.display(), i + 1)))
            }
        }
    }
    if xs.len() < 4 {
        return Err(RunError::Config(format!("{}: need at least 4 samples", path.display())));
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if xs.iter().enumerate().any(|(i, x)| (x - (xs[0] + i as f64 * step)).abs() > 1e-9 * step.abs().max(1.0)) {
        return Err(RunError::Config(format!("{}: samples must be uniformly spaced", path.display())));
    }
    Ok(Profile::samples(xs[0], step, ys)?)
}

/// Smooth random data for mode `l`, compatible at the corner.
fn random_data(seed: u64, l: u32, z0: f64) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(l) + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let c0: f64 = rng.gen_range(-1.0..1.0);
    let mut phi = format!("{c0:?}");
    let mut corner = c0;
    for k in 1..=3 {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let w = k as f64 * std::f64::consts::FRAC_PI_2 / z0;
        phi.push_str(&format!(" + {a:?}*sin({w:?}*z)"));
        corner += a * (w * z0).sin();
    }
    let mut psi = format!("{corner:?}");
    for k in 1..=3 {
        let b: f64 = rng.gen_range(-1.0..1.0);
        psi.push_str(&format!(" + {b:?}*sin({}*t)", k));
    }
    (phi, psi)
}

/// Boundary data for one mode, and the expression forms when available.
struct ModeData {
    data: BoundaryData,
    psi: Option<Expr>,
}

impl Setup {
    fn mode_data(&self, l: u32) -> Result<ModeData, RunError> {
        let z0 = self.config.domain.z0;
        let (mut phi, mut psi) = (self.data.phi.clone(), self.data.psi.clone());
        if self.config.data.random {
            let (p, q) = random_data(self.seed, l, z0);
            phi = Some(parse_expression(&p).map_err(|e| RunError::Config(e.to_string()))?);
            psi = Some(parse_expression(&q).map_err(|e| RunError::Config(e.to_string()))?);
        }
        if let Some(exact) = &self.data.exact {
            if phi.is_none() && self.config.data.phi_file.is_none() {
                phi = Some(exact.clone());
            }
            if psi.is_none() && self.config.data.psi_file.is_none() {
                psi = Some(exact.clone());
            }
        }
        let phi_profile = match (&phi, &self.config.data.phi_file) {
            (Some(e), _) => {
                let e = e.clone();
                Profile::function(move |z| e.eval(0.0, z))
            }
            (None, Some(f)) => read_profile(&self.base.join(f))?,
            (None, None) => Profile::constant(0.0),
        };
        let psi_profile = match (&psi, &self.config.data.psi_file) {
            (Some(e), _) => {
                let e = e.clone();
                Profile::function(move |t| e.eval(t, z0))
            }
            (None, Some(f)) => read_profile(&self.base.join(f))?,
            (None, None) => Profile::constant(0.0),
        };
        Ok(ModeData { data: BoundaryData::new(phi_profile, psi_profile), psi })
    }

    fn options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(f) = &self.data.source {
            let f = f.clone();
            o = o.with_source(move |t, z| f.eval(t, z));
        }
        o
    }

    fn coefficients(&self, l: u32) -> Result<ModeCoefficients, RunError> {
        Ok(mode_reduce(&assemble(&self.problem)?, l)?)
    }

    fn solve(&self, l: u32) -> Result<(ModeCoefficients, ModeData, ModeField), RunError> {
        let coeffs = self.coefficients(l)?;
        let data = self.mode_data(l)?;
        let mut field = solve_with(&coeffs, &data.data, self.grid, &self.options())?;
        field.m = self.config.modes.m;
        Ok((coeffs, data, field))
    }

    fn exact_error(&self, field: &ModeField) -> Option<f64> {
        let e = self.data.exact.as_ref()?;
        let g = field.grid;
        let mut err = 0.0f64;
        for n in 0..g.n_tau {
            for j in 0..g.n_z {
                err = err.max((field.get(n, j) - e.eval(g.tau(n), g.z(j))).abs());
            }
        }
        Some(err)
    }
}

/// Output of one mode, written after all workers finish.
enum Artifact {
    Csv(String, String),
    Json(String, serde_json::Value),
    Solution(ModeField),
}

fn mode_job(setup: &Setup, command: Command, l: u32) -> Result<Vec<Artifact>, RunError> {
    let m = setup.config.modes.m;
    let tag = format!("l{l}_m{m}");
    match command {
        Command::Solve => {
            let (_, _, field) = setup.solve(l)?;
            Ok(vec![Artifact::Solution(field)])
        }
        Command::Expand => {
            let (coeffs, data, field) = setup.solve(l)?;
            let k = setup.config.expand.k;
            let mut out = Vec::new();
            for method in &setup.config.expand.methods {
                let mut table = if method == "fit" {
                    fit_coefficients(&field, k)?
                } else {
                    let series = match &setup.config.expand.series {
                        Some(s) => MetricSeries {
                            lapse: s.lapse.clone(),
                            a1: s.a1.clone(),
                            a0: s.a0.clone(),
                            b: s.b.clone(),
                            terminating: false,
                        },
                        None => MetricSeries::from_coefficients(&coeffs)?,
                    };
                    let phi = data.data.phi.sample(&setup.grid.zs());
                    recursion_coefficients(&extract_radiation_field(&field), &setup.grid, &series, &phi, l, k)?
                };
                table.m = m;
                let remainder = remainder_certificate(&field, &table, k)?;
                let name = format!("expansion_{tag}_{method}");
                let mut sidecar = table.sidecar();
                sidecar["remainder"] = serde_json::to_value(remainder).expect("serializable");
                sidecar["csv"] = json!(format!("{name}.csv"));
                out.push(Artifact::Csv(format!("{name}.csv"), table.to_csv(&[])));
                out.push(Artifact::Json(format!("{name}.json"), sidecar));
            }
            Ok(out)
        }
        Command::Audit => {
            let (_, data, field) = setup.solve(l)?;
            let a = &setup.config.audit;
            let weights = if a.m.is_some() || a.q.is_some() || a.l.is_some() {
                let d = EnergyWeights::defaults(&setup.problem);
                Some(EnergyWeights::new(a.m.unwrap_or(d.m), a.q.unwrap_or(d.q), a.l.unwrap_or(d.l))?)
            } else {
                None
            };
            let options = AuditOptions { weights, epsilon: a.epsilon, samples: a.samples, seed: setup.seed };
            let source = setup.data.source.clone().map(|f| move |t: f64, z: f64| f.eval(t, z));
            let report = audit_h1_with_source(
                &setup.problem,
                &field,
                &data.data,
                &options,
                source.as_ref().map(|f| f as &(dyn Fn(f64, f64) -> f64 + Sync)),
            )?;
            let body = json!({
                "l": l,
                "m": m,
                "report": report,
                "final_slice_nonpositive": report.final_slice_margin >= 0.0,
                "curve_margin_nonnegative": report.curve_margin >= 0.0,
            });
            Ok(vec![Artifact::Json(format!("audit_{tag}.json"), body)])
        }
        Command::Converge => {
            let coeffs = setup.coefficients(l)?;
            let data = setup.mode_data(l)?;
            let exact = setup.data.exact.clone();
            let exact_fn = exact.map(|e| move |t: f64, z: f64| e.eval(t, z));
            let report = convergence_study(
                &coeffs,
                &data.data,
                setup.grid,
                setup.config.converge.levels,
                exact_fn.as_ref().map(|f| f as &(dyn Fn(f64, f64) -> f64 + Sync)),
                &setup.options(),
            )?;
            Ok(vec![Artifact::Json(format!("convergence_{tag}.json"), json!({ "l": l, "m": m, "report": report }))])
        }
        Command::Oracle => {
            let order = setup.config.oracle.order;
            let (coeffs, data, field) = setup.solve(l)?;
            let psi = data
                .psi
                .as_ref()
                .ok_or_else(|| RunError::Config("the series oracle needs psi as an expression".into()))?;
            if setup.data.source.is_some() {
                return Err(RunError::Config("the series oracle does not support a source term".into()));
            }
            let z0 = setup.config.domain.z0;
            let psi_taylor = psi.taylor_in_t(0.0, z0, order);
            let phi = data.data.phi.sample(&setup.grid.zs());
            let series = taylor_solve(&coeffs, &phi, &psi_taylor, &setup.grid, order)?;
            let g = setup.grid;
            let window = setup.config.oracle.window * g.t_max;
            let mut diff = 0.0f64;
            let mut series_exact = None::<f64>;
            let mut rows = 0;
            for n in 0..g.n_tau {
                let t = g.tau(n);
                if t > window * (1.0 + 1e-12) {
                    break;
                }
                rows += 1;
                for j in 0..g.n_z {
                    let s = evaluate_series(&series, t, j);
                    diff = diff.max((s - field.get(n, j)).abs());
                    if let Some(e) = &setup.data.exact {
                        let d = (s - e.eval(t, g.z(j))).abs();
                        series_exact = Some(series_exact.map_or(d, |x| x.max(d)));
                    }
                }
            }
            let substitution = match setup.builtin {
                Some(b) => Some(substitution_oracle(b, l)?),
                None => None,
            };
            let body = json!({
                "l": l,
                "m": m,
                "order": order,
                "window": window,
                "rows": rows,
                "psi_taylor": psi_taylor,
                "max_series_minus_solver": diff,
                "max_series_minus_exact": series_exact,
                "max_solver_minus_exact": setup.exact_error(&field),
                "recurrence_defect": series.recurrence_defect(),
                "substitution": substitution,
            });
            Ok(vec![Artifact::Json(format!("oracle_{tag}.json"), body)])
        }
    }
}

fn prepare(options: &RunOptions) -> Result<(String, RunConfig, PathBuf), RunError> {
    let text = std::fs::read_to_string(&options.config)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", options.config.display())))?;
    let config = RunConfig::from_toml(&text)?;
    let base = options.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((text, config, base))
}

/// Runs one command and writes its artifacts; never panics on bad input.
pub fn run(options: &RunOptions) -> RunOutcome {
    let fallback_out = options.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let (text, config, base) = match prepare(options) {
        Ok(x) => x,
        Err(e) => {
            return RunOutcome { exit_code: e.exit_code(), out_dir: fallback_out, artifacts: vec![], error: Some(e.diagnostic()) }
        }
    };
    let seed = options.seed.unwrap_or(config.rng_seed);
    let out_dir = options.out.clone().unwrap_or_else(|| base.join(&config.output.dir));
    let header = Header::new(&text, seed, options.command.as_str());
    let mut writer = match ArtifactWriter::new(&out_dir, header) {
        Ok(w) => w,
        Err(e) => {
            let e = RunError::Io(e);
            return RunOutcome { exit_code: e.exit_code(), out_dir, artifacts: vec![], error: Some(e.diagnostic()) };
        }
    };

    let result = execute(options.command, config, base, seed, &mut writer);
    let (exit_code, error, failed_mode) = match &result {
        Ok(()) => (0, None, None),
        Err((e, mode)) => (e.exit_code(), Some(e.diagnostic()), *mode),
    };
    let status = json!({
        "status": if exit_code == 0 { "ok" } else { "failed" },
        "exit_code": exit_code,
        "partial": exit_code != 0 && !writer.written.is_empty(),
        "failed_mode": failed_mode,
        "artifacts": writer.written.clone(),
        "error": error,
    });
    if let Err(e) = writer.write_json("run_status.json", status) {
        let e = RunError::Io(e);
        return RunOutcome { exit_code: e.exit_code(), out_dir, artifacts: writer.written, error: Some(e.diagnostic()) };
    }
    RunOutcome { exit_code, out_dir, artifacts: writer.written, error }
}

type Failure = (RunError, Option<u32>);

fn execute(command: Command, config: RunConfig, base: PathBuf, seed: u64, writer: &mut ArtifactWriter) -> Result<(), Failure> {
    let data = config.validate(&base).map_err(|e| (e, None))?;
    let (problem, builtin) = build_problem(&config, &base).map_err(|e| (e, None))?;
    let domain = Domain::new(config.domain.t_max, config.domain.z0).map_err(|e| (e.into(), None))?;
    let grid = Grid::new(config.grid.n_tau, config.grid.n_z, domain).map_err(|e| (e.into(), None))?;
    let modes = config.modes.list();
    let setup = Setup { config, data, problem: Arc::new(problem), builtin, grid, base, seed };

    let results: Vec<Result<Vec<Artifact>, RunError>> = modes.par_iter().map(|&l| mode_job(&setup, command, l)).collect();
    let mut first_error = None;
    for (l, r) in modes.iter().zip(results) {
        match r {
            Ok(arts) => {
                for a in arts {
                    let written = match a {
                        Artifact::Csv(name, body) => {
                            let mut text = String::new();
                            for line in writer.header.lines() {
                                text.push_str(&format!("# {line}\n"));
                            }
                            text.push_str(&body);
                            writer.write_text(&name, &text)
                        }
                        Artifact::Json(name, body) => writer.write_json(&name, body),
                        Artifact::Solution(field) => writer.write_solution(&field).map(|_| ()),
                    };
                    written.map_err(|e| (RunError::Io(e), Some(*l)))?;
                }
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some((e, Some(*l)));
                }
            }
        }
    }
    match first_error {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

//! Retarded-time march of the characteristic initial-boundary value problem.
//!
//! Data are `phi` on the null slice `tau = 0` and `psi` on the timelike
//! surface `z = z0`. Each step integrates `W = v_tau` inward in `z` from the
//! boundary value `W(z0) = psi'`, then advances `v` with a trapezoidal
//! predictor-corrector. No condition is imposed at `z = 0`.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::grid::{Grid, ModeField};
use crate::numerics;
use crate::operator::ModeCoefficients;

/// A one-dimensional data profile, either closed-form or uniformly sampled.
#[derive(Clone)]
pub enum Profile {
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Samples at `start + i * step`.
    Samples { start: f64, step: f64, values: Vec<f64> },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Function(_) => write!(f, "Profile::Function"),
            Profile::Samples { start, step, values } => {
                write!(f, "Profile::Samples {{ start: {start}, step: {step}, n: {} }}", values.len())
            }
        }
    }
}

impl Profile {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Function(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::function(move |_| c)
    }

    pub fn samples(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::Resolution(format!("sampled profile needs at least 4 points, got {}", values.len())));
        }
        if !(step > 0.0) {
            return Err(Error::Input("sample spacing must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("sampled profile contains non-finite values".into()));
        }
        Ok(Profile::Samples { start, step, values })
    }

    /// Value at `x`; samples are interpolated with local cubics.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Function(f) => f(x),
            Profile::Samples { start, step, values } => {
                let n = values.len();
                let s = (x - start) / step;
                let nearest = s.round();
                if (s - nearest).abs() < 1e-9 && nearest >= 0.0 && (nearest as usize) < n {
                    return values[nearest as usize];
                }
                let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
                let mut total = 0.0;
                for a in 0..4 {
                    let mut w = 1.0;
                    for b in 0..4 {
                        if a != b {
                            w *= (s - (base + b) as f64) / (a as f64 - b as f64);
                        }
                    }
                    total += w * values[base + a];
                }
                total
            }
        }
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&x| self.eval(x)).collect()
    }
}

/// Data on the null slice and the timelike boundary for one mode.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub phi: Profile,
    pub psi: Profile,
}

impl BoundaryData {
    pub fn new(phi: Profile, psi: Profile) -> Self {
        Self { phi, psi }
    }

    /// Data read off a function `v(tau, z)`.
    pub fn from_solution(z0: f64, v: impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static) -> Self {
        let w = v.clone();
        Self::new(Profile::function(move |z| v(0.0, z)), Profile::function(move |t| w(t, z0)))
    }

    pub fn zero() -> Self {
        Self::new(Profile::constant(0.0), Profile::constant(0.0))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &BoundaryData, beta: f64) -> BoundaryData {
        let lin = |a: Profile, b: Profile| Profile::function(move |x| alpha * a.eval(x) + beta * b.eval(x));
        Self::new(lin(self.phi.clone(), other.phi.clone()), lin(self.psi.clone(), other.psi.clone()))
    }
}

/// Corner mismatch `|phi(z0) - psi(0)|`, or an error when it exceeds `tol`.
pub fn check_compatibility(data: &BoundaryData, z0: f64, tol: f64) -> Result<f64> {
    let mismatch = (data.phi.eval(z0) - data.psi.eval(0.0)).abs();
    if mismatch > tol || !mismatch.is_finite() {
        return Err(Error::CornerIncompatibility { mismatch, tol });
    }
    Ok(mismatch)
}

type Source = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SolverOptions {
    /// Corrector passes after the predictor.
    pub corrector_passes: usize,
    /// Abort once `max|v|` exceeds this multiple of the data scale.
    pub growth_limit: f64,
    /// Corner tolerance, relative to `max(1, data scale)`.
    pub compatibility_tol: f64,
    /// Right-hand side `f(tau, z)` of `L v = f`.
    pub source: Option<Source>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { corrector_passes: 1, growth_limit: 1e6, compatibility_tol: 1e-8, source: None }
    }
}

impl fmt::Debug for SolverOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverOptions")
            .field("corrector_passes", &self.corrector_passes)
            .field("growth_limit", &self.growth_limit)
            .field("compatibility_tol", &self.compatibility_tol)
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl SolverOptions {
    pub fn with_source(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(f));
        self
    }
}

/// Coefficients of the inward `z`-ODE `2 W_z + c_tau W = S` on one slice.
struct Slice {
    c_zz: Vec<f64>,
    c_z: Vec<f64>,
    c_tau: Vec<f64>,
    c_v: Vec<f64>,
    source: Vec<f64>,
}

impl Slice {
    fn at(coeffs: &ModeCoefficients, tau: f64, zs: &[f64], source: Option<&Source>) -> Self {
        Self {
            c_zz: zs.iter().map(|&z| coeffs.c_zz(tau, z)).collect(),
            c_z: zs.iter().map(|&z| coeffs.c_z(tau, z)).collect(),
            c_tau: zs.iter().map(|&z| coeffs.c_tau(tau, z)).collect(),
            c_v: zs.iter().map(|&z| coeffs.c_value(tau, z)).collect(),
            source: match source {
                Some(f) => zs.iter().map(|&z| f(tau, z)).collect(),
                None => vec![0.0; zs.len()],
            },
        }
    }

    /// `S = f - (c_zz v_zz + c_z v_z + c v)`.
    fn spatial(&self, v: &[f64], dz: f64) -> Vec<f64> {
        let vz = numerics::derivative(v, dz);
        let vzz = numerics::second_derivative(v, dz);
        (0..v.len())
            .map(|j| self.source[j] - (self.c_zz[j] * vzz[j] + self.c_z[j] * vz[j] + self.c_v[j] * v[j]))
            .collect()
    }

    fn integrate(&self, s: &[f64], w_boundary: f64, dz: f64) -> Vec<f64> {
        integrate_inward(s, &self.c_tau, w_boundary, dz)
    }
}

/// Solves `2 W_z + c W = s` by the trapezoidal rule from `W(z0) = w_boundary` inward.
pub fn integrate_inward(s: &[f64], c: &[f64], w_boundary: f64, dz: f64) -> Vec<f64> {
    let n = s.len();
    let mut w = vec![0.0; n];
    w[n - 1] = w_boundary;
    let q = 0.25 * dz;
    for j in (0..n - 1).rev() {
        let rhs = w[j + 1] - q * (s[j] + s[j + 1] - c[j + 1] * w[j + 1]);
        w[j] = rhs / (1.0 - q * c[j]);
    }
    w
}

/// `v_tau` on the initial slice, from the restriction of the equation to `tau = 0`.
pub fn initial_slice_constraint(coeffs: &ModeCoefficients, phi: &[f64], psi_rate: f64, grid: &Grid) -> Result<Vec<f64>> {
    initial_slice_constraint_with(coeffs, phi, psi_rate, grid, None)
}

fn initial_slice_constraint_with(
    coeffs: &ModeCoefficients,
    phi: &[f64],
    psi_rate: f64,
    grid: &Grid,
    source: Option<&Source>,
) -> Result<Vec<f64>> {
    if phi.len() != grid.n_z {
        return Err(Error::Shape(format!("phi has {} samples, grid has {} z-nodes", phi.len(), grid.n_z)));
    }
    let slice = Slice::at(coeffs, 0.0, &grid.zs(), source);
    let s = slice.spatial(phi, grid.dz());
    let w = slice.integrate(&s, psi_rate, grid.dz());
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Instability { step: 0, tau: 0.0, reason: "non-finite initial rate".into() });
    }
    Ok(w)
}

/// Marches one mode over the grid.
pub fn solve(coeffs: &ModeCoefficients, data: &BoundaryData, grid: Grid) -> Result<ModeField> {
    solve_with(coeffs, data, grid, &SolverOptions::default())
}

pub fn solve_with(coeffs: &ModeCoefficients, data: &BoundaryData, grid: Grid, options: &SolverOptions) -> Result<ModeField> {
    let zs = grid.zs();
    let taus = grid.taus();
    let (dt, dz) = (grid.dtau(), grid.dz());
    let phi = data.phi.sample(&zs);
    let psi = data.psi.sample(&taus);
    if phi.iter().chain(&psi).any(|x| !x.is_finite()) {
        return Err(Error::Input("boundary data are not finite on the grid".into()));
    }
    let mut scale = phi.iter().chain(&psi).fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(f) = &options.source {
        for &t in &taus {
            for &z in &zs {
                scale = scale.max(grid.t_max * f(t, z).abs());
            }
        }
    }
    check_compatibility(data, grid.z0, options.compatibility_tol * scale.max(1.0))?;
    let psi_rate = numerics::derivative(&psi, dt);

    let mut out = ModeField::zeros(0, 0, grid);
    out.l = coeffs.l;
    out.row_mut(0).copy_from_slice(&phi);
    let limit = options.growth_limit * scale.max(f64::MIN_POSITIVE);

    let mut current = phi;
    let mut next = vec![0.0; grid.n_z];
    for n in 0..grid.n_tau - 1 {
        let half = 0.5 * (taus[n] + taus[n + 1]);
        let slice = Slice::at(coeffs, half, &zs, options.source.as_ref());
        let w_boundary = 0.5 * (psi_rate[n] + psi_rate[n + 1]);
        let mut average = current.clone();
        for pass in 0..=options.corrector_passes {
            let s = slice.spatial(&average, dz);
            let w = slice.integrate(&s, w_boundary, dz);
            for j in 0..grid.n_z {
                next[j] = current[j] + dt * w[j];
            }
            if pass < options.corrector_passes {
                for j in 0..grid.n_z {
                    average[j] = 0.5 * (current[j] + next[j]);
                }
            }
        }
        if let Some(j) = next.iter().position(|x| !x.is_finite()) {
            return Err(Error::Instability {
                step: n + 1,
                tau: taus[n + 1],
                reason: format!("non-finite value at z = {}", zs[j]),
            });
        }
        let peak = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if peak > limit {
            return Err(Error::Instability {
                step: n + 1,
                tau: taus[n + 1],
                reason: format!("max|v| = {peak:e} exceeds {:e} times the data scale", options.growth_limit),
            });
        }
        out.row_mut(n + 1).copy_from_slice(&next);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Exact,
    Richardson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelReport {
    pub n_tau: usize,
    pub n_z: usize,
    /// Max-norm error against the exact solution, or against the next level.
    pub error: f64,
    /// `log2` of the ratio to the previous level's error.
    pub order: Option<f64>,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub l: u32,
    pub mode: ErrorMode,
    pub levels: Vec<LevelReport>,
    pub fitted_order: Option<f64>,
    /// Errors are at roundoff, so orders carry no information.
    pub saturated: bool,
}

impl ConvergenceReport {
    pub fn orders(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.order).collect()
    }
}

pub type ExactSolution<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

/// Solves on `levels` nested grids, each doubling the resolution of the last.
pub fn convergence_study(
    coeffs: &ModeCoefficients,
    data: &BoundaryData,
    base_grid: Grid,
    levels: usize,
    exact: Option<ExactSolution<'_>>,
    options: &SolverOptions,
) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::Input(format!("convergence study needs at least 2 levels, got {levels}")));
    }
    let mut grids = vec![base_grid];
    for _ in 1..levels {
        grids.push(grids.last().unwrap().refined());
    }
    let mut solutions = Vec::with_capacity(levels);
    let mut seconds = Vec::with_capacity(levels);
    for g in &grids {
        let start = Instant::now();
        solutions.push(solve_with(coeffs, data, *g, options)?);
        seconds.push(start.elapsed().as_secs_f64());
    }

    let (mode, errors): (ErrorMode, Vec<f64>) = match exact {
        Some(f) => (
            ErrorMode::Exact,
            solutions
                .iter()
                .map(|s| {
                    let g = s.grid;
                    let mut e = 0.0f64;
                    for n in 0..g.n_tau {
                        for j in 0..g.n_z {
                            e = e.max((s.get(n, j) - f(g.tau(n), g.z(j))).abs());
                        }
                    }
                    e
                })
                .collect(),
        ),
        None => {
            let mut errs = Vec::with_capacity(levels - 1);
            for k in 0..levels - 1 {
                let fine = solutions[k + 1].restrict_to(grids[k])?;
                let e = fine.values().iter().zip(solutions[k].values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                errs.push(e);
            }
            (ErrorMode::Richardson, errs)
        }
    };

    let scale = solutions.iter().fold(0.0f64, |m, s| m.max(s.max_abs())).max(1.0);
    let saturated = errors.iter().all(|&e| e <= 1e3 * f64::EPSILON * scale);
    let reports = errors
        .iter()
        .enumerate()
        .map(|(k, &e)| LevelReport {
            n_tau: grids[k].n_tau,
            n_z: grids[k].n_z,
            error: e,
            order: if k > 0 && !saturated && e > 0.0 { Some((errors[k - 1] / e).log2()) } else { None },
            seconds: seconds[k],
        })
        .collect();
    let fitted = numerics::fitted_order(&errors);
    Ok(ConvergenceReport {
        l: coeffs.l,
        mode,
        levels: reports,
        fitted_order: if saturated || !fitted.is_finite() { None } else { Some(fitted) },
        saturated,
    })
}

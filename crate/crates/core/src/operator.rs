//! Pointwise coefficients of `L = Box_gbar + a^i d_i + omega` and their
//! spherical-harmonic mode reduction.
//!
//! In compactified coordinates
//!
//! ```text
//! Box_gbar v = 2 v_{z tau} + z^2 V v_zz + 2 gbar^{1A} v_{zA} + gbar^{AB} v_AB
//!            + gamma^{-1/2} d_i(sqrt(gamma) gbar^{ij}) d_j v
//! ```
//!
//! The divergence term and `a^j` are stored summed per direction `j`; for
//! sampled `a^i` the split is not observable.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Point;
use crate::grid::ModeField;
use crate::metric::ReducedProblem;
use crate::numerics;

/// Assembled coefficients of the full operator, evaluated lazily.
#[derive(Debug, Clone)]
pub struct OperatorCoefficients {
    problem: Arc<ReducedProblem>,
}

impl OperatorCoefficients {
    pub fn problem(&self) -> &ReducedProblem {
        &self.problem
    }

    pub fn c_ztau(&self) -> f64 {
        2.0
    }

    pub fn c_zz(&self, p: Point) -> f64 {
        p.z * p.z * self.problem.lapse.value(p)
    }

    /// `2 gbar^{1A}`.
    pub fn c_z_angular(&self, p: Point) -> [f64; 2] {
        [2.0 * self.problem.shift[0].value(p), 2.0 * self.problem.shift[1].value(p)]
    }

    /// `gbar^{AB}`.
    pub fn c_angular(&self, p: Point) -> [[f64; 2]; 2] {
        self.problem.angular.inverse(p)
    }

    /// First-order coefficient per direction `j`:
    /// `sum_i d_i gbar^{ij} + gbar^{ij} d_i ln sqrt(gamma) + a^j`.
    pub fn c_first(&self, p: Point) -> [f64; 4] {
        let g = self.problem.inverse_metric(p);
        let dg = self.problem.inverse_metric_gradient(p);
        let dlog = self.problem.log_sqrt_gamma_gradient(p);
        let mut out = [0.0; 4];
        for (j, o) in out.iter_mut().enumerate() {
            let mut s = self.problem.lower_order[j].value(p);
            for i in 0..4 {
                s += dg[i][i][j] + g[i][j] * dlog[i];
            }
            *o = s;
        }
        out
    }

    pub fn c_0(&self, p: Point) -> f64 {
        self.problem.omega.value(p)
    }

    /// Applies `L` to a function given by its value and partial derivatives at `p`.
    /// `d1[i] = d_i v`, `d2[i][j] = d_i d_j v`.
    pub fn apply_pointwise(&self, p: Point, value: f64, d1: [f64; 4], d2: [[f64; 4]; 4]) -> f64 {
        let g = self.problem.inverse_metric(p);
        let c1 = self.c_first(p);
        let mut s = self.c_0(p) * value;
        for i in 0..4 {
            s += c1[i] * d1[i];
            for j in 0..4 {
                s += g[i][j] * d2[i][j];
            }
        }
        s
    }
}

pub fn assemble(problem: &ReducedProblem) -> Result<OperatorCoefficients> {
    Ok(OperatorCoefficients { problem: Arc::new(problem.clone()) })
}

type Coefficient = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Exact z-polynomial coefficients of a static mode equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSeries {
    pub zz: Vec<f64>,
    pub z: Vec<f64>,
    pub tau: Vec<f64>,
    pub zeroth: Vec<f64>,
}

/// The 1+1 equation
/// `2 v_{z tau} + c_zz v_zz + c_z v_z + c_tau v_tau + (c_0 - l(l+1) s) v = f`.
#[derive(Clone)]
pub struct ModeCoefficients {
    pub l: u32,
    /// Scale `s` of the angular Laplacian; 1 for the round sphere.
    pub angular_scale: f64,
    c_zz: Coefficient,
    c_z: Coefficient,
    c_tau: Coefficient,
    c_0: Coefficient,
    tau_independent: bool,
    series: Option<ModeSeries>,
}

impl fmt::Debug for ModeCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModeCoefficients")
            .field("l", &self.l)
            .field("tau_independent", &self.tau_independent)
            .field("series", &self.series)
            .finish()
    }
}

impl ModeCoefficients {
    /// Hand-assembled mode coefficients.
    pub fn new(
        l: u32,
        c_zz: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        c_z: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        c_tau: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        c_0: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        tau_independent: bool,
    ) -> Self {
        Self {
            l,
            angular_scale: 1.0,
            c_zz: Arc::new(c_zz),
            c_z: Arc::new(c_z),
            c_tau: Arc::new(c_tau),
            c_0: Arc::new(c_0),
            tau_independent,
            series: None,
        }
    }

    /// Mode coefficients given exactly by z-polynomials.
    pub fn from_series(l: u32, series: ModeSeries) -> Self {
        let ev = |c: Vec<f64>| -> Coefficient { Arc::new(move |_t, z| c.iter().rev().fold(0.0, |acc, x| acc * z + x)) };
        Self {
            l,
            angular_scale: 1.0,
            c_zz: ev(series.zz.clone()),
            c_z: ev(series.z.clone()),
            c_tau: ev(series.tau.clone()),
            c_0: ev(series.zeroth.clone()),
            tau_independent: true,
            series: Some(series),
        }
    }

    pub fn with_l(&self, l: u32) -> Self {
        Self { l, ..self.clone() }
    }

    pub fn c_zz(&self, tau: f64, z: f64) -> f64 {
        (self.c_zz)(tau, z)
    }
    pub fn c_z(&self, tau: f64, z: f64) -> f64 {
        (self.c_z)(tau, z)
    }
    pub fn c_tau(&self, tau: f64, z: f64) -> f64 {
        (self.c_tau)(tau, z)
    }
    pub fn c_0(&self, tau: f64, z: f64) -> f64 {
        (self.c_0)(tau, z)
    }

    /// `c_0 - l(l+1) s`.
    pub fn c_value(&self, tau: f64, z: f64) -> f64 {
        self.c_0(tau, z) - self.eigenvalue()
    }

    /// `l(l+1) s`.
    pub fn eigenvalue(&self) -> f64 {
        (self.l * (self.l + 1)) as f64 * self.angular_scale
    }

    pub fn is_tau_independent(&self) -> bool {
        self.tau_independent
    }

    pub fn series(&self) -> Option<&ModeSeries> {
        self.series.as_ref()
    }
}

/// Replaces the angular operator by `-l(l+1)` on a mode-decoupled problem.
pub fn mode_reduce(coeffs: &OperatorCoefficients, l: u32) -> Result<ModeCoefficients> {
    let problem = coeffs.problem();
    if !problem.mode_decoupled {
        return Err(Error::UnsupportedClass(
            "mode reduction needs eta = 0, U^A = 0, round h and angle-independent coefficients".into(),
        ));
    }

    let series = (|| {
        let lapse = problem.lapse.z_series()?;
        let a0 = problem.lower_order[0].z_series()?;
        let a1 = problem.lower_order[1].z_series()?;
        let omega = problem.omega.z_series()?;
        let mut zz = vec![0.0, 0.0];
        zz.extend(&lapse);
        // d_z(z^2 V) + a^1
        let mut z: Vec<f64> = zz.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        for (k, c) in a1.iter().enumerate() {
            if k < z.len() {
                z[k] += c;
            } else {
                z.push(*c);
            }
        }
        Some(ModeSeries { zz, z, tau: a0, zeroth: omega })
    })();

    if let Some(series) = series {
        return Ok(ModeCoefficients::from_series(l, series));
    }

    let tau_independent = problem.lapse.is_tau_independent()
        && problem.lower_order[0].is_tau_independent()
        && problem.lower_order[1].is_tau_independent()
        && problem.omega.is_tau_independent();
    let (c1, c2, c3, c4) = (coeffs.clone(), coeffs.clone(), coeffs.clone(), coeffs.clone());
    Ok(ModeCoefficients::new(
        l,
        move |t, z| c1.c_zz(Point::equatorial(t, z)),
        move |t, z| c2.c_first(Point::equatorial(t, z))[1],
        move |t, z| c3.c_first(Point::equatorial(t, z))[0],
        move |t, z| c4.c_0(Point::equatorial(t, z)),
        tau_independent,
    ))
}

/// Residual `L v - f` with second-order differences.
///
/// Interior `z` nodes use centered stencils and the `z` endpoints one-sided
/// second-order stencils. The first and last `tau` rows are NaN.
pub fn apply(coeffs: &ModeCoefficients, field: &ModeField) -> Result<ModeField> {
    apply_with_source(coeffs, field, &|_, _| 0.0)
}

pub fn apply_with_source(
    coeffs: &ModeCoefficients,
    field: &ModeField,
    source: &dyn Fn(f64, f64) -> f64,
) -> Result<ModeField> {
    let g = field.grid;
    if g.n_tau < 3 || g.n_z < 3 {
        return Err(Error::Shape(format!("residual needs at least 3x3 nodes, got {}x{}", g.n_tau, g.n_z)));
    }
    if field.l != coeffs.l {
        return Err(Error::Shape(format!("field has l = {}, coefficients l = {}", field.l, coeffs.l)));
    }
    let (dt, dz) = (g.dtau(), g.dz());
    let mut out = ModeField::zeros(field.l, field.m, g);
    for j in 0..g.n_z {
        out.set(0, j, f64::NAN);
        out.set(g.n_tau - 1, j, f64::NAN);
    }
    for n in 1..g.n_tau - 1 {
        let tau = g.tau(n);
        let row = field.row(n);
        let vz = numerics::derivative(row, dz);
        let vzz = numerics::second_derivative(row, dz);
        let vz_next = numerics::derivative(field.row(n + 1), dz);
        let vz_prev = numerics::derivative(field.row(n - 1), dz);
        for j in 0..g.n_z {
            let z = g.z(j);
            let vt = (field.get(n + 1, j) - field.get(n - 1, j)) / (2.0 * dt);
            let vzt = (vz_next[j] - vz_prev[j]) / (2.0 * dt);
            let r = 2.0 * vzt
                + coeffs.c_zz(tau, z) * vzz[j]
                + coeffs.c_z(tau, z) * vz[j]
                + coeffs.c_tau(tau, z) * vt
                + coeffs.c_value(tau, z) * row[j]
                - source(tau, z);
            out.set(n, j, r);
        }
    }
    Ok(out)
}

/// Max absolute value over the finite entries of a residual field.
pub fn residual_max(residual: &ModeField) -> f64 {
    residual.values().iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
}

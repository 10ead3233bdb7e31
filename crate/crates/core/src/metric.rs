//! Bondi–Sachs backgrounds in compactified coordinates and their conformal
//! reduction to the main equation
//!
//! ```text
//!     Box_gbar v + a^i d_i v + omega v = 0,   gbar = e^{-2 eta} z^2 g.
//! ```
//!
//! All data live on `[0, T] x [0, z0] x S^2` with `z = 1/r`; radii never appear.

use std::f64::consts::{FRAC_PI_4, PI};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Assumption, Error, Result};
use crate::field::{self, Field, Point, SampledField, SinSquaredTheta, ZTimesDz};

/// Coordinate patch on the sphere used for sampling: `theta` in this range.
pub const THETA_CHART: (f64, f64) = (FRAC_PI_4, 3.0 * FRAC_PI_4);

pub const LAPSE_MIN: f64 = 0.5;
pub const LAPSE_MAX: f64 = 1.5;

/// Tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for identities involving interpolated user fields.
pub const INTERPOLATED_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    /// Retarded-time extent `T`.
    pub t_max: f64,
    /// Inner boundary `z0 = 1/R`.
    pub z0: f64,
}

impl Domain {
    pub fn new(t_max: f64, z0: f64) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::Domain(format!("time extent must be positive, got {t_max}")));
        }
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(Error::Domain(format!("inner radius z0 must be positive, got {z0}")));
        }
        Ok(Self { t_max, z0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Spherical,
    Axisymmetric,
    General,
}

/// Symmetric 2x2 angular metric `h_AB` in `(theta, phi)` components.
#[derive(Debug, Clone)]
pub struct AngularMetric {
    pub h22: Field,
    pub h23: Field,
    pub h33: Field,
    round: bool,
}

impl AngularMetric {
    pub fn new(h22: Field, h23: Field, h33: Field) -> Self {
        Self { h22, h23, h33, round: false }
    }

    /// The unit round metric `d theta^2 + sin^2 theta d phi^2`.
    pub fn round() -> Self {
        Self { h22: field::constant(1.0), h23: field::zero(), h33: Arc::new(SinSquaredTheta), round: true }
    }

    pub fn matrix(&self, p: Point) -> [[f64; 2]; 2] {
        let a = self.h22.value(p);
        let b = self.h23.value(p);
        let c = self.h33.value(p);
        [[a, b], [b, c]]
    }

    pub fn det(&self, p: Point) -> f64 {
        let m = self.matrix(p);
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self, p: Point) -> [[f64; 2]; 2] {
        let m = self.matrix(p);
        let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
    }

    /// `d_mu h_AB` indexed `[mu][A][B]`.
    pub fn gradient(&self, p: Point) -> [[[f64; 2]; 2]; 4] {
        let a = self.h22.gradient(p);
        let b = self.h23.gradient(p);
        let c = self.h33.gradient(p);
        let mut out = [[[0.0; 2]; 2]; 4];
        for mu in 0..4 {
            out[mu] = [[a[mu], b[mu]], [b[mu], c[mu]]];
        }
        out
    }

    /// Eigenvalues (ascending) of `h_AB` at `p`.
    pub fn eigenvalues(&self, p: Point) -> (f64, f64) {
        let m = self.matrix(p);
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[0][1];
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        (0.5 * tr - disc, 0.5 * tr + disc)
    }

    pub fn is_round(&self) -> bool {
        self.round
    }

    fn scaled(&self, factor: Field) -> Self {
        let scale = |f: &Field| -> Field {
            let f = f.clone();
            let factor = factor.clone();
            Arc::new(field::FnField::new("e^{-2eta} h", move |p| (-2.0 * factor.value(p)).exp() * f.value(p)))
        };
        Self::new(scale(&self.h22), scale(&self.h23), scale(&self.h33))
    }
}

/// The background fields `V, eta, U^A, h_AB`.
#[derive(Debug, Clone)]
pub struct BondiSachsMetric {
    pub lapse: Field,
    pub eta: Field,
    pub shift: [Field; 2],
    pub angular: AngularMetric,
    pub symmetry: Symmetry,
    pub domain: Domain,
}

pub fn make_minkowski(t_max: f64, z0: f64) -> Result<BondiSachsMetric> {
    let domain = Domain::new(t_max, z0)?;
    Ok(BondiSachsMetric {
        lapse: field::constant(1.0),
        eta: field::zero(),
        shift: [field::zero(), field::zero()],
        angular: AngularMetric::round(),
        symmetry: Symmetry::Spherical,
        domain,
    })
}

/// Schwarzschild in retarded Bondi coordinates: `V = 1 - 2 M z`.
pub fn make_schwarzschild(mass: f64, t_max: f64, z0: f64) -> Result<BondiSachsMetric> {
    let domain = Domain::new(t_max, z0)?;
    if !mass.is_finite() || mass < 0.0 {
        return Err(Error::Domain(format!("mass must be non-negative, got {mass}")));
    }
    let v_min = 1.0 - 2.0 * mass * z0;
    if v_min < LAPSE_MIN {
        return Err(Error::AssumptionViolation {
            assumption: Assumption::LapseBounds,
            detail: format!("V = 1 - 2Mz reaches {v_min} < 1/2 at z = {z0} (M = {mass})"),
        });
    }
    let lapse = if mass == 0.0 { field::constant(1.0) } else { field::z_polynomial(vec![1.0, -2.0 * mass]) };
    Ok(BondiSachsMetric {
        lapse,
        eta: field::zero(),
        shift: [field::zero(), field::zero()],
        angular: AngularMetric::round(),
        symmetry: Symmetry::Spherical,
        domain,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub assumption: String,
    pub magnitude: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub lapse_min: f64,
    pub lapse_max: f64,
    /// `min(V_min - 1/2, 3/2 - V_max)`; negative when violated.
    pub lapse_margin: f64,
    /// Certified ellipticity bounds over the sampled chart.
    pub lambda: f64,
    pub lambda_upper: f64,
    /// `max |det h(tau, z) - det h(0, z0)|` per angular sample.
    pub det_h_variation: f64,
    /// Decay defects at the smallest sampled `z`.
    pub lapse_decay: f64,
    pub shift_decay: f64,
    pub angular_decay: f64,
    pub eta_decay: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_error(&self) -> Option<Error> {
        self.violations.first().map(|v| Error::AssumptionViolation {
            assumption: match v.assumption.as_str() {
                "lapse" => Assumption::LapseBounds,
                "ellipticity" => Assumption::AngularEllipticity,
                "static-volume" => Assumption::StaticAngularVolume,
                _ => Assumption::AsymptoticFlatness,
            },
            detail: v.detail.clone(),
        })
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Samples the closed domain on a `density^4` lattice and reports assumption defects.
pub fn validate_asymptotics(metric: &BondiSachsMetric, sample_density: usize, tol: f64) -> ValidationReport {
    let n = sample_density.max(2);
    let taus = linspace(0.0, metric.domain.t_max, n);
    let zs = linspace(0.0, metric.domain.z0, n);
    let thetas = linspace(THETA_CHART.0, THETA_CHART.1, n);
    let phis: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();

    let mut lapse_min = f64::INFINITY;
    let mut lapse_max = f64::NEG_INFINITY;
    let mut lambda = f64::INFINITY;
    let mut lambda_upper = f64::NEG_INFINITY;
    let mut det_var: f64 = 0.0;
    let mut lapse_decay: f64 = 0.0;
    let mut shift_decay: f64 = 0.0;
    let mut angular_decay: f64 = 0.0;
    let mut eta_decay: f64 = 0.0;
    let round = AngularMetric::round();
    let z_small = zs[0];
    let mut samples = 0;

    for &theta in &thetas {
        for &phi in &phis {
            let reference = metric.angular.det(Point::new(0.0, metric.domain.z0, theta, phi));
            for &tau in &taus {
                for &z in &zs {
                    let p = Point::new(tau, z, theta, phi);
                    samples += 1;
                    let v = metric.lapse.value(p);
                    lapse_min = lapse_min.min(v);
                    lapse_max = lapse_max.max(v);
                    let (e0, e1) = metric.angular.eigenvalues(p);
                    lambda = lambda.min(e0);
                    lambda_upper = lambda_upper.max(e1);
                    det_var = det_var.max((metric.angular.det(p) - reference).abs());
                    if z == z_small {
                        lapse_decay = lapse_decay.max((v - 1.0).abs());
                        shift_decay = shift_decay
                            .max(metric.shift[0].value(p).abs())
                            .max(metric.shift[1].value(p).abs());
                        eta_decay = eta_decay.max(metric.eta.value(p).abs());
                        let h = metric.angular.matrix(p);
                        let r = round.matrix(p);
                        for a in 0..2 {
                            for b in 0..2 {
                                angular_decay = angular_decay.max((h[a][b] - r[a][b]).abs());
                            }
                        }
                    }
                }
            }
        }
    }

    let lapse_margin = (lapse_min - LAPSE_MIN).min(LAPSE_MAX - lapse_max);
    let mut violations = Vec::new();
    if lapse_margin < -tol {
        violations.push(Violation {
            assumption: "lapse".into(),
            magnitude: -lapse_margin,
            detail: format!("{}: sampled V in [{lapse_min}, {lapse_max}]", Assumption::LapseBounds),
        });
    }
    if lambda <= tol {
        violations.push(Violation {
            assumption: "ellipticity".into(),
            magnitude: -lambda,
            detail: format!("{}: smallest eigenvalue {lambda}", Assumption::AngularEllipticity),
        });
    }
    if det_var > tol {
        violations.push(Violation {
            assumption: "static-volume".into(),
            magnitude: det_var,
            detail: format!("{}: variation {det_var:e}", Assumption::StaticAngularVolume),
        });
    }
    for (name, defect) in [("lapse-decay", lapse_decay), ("shift-decay", shift_decay), ("angular-decay", angular_decay), ("eta-decay", eta_decay)] {
        if defect > tol {
            violations.push(Violation {
                assumption: name.into(),
                magnitude: defect,
                detail: format!("asymptotic flatness defect {defect:e} at z = {z_small}"),
            });
        }
    }

    ValidationReport {
        samples,
        lapse_min,
        lapse_max,
        lapse_margin,
        lambda,
        lambda_upper,
        det_h_variation: det_var,
        lapse_decay,
        shift_decay,
        angular_decay,
        eta_decay,
        violations,
    }
}

/// Coefficients of the main equation on the compactified domain.
///
/// `gbar^{01} = 1`, `gbar^{11} = z^2 V`, `gbar^{1A} = U^A`, `gbar^{AB} = htilde^{AB}`,
/// with `htilde = e^{-2 eta} h` and `gamma = det(htilde)`.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub domain: Domain,
    pub lapse: Field,
    pub shift: [Field; 2],
    pub angular: AngularMetric,
    /// `a^i`, `i = 0..4` (tau, z, theta, phi).
    pub lower_order: [Field; 4],
    pub omega: Field,
    /// `(lambda, Lambda)` ellipticity bounds of `htilde` over the chart.
    pub bounds: (f64, f64),
    pub mode_decoupled: bool,
}

impl ReducedProblem {
    /// Builds a problem from user-supplied coefficients; `bounds` are certified by sampling.
    pub fn from_parts(
        domain: Domain,
        lapse: Field,
        shift: [Field; 2],
        angular: AngularMetric,
        lower_order: [Field; 4],
        omega: Field,
    ) -> Self {
        let bounds = sample_bounds(&angular, domain, 6);
        let mode_decoupled = shift.iter().all(|u| u.is_zero())
            && angular.is_round()
            && lapse.is_angle_independent()
            && lower_order[2].is_zero()
            && lower_order[3].is_zero()
            && lower_order[0].is_angle_independent()
            && lower_order[1].is_angle_independent()
            && omega.is_angle_independent();
        Self { domain, lapse, shift, angular, lower_order, omega, bounds, mode_decoupled }
    }

    pub fn sqrt_gamma(&self, p: Point) -> f64 {
        self.angular.det(p).sqrt()
    }

    /// `gbar^{ij}` at `p`.
    pub fn inverse_metric(&self, p: Point) -> [[f64; 4]; 4] {
        let v = self.lapse.value(p);
        let u = [self.shift[0].value(p), self.shift[1].value(p)];
        let hinv = self.angular.inverse(p);
        let mut g = [[0.0; 4]; 4];
        g[0][1] = 1.0;
        g[1][0] = 1.0;
        g[1][1] = p.z * p.z * v;
        for a in 0..2 {
            g[1][a + 2] = u[a];
            g[a + 2][1] = u[a];
            for b in 0..2 {
                g[a + 2][b + 2] = hinv[a][b];
            }
        }
        g
    }

    /// `gbar_{ij}` at `p`.
    pub fn metric(&self, p: Point) -> [[f64; 4]; 4] {
        let v = self.lapse.value(p);
        let u = [self.shift[0].value(p), self.shift[1].value(p)];
        let h = self.angular.matrix(p);
        let mut g = [[0.0; 4]; 4];
        let mut huu = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                huu += h[a][b] * u[a] * u[b];
            }
        }
        g[0][0] = -p.z * p.z * v + huu;
        g[0][1] = 1.0;
        g[1][0] = 1.0;
        for a in 0..2 {
            let hu: f64 = (0..2).map(|b| h[a][b] * u[b]).sum();
            g[0][a + 2] = -hu;
            g[a + 2][0] = -hu;
            for b in 0..2 {
                g[a + 2][b + 2] = h[a][b];
            }
        }
        g
    }

    /// `d_mu gbar^{ab}` indexed `[mu][a][b]`.
    pub fn inverse_metric_gradient(&self, p: Point) -> [[[f64; 4]; 4]; 4] {
        let v = self.lapse.value(p);
        let dv = self.lapse.gradient(p);
        let du = [self.shift[0].gradient(p), self.shift[1].gradient(p)];
        let hinv = self.angular.inverse(p);
        let dh = self.angular.gradient(p);
        let mut out = [[[0.0; 4]; 4]; 4];
        for mu in 0..4 {
            let mut d = [[0.0; 4]; 4];
            d[1][1] = p.z * p.z * dv[mu] + if mu == 1 { 2.0 * p.z * v } else { 0.0 };
            for a in 0..2 {
                d[1][a + 2] = du[a][mu];
                d[a + 2][1] = du[a][mu];
            }
            // d(h^{-1}) = -h^{-1} (dh) h^{-1}
            for a in 0..2 {
                for b in 0..2 {
                    let mut s = 0.0;
                    for c in 0..2 {
                        for e in 0..2 {
                            s -= hinv[a][c] * dh[mu][c][e] * hinv[e][b];
                        }
                    }
                    d[a + 2][b + 2] = s;
                }
            }
            out[mu] = d;
        }
        out
    }

    /// `d_mu ln sqrt(gamma)`.
    pub fn log_sqrt_gamma_gradient(&self, p: Point) -> [f64; 4] {
        let hinv = self.angular.inverse(p);
        let dh = self.angular.gradient(p);
        let mut out = [0.0; 4];
        for (mu, o) in out.iter_mut().enumerate() {
            let mut tr = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    tr += hinv[a][b] * dh[mu][b][a];
                }
            }
            *o = 0.5 * tr;
        }
        out
    }

    /// `sup |gbar^{1A}|` over a sampling lattice.
    pub fn shift_sup(&self, density: usize) -> f64 {
        if self.shift.iter().all(|u| u.is_zero()) {
            return 0.0;
        }
        let n = density.max(2);
        let mut sup: f64 = 0.0;
        for tau in linspace(0.0, self.domain.t_max, n) {
            for z in linspace(0.0, self.domain.z0, n) {
                for theta in linspace(THETA_CHART.0, THETA_CHART.1, n) {
                    for k in 0..n {
                        let p = Point::new(tau, z, theta, 2.0 * PI * k as f64 / n as f64);
                        let u = [self.shift[0].value(p), self.shift[1].value(p)];
                        sup = sup.max((u[0] * u[0] + u[1] * u[1]).sqrt());
                    }
                }
            }
        }
        sup
    }
}

fn sample_bounds(angular: &AngularMetric, domain: Domain, n: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for tau in linspace(0.0, domain.t_max, n) {
        for z in linspace(0.0, domain.z0, n) {
            for theta in linspace(THETA_CHART.0, THETA_CHART.1, n) {
                for k in 0..n {
                    let p = Point::new(tau, z, theta, 2.0 * PI * k as f64 / n as f64);
                    let (a, b) = angular.eigenvalues(p);
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
            }
        }
    }
    (lo, hi)
}

/// Reduces a Bondi–Sachs metric to the main equation for `v = u / z`.
///
/// Supported class: `eta = 0`, `U^A = 0`. Then `a^i = 0` and
/// `omega = z^{-3} Box_g z = z d_z V`; for Schwarzschild this is `-2 M z`.
pub fn conformal_reduce(metric: &BondiSachsMetric) -> Result<ReducedProblem> {
    let report = validate_asymptotics(metric, 5, INTERPOLATED_TOL);
    if let Some(v) = report.violations.iter().find(|v| v.assumption == "lapse" || v.assumption == "ellipticity") {
        return Err(Error::AssumptionViolation {
            assumption: if v.assumption == "lapse" { Assumption::LapseBounds } else { Assumption::AngularEllipticity },
            detail: v.detail.clone(),
        });
    }
    if !metric.eta.is_zero() {
        return Err(Error::UnsupportedClass(
            "eta must vanish identically; supply a^i and omega through ReducedProblem::from_parts".into(),
        ));
    }
    if metric.shift.iter().any(|u| !u.is_zero()) {
        return Err(Error::UnsupportedClass(
            "U^A must vanish identically; supply a^i and omega through ReducedProblem::from_parts".into(),
        ));
    }

    let omega: Field = match metric.lapse.z_series() {
        Some(c) => {
            let coeffs: Vec<f64> = c.iter().enumerate().map(|(k, ck)| k as f64 * ck).collect();
            field::z_polynomial(coeffs)
        }
        None => Arc::new(ZTimesDz(metric.lapse.clone())),
    };
    // eta = 0 so htilde = h; keep the scaling path for when eta is supplied.
    let angular = if metric.eta.is_zero() { metric.angular.clone() } else { metric.angular.scaled(metric.eta.clone()) };

    Ok(ReducedProblem::from_parts(
        metric.domain,
        metric.lapse.clone(),
        [field::zero(), field::zero()],
        angular,
        [field::zero(), field::zero(), field::zero(), field::zero()],
        omega,
    ))
}

/// On-disk metric data: angle-independent `V(tau, z)` and optional `a^0`, `a^1`, `omega`.
///
/// ```json
/// { "tau": [0.0, ...], "z": [0.0, ...], "angular": "spherical",
///   "V": [[...], ...], "a0": [[...]], "a1": [[...]], "omega": [[...]] }
/// ```
/// Arrays are indexed `[tau_index][z_index]`. Axes must start at 0 and be increasing;
/// `T` and `z0` are taken from their last entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricFile {
    pub tau: Vec<f64>,
    pub z: Vec<f64>,
    #[serde(default = "spherical")]
    pub angular: Symmetry,
    #[serde(rename = "V")]
    pub lapse: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<Vec<f64>>>,
}

fn spherical() -> Symmetry {
    Symmetry::Spherical
}

impl MetricFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn sampled(&self, rows: &[Vec<f64>], name: &str) -> Result<Field> {
        if rows.len() != self.tau.len() || rows.iter().any(|r| r.len() != self.z.len()) {
            return Err(Error::Shape(format!("{name} must be {}x{}", self.tau.len(), self.z.len())));
        }
        let values = rows.iter().flatten().copied().collect();
        Ok(Arc::new(SampledField::new(self.tau.clone(), self.z.clone(), values)?))
    }

    pub fn metric(&self) -> Result<BondiSachsMetric> {
        if self.angular != Symmetry::Spherical {
            return Err(Error::UnsupportedClass("metric files carry angle-independent data only".into()));
        }
        if self.tau.first() != Some(&0.0) || self.z.first() != Some(&0.0) {
            return Err(Error::Input("metric file axes must start at tau = 0 and z = 0".into()));
        }
        let t_max = *self.tau.last().unwrap_or(&0.0);
        let z0 = *self.z.last().unwrap_or(&0.0);
        Ok(BondiSachsMetric {
            lapse: self.sampled(&self.lapse, "V")?,
            eta: field::zero(),
            shift: [field::zero(), field::zero()],
            angular: AngularMetric::round(),
            symmetry: Symmetry::Spherical,
            domain: Domain::new(t_max, z0)?,
        })
    }

    /// Reduces the sampled metric, replacing `a^0`, `a^1`, `omega` by supplied arrays.
    pub fn reduced_problem(&self) -> Result<ReducedProblem> {
        let mut problem = conformal_reduce(&self.metric()?)?;
        let mut lower = problem.lower_order.clone();
        if let Some(a0) = &self.a0 {
            lower[0] = self.sampled(a0, "a0")?;
        }
        if let Some(a1) = &self.a1 {
            lower[1] = self.sampled(a1, "a1")?;
        }
        let omega = match &self.omega {
            Some(w) => self.sampled(w, "omega")?,
            None => problem.omega.clone(),
        };
        problem = ReducedProblem::from_parts(
            problem.domain,
            problem.lapse.clone(),
            problem.shift.clone(),
            problem.angular.clone(),
            lower,
            omega,
        );
        Ok(problem)
    }
}

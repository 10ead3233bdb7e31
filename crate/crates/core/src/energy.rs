//! Null frames, the energy-momentum tensor and weighted energy audits.
//!
//! Pointwise quantities act on the full problem. Audits act on a solved mode
//! `v(tau, z) Y_lm` with normalized `Y_lm`, so after integrating over the
//! sphere `gbar^{AB} d_A v d_B v` becomes `l(l+1) v^2` and mixed angular terms
//! drop out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Point;
use crate::grid::{Grid, ModeField};
use crate::metric::{ReducedProblem, THETA_CHART};
use crate::numerics;
use crate::solver::BoundaryData;

/// Rate constant of the excision curve `z(tau) = eps / (1 - 3/4 tau eps)`.
pub const CURVE_RATE: f64 = 0.75;

/// Most doublings of `l` attempted by the bulk certificate.
pub const ESCALATION_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameVectors {
    pub n1: [f64; 4],
    pub n2: [f64; 4],
}

/// `N1 = -d_z`, `N2 = d_tau + 1/2 z^2 V d_z + gbar^{1A} d_A`.
pub fn frame_vectors(problem: &ReducedProblem, p: Point) -> FrameVectors {
    let v = problem.lapse.value(p);
    FrameVectors {
        n1: [0.0, -1.0, 0.0, 0.0],
        n2: [1.0, 0.5 * p.z * p.z * v, problem.shift[0].value(p), problem.shift[1].value(p)],
    }
}

/// `g(x, y)` for a lowered metric `g`.
pub fn inner(g: &[[f64; 4]; 4], x: [f64; 4], y: [f64; 4]) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += g[a][b] * x[a] * y[b];
        }
    }
    s
}

/// `gbar^{ab} d_a phi d_b phi`.
pub fn gradient_norm(problem: &ReducedProblem, p: Point, d: [f64; 4]) -> f64 {
    inner(&problem.inverse_metric(p), d, d)
}

/// `Q(X, Y)` for `X = a1 N1 + a2 N2`, `Y = a3 N1 + a4 N2`.
pub fn q_tensor(
    gradient: [f64; 4],
    value: f64,
    x: (f64, f64),
    y: (f64, f64),
    problem: &ReducedProblem,
    p: Point,
) -> f64 {
    let (a1, a2) = x;
    let (a3, a4) = y;
    let frame = frame_vectors(problem, p);
    let n2v: f64 = (0..4).map(|i| frame.n2[i] * gradient[i]).sum();
    let hinv = problem.angular.inverse(p);
    let ang = angular_square(&hinv, gradient);
    a1 * a3 * gradient[1] * gradient[1] + a2 * a4 * n2v * n2v + (a1 * a4 + a2 * a3) * (0.5 * ang + value * value)
}

fn angular_square(hinv: &[[f64; 2]; 2], d: [f64; 4]) -> f64 {
    let mut s = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            s += hinv[a][b] * d[a + 2] * d[b + 2];
        }
    }
    s
}

/// `Q(X, Y) = (X phi)(Y phi) - 1/2 g(X, Y) |grad phi|^2 - g(X, Y) phi^2` for arbitrary vectors.
pub fn q_general(gradient: [f64; 4], value: f64, x: [f64; 4], y: [f64; 4], problem: &ReducedProblem, p: Point) -> f64 {
    let g = problem.metric(p);
    let xphi: f64 = (0..4).map(|i| x[i] * gradient[i]).sum();
    let yphi: f64 = (0..4).map(|i| y[i] * gradient[i]).sum();
    let gxy = inner(&g, x, y);
    xphi * yphi - gxy * (0.5 * gradient_norm(problem, p, gradient) + value * value)
}

/// `Q_{ab}` with lowered indices.
pub fn q_lower(gradient: [f64; 4], value: f64, problem: &ReducedProblem, p: Point) -> [[f64; 4]; 4] {
    let g = problem.metric(p);
    let s = 0.5 * gradient_norm(problem, p, gradient) + value * value;
    let mut q = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            q[a][b] = gradient[a] * gradient[b] - g[a][b] * s;
        }
    }
    q
}

/// A vector field with coordinate Jacobian `[mu][beta] = d_mu X^beta`.
pub trait VectorField {
    fn value(&self, p: Point) -> [f64; 4];
    fn jacobian(&self, p: Point) -> [[f64; 4]; 4];
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantVector(pub [f64; 4]);

impl VectorField for ConstantVector {
    fn value(&self, _p: Point) -> [f64; 4] {
        self.0
    }
    fn jacobian(&self, _p: Point) -> [[f64; 4]; 4] {
        [[0.0; 4]; 4]
    }
}

/// The multiplier `Y = m N1 + N2`.
#[derive(Debug, Clone, Copy)]
pub struct Multiplier<'a> {
    pub problem: &'a ReducedProblem,
    pub m: f64,
}

impl VectorField for Multiplier<'_> {
    fn value(&self, p: Point) -> [f64; 4] {
        let f = frame_vectors(self.problem, p);
        [f.n2[0], f.n2[1] - self.m, f.n2[2], f.n2[3]]
    }

    fn jacobian(&self, p: Point) -> [[f64; 4]; 4] {
        let v = self.problem.lapse.value(p);
        let dv = self.problem.lapse.gradient(p);
        let du = [self.problem.shift[0].gradient(p), self.problem.shift[1].gradient(p)];
        let mut j = [[0.0; 4]; 4];
        for mu in 0..4 {
            j[mu][1] = 0.5 * p.z * p.z * dv[mu] + if mu == 1 { p.z * v } else { 0.0 };
            j[mu][2] = du[0][mu];
            j[mu][3] = du[1][mu];
        }
        j
    }
}

/// `pi^{ab} = gbar^{a mu} d_mu X^b + gbar^{b mu} d_mu X^a - X(gbar^{ab})`.
pub fn deformation_tensor(x: &dyn VectorField, problem: &ReducedProblem, p: Point) -> [[f64; 4]; 4] {
    let g = problem.inverse_metric(p);
    let dg = problem.inverse_metric_gradient(p);
    let xv = x.value(p);
    let jac = x.jacobian(p);
    let mut pi = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut s = 0.0;
            for mu in 0..4 {
                s += g[a][mu] * jac[mu][b] + g[b][mu] * jac[mu][a] - xv[mu] * dg[mu][a][b];
            }
            pi[a][b] = s;
        }
    }
    pi
}

/// Weights `h = exp(-p tau + q z)` and multiplier `Y = m N1 + N2`, with `p = l q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub l: f64,
}

impl EnergyWeights {
    pub fn new(m: f64, q: f64, l: f64) -> Result<Self> {
        if !(m > 0.0 && q > 0.0 && l >= 0.0) || !(m.is_finite() && q.is_finite() && l.is_finite()) {
            return Err(Error::Input(format!("weights need m, q > 0 and l >= 0 (m = {m}, q = {q}, l = {l})")));
        }
        Ok(Self { m, p: l * q, q, l })
    }

    /// `m = 4 (1 + sup|gbar^{1A}|)^2`, `q = 4`, `l = 8`.
    pub fn defaults(problem: &ReducedProblem) -> Self {
        let u = problem.shift_sup(5);
        Self::new(4.0 * (1.0 + u).powi(2), 4.0, 8.0).expect("default weights are positive")
    }

    pub fn with_l(&self, l: f64) -> Self {
        Self { p: l * self.q, l, ..*self }
    }

    pub fn with_m(&self, m: f64) -> Self {
        Self { m, ..*self }
    }

    pub fn h(&self, tau: f64, z: f64) -> f64 {
        (-self.p * tau + self.q * z).exp()
    }

    /// `grad w` for `w = -p tau + q z`.
    pub fn grad_w(&self, problem: &ReducedProblem, p: Point) -> [f64; 4] {
        let g = problem.inverse_metric(p);
        let mut out = [0.0; 4];
        for (a, o) in out.iter_mut().enumerate() {
            *o = -self.p * g[a][0] + self.q * g[a][1];
        }
        out
    }
}

/// Matrix of `Q(grad w, Y) - q/2 [v_tau^2 + v_z^2 + gbar^{AB} v_A v_B + v^2]` in
/// the variables `(v_tau, v_z, v_theta, v_phi, v)`.
pub fn bulk_form(problem: &ReducedProblem, weights: &EnergyWeights, p: Point) -> [[f64; 5]; 5] {
    let gw = weights.grad_w(problem, p);
    let y = Multiplier { problem, m: weights.m }.value(p);
    let hinv = problem.angular.inverse(p);
    let form = |xi: [f64; 5]| {
        let d = [xi[0], xi[1], xi[2], xi[3]];
        q_general(d, xi[4], gw, y, problem, p)
            - 0.5 * weights.q * (xi[0] * xi[0] + xi[1] * xi[1] + angular_square(&hinv, d) + xi[4] * xi[4])
    };
    let unit = |i: usize| {
        let mut e = [0.0; 5];
        e[i] = 1.0;
        e
    };
    let mut m = [[0.0; 5]; 5];
    for i in 0..5 {
        m[i][i] = form(unit(i));
        for j in 0..i {
            let mut e = unit(i);
            e[j] = 1.0;
            let v = 0.5 * (form(e) - m[i][i] - m[j][j]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

fn min_eigenvalue(m: &[[f64; 5]; 5]) -> f64 {
    let mat = nalgebra::Matrix5::from_fn(|i, j| m[i][j]);
    nalgebra::SymmetricEigen::new(mat).eigenvalues.min()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BulkMargin {
    /// Smallest eigenvalue of the bulk form over the sample points.
    pub eigen_margin: f64,
    /// Smallest value of the form over random unit vectors.
    pub sample_margin: f64,
    pub worst: [f64; 4],
    pub samples: usize,
}

fn sample_points(problem: &ReducedProblem, samples: usize, seed: u64) -> Vec<Point> {
    let d = problem.domain;
    let mut pts = Vec::with_capacity(samples + 8);
    for &tau in &[0.0, d.t_max] {
        for &z in &[0.0, d.z0] {
            for &theta in &[THETA_CHART.0, THETA_CHART.1] {
                pts.push(Point::new(tau, z, theta, 0.0));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        pts.push(Point::new(
            rng.gen_range(0.0..=d.t_max),
            rng.gen_range(0.0..=d.z0),
            rng.gen_range(THETA_CHART.0..=THETA_CHART.1),
            rng.gen_range(0.0..std::f64::consts::TAU),
        ));
    }
    pts
}

/// Evaluates the bulk margin for fixed weights, without escalation.
pub fn bulk_margin(problem: &ReducedProblem, weights: &EnergyWeights, samples: usize, seed: u64) -> BulkMargin {
    let pts = sample_points(problem, samples, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut eigen_margin = f64::INFINITY;
    let mut sample_margin = f64::INFINITY;
    let mut worst = pts[0];
    for &pt in &pts {
        let m = bulk_form(problem, weights, pt);
        let e = min_eigenvalue(&m);
        if e < eigen_margin {
            eigen_margin = e;
            worst = pt;
        }
        let mut xi = [0.0; 5];
        for x in xi.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let norm2: f64 = xi.iter().map(|x| x * x).sum();
        if norm2 > 0.0 {
            let mut val = 0.0;
            for i in 0..5 {
                for j in 0..5 {
                    val += m[i][j] * xi[i] * xi[j];
                }
            }
            sample_margin = sample_margin.min(val / norm2);
        }
    }
    BulkMargin { eigen_margin, sample_margin, worst: worst.coords(), samples: pts.len() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub weights: EnergyWeights,
    pub escalations: usize,
    pub margin: BulkMargin,
    pub seed: u64,
}

/// Certifies the bulk estimate, doubling `l` until the margin is non-negative.
pub fn bulk_positivity_certificate(
    problem: &ReducedProblem,
    weights: &EnergyWeights,
    samples: usize,
    seed: u64,
) -> Result<Certificate> {
    let mut w = *weights;
    if w.l <= 0.0 {
        w = w.with_l(1.0);
    }
    let mut last = None;
    for escalations in 0..=ESCALATION_CAP {
        let margin = bulk_margin(problem, &w, samples, seed);
        if margin.eigen_margin >= 0.0 && margin.sample_margin >= 0.0 {
            return Ok(Certificate { weights: w, escalations, margin, seed });
        }
        last = Some(margin);
        w = w.with_l(2.0 * w.l);
    }
    let m = last.expect("at least one evaluation");
    Err(Error::CertificateFailure {
        iterations: ESCALATION_CAP,
        margin: m.eigen_margin,
        worst: format!("(tau, z, theta, phi) = {:?}", m.worst),
    })
}

/// `z(tau) = eps / (1 - 3/4 tau eps)`.
pub fn timelike_curve(epsilon: f64, tau: f64) -> Result<f64> {
    let den = 1.0 - CURVE_RATE * tau * epsilon;
    if den <= 0.0 || epsilon <= 0.0 {
        return Err(Error::Domain(format!("excision curve undefined at eps = {epsilon}, tau = {tau}")));
    }
    Ok(epsilon / den)
}

/// `z'(tau) = 3/4 z^2`.
pub fn timelike_curve_rate(z: f64) -> f64 {
    CURVE_RATE * z * z
}

/// `z' - 1/2 z^2 V = (3/4 - V/2) z^2`.
pub fn curve_margin(z: f64, lapse: f64) -> f64 {
    (CURVE_RATE - 0.5 * lapse) * z * z
}

/// First derivatives and value of a mode at one node.
#[derive(Debug, Clone, Copy, Default)]
struct ModeJet {
    v: f64,
    vt: f64,
    vz: f64,
}

/// Mode-reduced flux densities at one point with eigenvalue `ev = l(l+1)`.
#[derive(Debug, Clone, Copy)]
struct ModeFluxes {
    q_tau: f64,
    q_z: f64,
    n2v: f64,
    ang: f64,
}

fn fluxes(jet: ModeJet, z: f64, lapse: f64, m: f64, ev: f64) -> ModeFluxes {
    let ang = ev * jet.v * jet.v;
    let zz = 0.5 * z * z * lapse;
    let n2v = jet.vt + zz * jet.vz;
    let q_tau = -m * jet.vz * jet.vz - 0.5 * ang - jet.v * jet.v;
    let q_z = n2v * n2v + 0.5 * m * ang + m * jet.v * jet.v - zz * (m * jet.vz * jet.vz + 0.5 * ang + jet.v * jet.v);
    ModeFluxes { q_tau, q_z, n2v, ang }
}

/// Mode-reduced bulk integrand of the weighted divergence identity, with `L v`
/// replaced by the source.
fn bulk_density(
    problem: &ReducedProblem,
    weights: &EnergyWeights,
    jet: ModeJet,
    tau: f64,
    z: f64,
    ev: f64,
    source: f64,
) -> f64 {
    let pt = Point::equatorial(tau, z);
    let lapse = problem.lapse.value(pt);
    let zz = 0.5 * z * z * lapse;
    let f = fluxes(jet, z, lapse, weights.m, ev);
    let yv = jet.vt + (zz - weights.m) * jet.vz;

    let a1 = weights.p - weights.q * zz;
    let q_grad_w = a1 * weights.m * jet.vz * jet.vz
        + weights.q * f.n2v * f.n2v
        + (a1 + weights.q * weights.m) * (0.5 * f.ang + jet.v * jet.v);

    let pi = deformation_tensor(&Multiplier { problem, m: weights.m }, problem, pt);
    let g = problem.metric(pt);
    let grad = [jet.vt, jet.vz];
    let mut pivv = 0.0;
    let mut trace = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            pivv += pi[a][b] * grad[a] * grad[b];
        }
    }
    for a in 0..4 {
        for b in 0..4 {
            trace += g[a][b] * pi[a][b];
        }
    }
    let norm = 2.0 * jet.vt * jet.vz + z * z * lapse * jet.vz * jet.vz + f.ang;
    let q_pi = pivv - trace * (0.5 * norm + jet.v * jet.v);

    let a0 = problem.lower_order[0].value(pt);
    let az = problem.lower_order[1].value(pt);
    let omega = problem.omega.value(pt);
    let forcing = source - a0 * jet.vt - az * jet.vz - omega * jet.v;

    weights.h(tau, z) * (q_grad_w + 0.5 * q_pi - 2.0 * yv * jet.v + forcing * yv)
}

/// Second-order `tau` and `z` derivatives of a mode field.
struct Derivatives {
    vt: Vec<f64>,
    vz: Vec<f64>,
}

impl Derivatives {
    fn of(field: &ModeField) -> Self {
        let g = field.grid;
        let mut vz = Vec::with_capacity(g.len());
        for n in 0..g.n_tau {
            vz.extend(numerics::derivative(field.row(n), g.dz()));
        }
        let mut vt = vec![0.0; g.len()];
        for j in 0..g.n_z {
            let d = numerics::derivative(&field.column(j), g.dtau());
            for (n, x) in d.into_iter().enumerate() {
                vt[n * g.n_z + j] = x;
            }
        }
        Self { vt, vz }
    }

    fn jet(&self, field: &ModeField, n: usize, j: usize) -> ModeJet {
        let k = n * field.grid.n_z + j;
        ModeJet { v: field.get(n, j), vt: self.vt[k], vz: self.vz[k] }
    }

    /// Jet at `(tau_n, z)` by linear interpolation in `z`.
    fn jet_at(&self, field: &ModeField, n: usize, z: f64) -> ModeJet {
        let g = field.grid;
        let nz = g.n_z;
        let row = |a: &[f64]| numerics::interpolate(&a[n * nz..(n + 1) * nz], 0.0, g.dz(), z);
        ModeJet { v: numerics::interpolate(field.row(n), 0.0, g.dz(), z), vt: row(&self.vt), vz: row(&self.vz) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceTerms {
    pub bulk: f64,
    pub final_slice: f64,
    pub curve: f64,
    pub initial_slice: f64,
    pub boundary: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

fn eigenvalue(l: u32) -> f64 {
    (l * (l + 1)) as f64
}

fn check_mode_problem(problem: &ReducedProblem) -> Result<()> {
    if !problem.mode_decoupled {
        return Err(Error::UnsupportedClass("mode-reduced energy audit needs a mode-decoupled problem".into()));
    }
    Ok(())
}

/// Both sides of the weighted divergence identity over
/// `{0 < tau < T, z(tau) < z < z0}` for the multiplier `h Y`.
pub fn divergence_identity(
    problem: &ReducedProblem,
    field: &ModeField,
    weights: &EnergyWeights,
    epsilon: f64,
    source: Option<&(dyn Fn(f64, f64) -> f64 + Sync)>,
) -> Result<DivergenceTerms> {
    check_mode_problem(problem)?;
    let g = field.grid;
    let (dt, dz) = (g.dtau(), g.dz());
    let z_end = timelike_curve(epsilon, g.t_max)?;
    if epsilon < dz || g.z0 - z_end < 2.0 * dz {
        return Err(Error::Resolution(format!(
            "excision curve from z = {epsilon} to {z_end} does not fit the grid (dz = {dz}, z0 = {})",
            g.z0
        )));
    }
    let ev = eigenvalue(field.l);
    let m = weights.m;
    let d = Derivatives::of(field);
    let zs = g.zs();
    let src = |t: f64, z: f64| source.map_or(0.0, |f| f(t, z));
    let lapse = |t: f64, z: f64| problem.lapse.value(Point::equatorial(t, z));

    let mut row_integrals = Vec::with_capacity(g.n_tau);
    let mut curve_density = Vec::with_capacity(g.n_tau);
    let mut boundary_density = Vec::with_capacity(g.n_tau);
    for n in 0..g.n_tau {
        let t = g.tau(n);
        let zc = timelike_curve(epsilon, t)?;
        let dens: Vec<f64> =
            (0..g.n_z).map(|j| bulk_density(problem, weights, d.jet(field, n, j), t, zs[j], ev, src(t, zs[j]))).collect();
        row_integrals.push(numerics::trapezoid_from(&dens, 0.0, dz, zc));

        let f = fluxes(d.jet_at(field, n, zc), zc, lapse(t, zc), m, ev);
        curve_density.push(weights.h(t, zc) * (f.q_z - timelike_curve_rate(zc) * f.q_tau));

        let f = fluxes(d.jet(field, n, g.n_z - 1), g.z0, lapse(t, g.z0), m, ev);
        boundary_density.push(weights.h(t, g.z0) * f.q_z);
    }
    let bulk = numerics::trapezoid(&row_integrals, dt);

    let slice = |n: usize, from: f64| {
        let t = g.tau(n);
        let dens: Vec<f64> = (0..g.n_z)
            .map(|j| weights.h(t, zs[j]) * fluxes(d.jet(field, n, j), zs[j], lapse(t, zs[j]), m, ev).q_tau)
            .collect();
        numerics::trapezoid_from(&dens, 0.0, dz, from)
    };
    let final_slice = slice(g.n_tau - 1, z_end);
    let initial_slice = -slice(0, epsilon);
    let curve = -numerics::trapezoid(&curve_density, dt);
    let boundary = numerics::trapezoid(&boundary_density, dt);

    let lhs = bulk;
    let rhs = final_slice + curve + initial_slice + boundary;
    let scale = lhs.abs() + rhs.abs();
    let residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(DivergenceTerms { bulk, final_slice, curve, initial_slice, boundary, lhs, rhs, residual })
}

/// `|LHS - RHS| / (|LHS| + |RHS|)` of the weighted divergence identity.
pub fn divergence_identity_residual(
    problem: &ReducedProblem,
    field: &ModeField,
    weights: &EnergyWeights,
    epsilon: f64,
) -> Result<f64> {
    Ok(divergence_identity(problem, field, weights, epsilon, None)?.residual)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditOptions {
    pub weights: Option<EnergyWeights>,
    /// Excision parameter; defaults to `z0 / 10`.
    pub epsilon: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { weights: None, epsilon: None, samples: 2000, seed: 0 }
    }
}

/// Discrete norms entering the H1 estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H1Norms {
    /// `||v||_{H1(Omega)} + ||v_z||_{L2(Sigma1)}`.
    pub lhs: f64,
    pub source: f64,
    pub initial: f64,
    pub boundary: f64,
    /// `||N2 v||_{L2(Sigma1)}`.
    pub boundary_n2: f64,
    /// `lhs / (source + initial + boundary)`.
    pub c_hat: f64,
    /// `lhs / (source + initial + boundary_n2)`.
    pub c_hat_n2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyAuditReport {
    pub l: u32,
    pub grid: Grid,
    pub nodes: usize,
    pub weights: EnergyWeights,
    pub epsilon: f64,
    pub certificate: Certificate,
    /// `min(-Q(grad tau, Y))` on `tau = T`; non-negative when the sign claim holds.
    pub final_slice_margin: f64,
    /// `min (z' - 1/2 z^2 V)` along the excision curve.
    pub curve_margin: f64,
    /// Smallest value of `Q(grad z, Y) - z' Q(grad tau, Y) - [(N2 v)^2 + m/2 |dv|^2 + m v^2]` on the curve.
    pub curve_flux_margin: f64,
    /// `min[(N2 v)^2 - 1/2 z0^2 V m v_z^2 - Q(grad z, Y)]` on `z = z0` with `m = z0^2/4`.
    pub small_m_boundary_margin: f64,
    pub divergence: DivergenceTerms,
    pub norms: H1Norms,
    /// The same norms with an `h` factor inside every `L2` integral.
    pub weighted_norms: H1Norms,
}

fn ratio(lhs: f64, rhs: f64) -> Result<f64> {
    if lhs == 0.0 {
        Ok(0.0)
    } else if rhs == 0.0 {
        Err(Error::ViolatedUniqueness { lhs })
    } else {
        Ok(lhs / rhs)
    }
}

fn h1_norms(
    problem: &ReducedProblem,
    field: &ModeField,
    d: &Derivatives,
    data: &BoundaryData,
    source: Option<&(dyn Fn(f64, f64) -> f64 + Sync)>,
    weight: &dyn Fn(f64, f64) -> f64,
) -> Result<H1Norms> {
    let g = field.grid;
    let (dt, dz) = (g.dtau(), g.dz());
    let ev = eigenvalue(field.l);
    let zs = g.zs();
    let taus = g.taus();

    let mut inner_rows = Vec::with_capacity(g.n_tau);
    let mut source_rows = Vec::with_capacity(g.n_tau);
    for n in 0..g.n_tau {
        let t = taus[n];
        let mut a = Vec::with_capacity(g.n_z);
        let mut b = Vec::with_capacity(g.n_z);
        for (j, &z) in zs.iter().enumerate() {
            let w = weight(t, z).powi(2);
            let jet = d.jet(field, n, j);
            a.push(w * (jet.vt * jet.vt + jet.vz * jet.vz + (ev + 1.0) * jet.v * jet.v));
            let f = source.map_or(0.0, |f| f(t, z));
            b.push(w * f * f);
        }
        inner_rows.push(numerics::trapezoid(&a, dz));
        source_rows.push(numerics::trapezoid(&b, dz));
    }
    let omega = numerics::trapezoid(&inner_rows, dt).sqrt();
    let source_norm = numerics::trapezoid(&source_rows, dt).sqrt();

    let jz = g.n_z - 1;
    let vz_b: Vec<f64> = (0..g.n_tau).map(|n| weight(taus[n], g.z0).powi(2) * d.jet(field, n, jz).vz.powi(2)).collect();
    let lhs = omega + numerics::trapezoid(&vz_b, dt).sqrt();

    let phi = data.phi.sample(&zs);
    let phi_z = numerics::derivative(&phi, dz);
    let init: Vec<f64> =
        (0..g.n_z).map(|j| weight(0.0, zs[j]).powi(2) * (phi_z[j].powi(2) + (ev + 1.0) * phi[j].powi(2))).collect();
    let psi = data.psi.sample(&taus);
    let psi_t = numerics::derivative(&psi, dt);
    let bdry: Vec<f64> =
        (0..g.n_tau).map(|n| weight(taus[n], g.z0).powi(2) * (psi_t[n].powi(2) + (ev + 1.0) * psi[n].powi(2))).collect();
    let n2: Vec<f64> = (0..g.n_tau)
        .map(|n| {
            let jet = d.jet(field, n, jz);
            let lapse = problem.lapse.value(Point::equatorial(taus[n], g.z0));
            weight(taus[n], g.z0).powi(2) * (jet.vt + 0.5 * g.z0 * g.z0 * lapse * jet.vz).powi(2)
        })
        .collect();
    let initial = numerics::trapezoid(&init, dz).sqrt();
    let boundary = numerics::trapezoid(&bdry, dt).sqrt();
    let boundary_n2 = numerics::trapezoid(&n2, dt).sqrt();
    Ok(H1Norms {
        lhs,
        source: source_norm,
        initial,
        boundary,
        boundary_n2,
        c_hat: ratio(lhs, source_norm + initial + boundary)?,
        c_hat_n2: ratio(lhs, source_norm + initial + boundary_n2)?,
    })
}

/// Audits a solved mode against the weighted energy identity and the H1 estimate.
pub fn audit_h1(
    problem: &ReducedProblem,
    field: &ModeField,
    data: &BoundaryData,
    options: &AuditOptions,
) -> Result<EnergyAuditReport> {
    audit_h1_with_source(problem, field, data, options, None)
}

pub fn audit_h1_with_source(
    problem: &ReducedProblem,
    field: &ModeField,
    data: &BoundaryData,
    options: &AuditOptions,
    source: Option<&(dyn Fn(f64, f64) -> f64 + Sync)>,
) -> Result<EnergyAuditReport> {
    check_mode_problem(problem)?;
    let g = field.grid;
    let requested = options.weights.unwrap_or_else(|| EnergyWeights::defaults(problem));
    let certificate = bulk_positivity_certificate(problem, &requested, options.samples, options.seed)?;
    let weights = certificate.weights;
    let epsilon = options.epsilon.unwrap_or(0.1 * g.z0);
    let d = Derivatives::of(field);
    let ev = eigenvalue(field.l);
    let lapse = |t: f64, z: f64| problem.lapse.value(Point::equatorial(t, z));

    let last = g.n_tau - 1;
    let final_slice_margin = (0..g.n_z)
        .map(|j| -fluxes(d.jet(field, last, j), g.z(j), lapse(g.t_max, g.z(j)), weights.m, ev).q_tau)
        .fold(f64::INFINITY, f64::min);

    let mut curve_margin_min = f64::INFINITY;
    let mut curve_flux_margin = f64::INFINITY;
    for n in 0..g.n_tau {
        let t = g.tau(n);
        let zc = timelike_curve(epsilon, t)?;
        let v = lapse(t, zc);
        curve_margin_min = curve_margin_min.min(curve_margin(zc, v));
        let jet = d.jet_at(field, n, zc);
        let f = fluxes(jet, zc, v, weights.m, ev);
        let lower = f.n2v * f.n2v + 0.5 * weights.m * f.ang + weights.m * jet.v * jet.v;
        curve_flux_margin = curve_flux_margin.min(f.q_z - timelike_curve_rate(zc) * f.q_tau - lower);
    }

    let m_small = 0.25 * g.z0 * g.z0;
    let small_m_boundary_margin = (0..g.n_tau)
        .map(|n| {
            let t = g.tau(n);
            let v = lapse(t, g.z0);
            let jet = d.jet(field, n, g.n_z - 1);
            let f = fluxes(jet, g.z0, v, m_small, ev);
            f.n2v * f.n2v - 0.5 * g.z0 * g.z0 * v * m_small * jet.vz * jet.vz - f.q_z
        })
        .fold(f64::INFINITY, f64::min);

    let divergence = divergence_identity(problem, field, &weights, epsilon, source)?;
    let norms = h1_norms(problem, field, &d, data, source, &|_, _| 1.0)?;
    let weighted_norms = h1_norms(problem, field, &d, data, source, &|t, z| weights.h(t, z))?;

    Ok(EnergyAuditReport {
        l: field.l,
        grid: g,
        nodes: g.len(),
        weights,
        epsilon,
        certificate,
        final_slice_margin,
        curve_margin: curve_margin_min,
        curve_flux_margin,
        small_m_boundary_margin,
        divergence,
        norms,
        weighted_norms,
    })
}

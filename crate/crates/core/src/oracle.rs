//! Independent checks of the solver and of the reduced equation.
//!
//! [`taylor_solve`] builds the power series in `tau` of the solution for static
//! coefficients and analytic data. [`substitution_oracle`] recomputes the mode
//! equation from the physical wave operator with exact Laurent-polynomial
//! arithmetic.

pub mod laurent;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metric::{conformal_reduce, make_minkowski, make_schwarzschild};
use crate::numerics;
use crate::operator::{assemble, mode_reduce, ModeCoefficients, ModeSeries};
use crate::solver::integrate_inward;

use laurent::Laurent;

/// Highest truncation order accepted by [`taylor_solve`].
pub const MAX_SERIES_ORDER: usize = 12;

/// Tables of `v = sum u0_i tau^i`, `v_z = sum u1_i tau^i`, `v_tau = sum w_i tau^i`
/// on the solver's `z`-grid.
///
/// `uang` holds the mode amplitude of the angular derivative series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSolution {
    pub order: usize,
    pub l: u32,
    pub zs: Vec<f64>,
    pub u0: Vec<Vec<f64>>,
    pub u1: Vec<Vec<f64>>,
    pub uang: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    /// Per-node coefficients used by the recurrences.
    c_zz: Vec<f64>,
    c_z: Vec<f64>,
    c_tau: Vec<f64>,
    c_value: Vec<f64>,
}

impl SeriesSolution {
    fn rhs(&self, i: usize) -> Vec<f64> {
        let dz = self.zs[1] - self.zs[0];
        let du1 = numerics::derivative(&self.u1[i], dz);
        (0..self.zs.len())
            .map(|j| -(self.c_zz[j] * du1[j] + self.c_z[j] * self.u1[i][j] + self.c_value[j] * self.u0[i][j]))
            .collect()
    }

    /// Largest defect in `(i+1) u0_{i+1} = w_i`, `(i+1) uang_{i+1} = w_i` and
    /// `2(i+1) u1_{i+1} = R_i - c_tau w_i`.
    pub fn recurrence_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.order {
            let k = (i + 1) as f64;
            let r = self.rhs(i);
            for j in 0..self.zs.len() {
                let scale = 1.0 + self.w[i][j].abs() + r[j].abs();
                worst = worst.max((k * self.u0[i + 1][j] - self.w[i][j]).abs() / scale);
                worst = worst.max((k * self.uang[i + 1][j] - self.w[i][j]).abs() / scale);
                worst = worst.max((2.0 * k * self.u1[i + 1][j] - (r[j] - self.c_tau[j] * self.w[i][j])).abs() / scale);
            }
        }
        worst
    }
}

/// Power series in `tau` of the solution for `tau`-independent coefficients.
///
/// `psi_taylor[i]` are the Taylor coefficients of the boundary data at `tau = 0`;
/// at least `order + 1` are needed.
pub fn taylor_solve(
    coeffs: &ModeCoefficients,
    phi: &[f64],
    psi_taylor: &[f64],
    grid: &Grid,
    order: usize,
) -> Result<SeriesSolution> {
    if !coeffs.is_tau_independent() {
        return Err(Error::UnsupportedClass("series oracle needs tau-independent coefficients".into()));
    }
    if order > MAX_SERIES_ORDER {
        return Err(Error::Input(format!("series order {order} exceeds {MAX_SERIES_ORDER}")));
    }
    if psi_taylor.len() < order + 1 {
        return Err(Error::Input(format!("need {} Taylor coefficients of psi, got {}", order + 1, psi_taylor.len())));
    }
    if phi.len() != grid.n_z {
        return Err(Error::Shape(format!("phi has {} samples, grid has {} z-nodes", phi.len(), grid.n_z)));
    }
    let zs = grid.zs();
    let dz = grid.dz();
    let mut sol = SeriesSolution {
        order,
        l: coeffs.l,
        c_zz: zs.iter().map(|&z| coeffs.c_zz(0.0, z)).collect(),
        c_z: zs.iter().map(|&z| coeffs.c_z(0.0, z)).collect(),
        c_tau: zs.iter().map(|&z| coeffs.c_tau(0.0, z)).collect(),
        c_value: zs.iter().map(|&z| coeffs.c_value(0.0, z)).collect(),
        zs,
        u0: vec![phi.to_vec()],
        u1: vec![numerics::derivative(phi, dz)],
        uang: vec![phi.to_vec()],
        w: Vec::with_capacity(order),
    };
    for i in 0..order {
        let r = sol.rhs(i);
        let k = (i + 1) as f64;
        let w = integrate_inward(&r, &sol.c_tau, k * psi_taylor[i + 1], dz);
        sol.u0.push(w.iter().map(|x| x / k).collect());
        sol.uang.push(w.iter().map(|x| x / k).collect());
        sol.u1.push((0..w.len()).map(|j| (r[j] - sol.c_tau[j] * w[j]) / (2.0 * k)).collect());
        sol.w.push(w);
    }
    Ok(sol)
}

/// `sum_i u0_i(z_j) tau^i` at node `j`.
pub fn evaluate_series(sol: &SeriesSolution, tau: f64, j: usize) -> f64 {
    sol.u0.iter().rev().fold(0.0, |acc, u| acc * tau + u[j])
}

/// Series value at an arbitrary `z`, linearly interpolated between nodes.
pub fn evaluate_series_at(sol: &SeriesSolution, tau: f64, z: f64) -> f64 {
    let dz = sol.zs[1] - sol.zs[0];
    let row: Vec<f64> = (0..sol.zs.len()).map(|j| evaluate_series(sol, tau, j)).collect();
    numerics::interpolate(&row, 0.0, dz, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BuiltinMetric {
    Minkowski,
    Schwarzschild { mass: f64 },
}

impl BuiltinMetric {
    fn mass(&self) -> f64 {
        match self {
            BuiltinMetric::Minkowski => 0.0,
            BuiltinMetric::Schwarzschild { mass } => *mass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionReport {
    pub metric: BuiltinMetric,
    pub l: u32,
    /// Coefficients obtained by substituting monomials into `z^{-3} Box_g (z v)`.
    pub derived: ModeSeries,
    /// Coefficients produced by the metric reduction and mode projection.
    pub reduced: ModeSeries,
    /// `2 v_{z tau} + z^2 (1 - 2Mz) v_zz - l(l+1) v + 2z(1 - 3Mz) v_z - 2Mz v`.
    pub printed: ModeSeries,
    /// Coefficient of `v_{z tau}`; must equal 2.
    pub mixed: f64,
    /// Defect of the `tau^2` probe, which is not used to determine any coefficient.
    pub consistency_defect: f64,
    pub max_diff_reduced: f64,
    pub max_diff_printed: f64,
    /// `z dV/dz` as a z-series.
    pub z_dv_dz: Vec<f64>,
    /// `+1` if the zeroth-order coefficient equals `+z dV/dz`, `-1` if it equals
    /// `-z dV/dz`, `0` if neither (or `V` is constant).
    pub omega_sign: i32,
}

fn series_diff(a: &[f64], b: &[f64]) -> f64 {
    (0..a.len().max(b.len()))
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

fn mode_series_diff(a: &ModeSeries, b: &ModeSeries) -> f64 {
    series_diff(&a.zz, &b.zz)
        .max(series_diff(&a.z, &b.z))
        .max(series_diff(&a.tau, &b.tau))
        .max(series_diff(&a.zeroth, &b.zeroth))
}

/// `z^{-3} Box_g (z v)` per mode for `g = -V dtau^2 - 2 dtau dr + r^2 g_S2`, `z = 1/r`.
///
/// In `(tau, z)` the inverse metric has `g^{tau z} = z^2`, `g^{zz} = z^4 V`,
/// `g^{tau tau} = 0`, and `sqrt(-g) = z^{-4} sin(theta)`.
fn reduced_operator(v: &Laurent, lapse: &Laurent, l: u32) -> Laurent {
    let u = v.mul(&Laurent::monomial(0, 1, 1.0));
    let measure = Laurent::monomial(0, -4, 1.0);
    let g_tz = Laurent::monomial(0, 2, 1.0);
    let g_zz = lapse.mul(&Laurent::monomial(0, 4, 1.0));
    let flux_tau = measure.mul(&g_tz).mul(&u.d_z());
    let flux_z = measure.mul(&g_tz.mul(&u.d_tau()).add(&g_zz.mul(&u.d_z())));
    let radial = Laurent::monomial(0, 4, 1.0).mul(&flux_tau.d_tau().add(&flux_z.d_z()));
    let angular = u.mul(&Laurent::monomial(0, 2, -((l * (l + 1)) as f64)));
    radial.add(&angular).mul(&Laurent::monomial(0, -3, 1.0))
}

fn z_series(p: &Laurent, name: &str) -> Result<Vec<f64>> {
    p.chop(1e-13).z_polynomial().ok_or_else(|| Error::Input(format!("{name} is not a polynomial in z: {p:?}")))
}

/// Recomputes the reduced mode equation of a built-in metric from the physical
/// wave operator and compares it with the metric reduction and the printed form.
///
/// Probes: `K = L[1]`, `c_tau = L[tau] - tau K`, `c_z = L[z] - z K`,
/// `c_{z tau} = L[z tau] - tau c_z - z c_tau - z tau K`,
/// `c_zz = (L[z^2] - 2 z c_z - z^2 K) / 2`; `L[tau^2]` is a consistency check.
pub fn substitution_oracle(metric: BuiltinMetric, l: u32) -> Result<SubstitutionReport> {
    let mass = metric.mass();
    let lapse = Laurent::from_terms(&[((0, 0), 1.0), ((0, 1), -2.0 * mass)]);
    let op = |v: &Laurent| reduced_operator(v, &lapse, l);
    let one = Laurent::monomial(0, 0, 1.0);
    let tau = Laurent::monomial(1, 0, 1.0);
    let z = Laurent::monomial(0, 1, 1.0);

    let k = op(&one);
    let c_tau = op(&tau).sub(&tau.mul(&k));
    let c_z = op(&z).sub(&z.mul(&k));
    let c_ztau = op(&tau.mul(&z)).sub(&tau.mul(&c_z)).sub(&z.mul(&c_tau)).sub(&tau.mul(&z).mul(&k));
    let c_zz = op(&z.mul(&z)).sub(&z.mul(&c_z).scale(2.0)).sub(&z.mul(&z).mul(&k)).scale(0.5);
    let tau2 = tau.mul(&tau);
    let consistency = op(&tau2).sub(&tau.mul(&c_tau).scale(2.0)).sub(&tau2.mul(&k));

    let ev = (l * (l + 1)) as f64;
    let mut zeroth = z_series(&k, "zeroth-order coefficient")?;
    if zeroth.is_empty() {
        zeroth.push(0.0);
    }
    zeroth[0] += ev;
    let derived = ModeSeries {
        zz: z_series(&c_zz, "c_zz")?,
        z: z_series(&c_z, "c_z")?,
        tau: z_series(&c_tau, "c_tau")?,
        zeroth,
    };
    let mixed = z_series(&c_ztau, "c_ztau")?.first().copied().unwrap_or(0.0);

    let built = match metric {
        BuiltinMetric::Minkowski => make_minkowski(1.0, 1.0)?,
        BuiltinMetric::Schwarzschild { mass } => make_schwarzschild(mass, 1.0, 1.0_f64.min(0.5 / mass.max(1e-300)))?,
    };
    let modes = mode_reduce(&assemble(&conformal_reduce(&built)?)?, l)?;
    let reduced = modes
        .series()
        .cloned()
        .ok_or_else(|| Error::UnsupportedClass("built-in metric lost its polynomial form".into()))?;
    let printed = ModeSeries {
        zz: vec![0.0, 0.0, 1.0, -2.0 * mass],
        z: vec![0.0, 2.0, -6.0 * mass],
        tau: vec![],
        zeroth: vec![0.0, -2.0 * mass],
    };

    let z_dv_dz = vec![0.0, -2.0 * mass];
    let plus = series_diff(&derived.zeroth, &z_dv_dz);
    let minus = series_diff(&derived.zeroth, &z_dv_dz.iter().map(|x| -x).collect::<Vec<_>>());
    let omega_sign = if mass == 0.0 {
        0
    } else if plus <= 1e-14 {
        1
    } else if minus <= 1e-14 {
        -1
    } else {
        0
    };

    Ok(SubstitutionReport {
        metric,
        l,
        max_diff_reduced: mode_series_diff(&derived, &reduced),
        max_diff_printed: mode_series_diff(&derived, &printed),
        derived,
        reduced,
        printed,
        mixed,
        consistency_defect: consistency.chop(1e-13).max_abs(),
        z_dv_dz,
        omega_sign,
    })
}

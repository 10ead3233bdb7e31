//! Asymptotic coefficients `v ~ sum v_i(tau) z^i` near null infinity, with
//! `v_i = (1/i!) d_z^i v |_{z=0}`.
//!
//! Coefficients come either from least-squares fits of the solved field near
//! `z = 0` or from the transport recursion driven by the radiation field `v_0`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ModeField};
use crate::numerics;
use crate::operator::ModeCoefficients;

/// Largest order accepted by [`fit_coefficients`].
pub const MAX_FIT_ORDER: usize = 5;

/// Condition number above which a fit is rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fit,
    Recursion,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Fit => "fit",
            Method::Recursion => "recursion",
        }
    }
}

/// z-series of the mode equation's coefficients:
/// `c_zz = z^2 sum V_j z^j`, `c_z = sum a1_j z^j`, `c_tau = sum a0_j z^j`, `c_0 = sum b_j z^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub lapse: Vec<f64>,
    pub a1: Vec<f64>,
    pub a0: Vec<f64>,
    pub b: Vec<f64>,
    /// The series are exact polynomials, so missing orders are zero.
    pub terminating: bool,
}

impl MetricSeries {
    /// Series of a mode equation with polynomial coefficients.
    pub fn from_coefficients(coeffs: &ModeCoefficients) -> Result<Self> {
        let s = coeffs
            .series()
            .ok_or_else(|| Error::Input("metric series are only available for polynomial backgrounds".into()))?;
        if s.zz.first().copied().unwrap_or(0.0) != 0.0 || s.zz.get(1).copied().unwrap_or(0.0) != 0.0 {
            return Err(Error::Input("c_zz must vanish to second order at z = 0".into()));
        }
        Ok(Self {
            lapse: s.zz.iter().skip(2).copied().collect(),
            a1: s.z.clone(),
            a0: s.tau.clone(),
            b: s.zeroth.clone(),
            terminating: true,
        })
    }

    fn get(&self, which: &[f64], name: &str, j: usize) -> Result<f64> {
        match which.get(j) {
            Some(x) => Ok(*x),
            None if self.terminating => Ok(0.0),
            None => Err(Error::Input(format!("metric series {name} is missing order {j}"))),
        }
    }
}

/// Coefficients `v_i(tau_n)`, `i < k`, for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTable {
    pub k: usize,
    pub l: u32,
    pub m: i32,
    pub method: Method,
    pub taus: Vec<f64>,
    /// `coeffs[i][n] = v_i(tau_n)`.
    pub coeffs: Vec<Vec<f64>>,
    pub metric_series: Option<MetricSeries>,
    /// Number of `z` nodes per fit.
    pub fit_window: Option<usize>,
    /// Largest condition number over the fits.
    pub fit_condition: Option<f64>,
}

impl ExpansionTable {
    /// CSV with columns `tau, v_0, ..., v_{k-1}`; `header` lines are prefixed with `# `.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            let _ = writeln!(out, "# {h}");
        }
        out.push_str("tau");
        for i in 0..self.k {
            let _ = write!(out, ",v_{i}");
        }
        out.push('\n');
        for (n, t) in self.taus.iter().enumerate() {
            let _ = write!(out, "{t}");
            for c in &self.coeffs {
                let _ = write!(out, ",{}", c[n]);
            }
            out.push('\n');
        }
        out
    }

    /// Metadata that accompanies the CSV.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "l": self.l,
            "m": self.m,
            "method": self.method.as_str(),
            "metric_series": self.metric_series,
            "fit_window": self.fit_window,
            "fit_degree": self.fit_window.map(|_| self.k - 1),
            "fit_condition": self.fit_condition,
            "rows": self.taus.len(),
        })
    }

    /// Max deviation of coefficient `i` from `f(tau)`.
    pub fn max_error(&self, i: usize, f: impl Fn(f64) -> f64) -> f64 {
        self.taus.iter().zip(&self.coeffs[i]).fold(0.0f64, |m, (t, c)| m.max((c - f(*t)).abs()))
    }
}

/// `v_0(tau) = v(tau, 0)`.
pub fn extract_radiation_field(field: &ModeField) -> Vec<f64> {
    field.column(0)
}

/// Least-squares polynomials of degree `k - 1` over the first `4k` nodes of each row.
pub fn fit_coefficients(field: &ModeField, k: usize) -> Result<ExpansionTable> {
    let g = field.grid;
    if k == 0 || k > MAX_FIT_ORDER {
        return Err(Error::Input(format!("fit order must be in 1..={MAX_FIT_ORDER}, got {k}")));
    }
    let window = 4 * k;
    if g.n_z < window {
        return Err(Error::Resolution(format!("fit of order {k} needs {window} z-nodes, grid has {}", g.n_z)));
    }
    let dz = g.dz();
    let scale = (window - 1) as f64 * dz;
    let design = DMatrix::from_fn(window, k, |j, i| (j as f64 * dz / scale).powi(i as i32));
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditionedFit { condition });
    }
    let mut coeffs = vec![Vec::with_capacity(g.n_tau); k];
    for n in 0..g.n_tau {
        let rhs = DVector::from_column_slice(&field.row(n)[..window]);
        let sol = svd.solve(&rhs, 0.0).map_err(|e| Error::Input(e.to_string()))?;
        for i in 0..k {
            coeffs[i].push(sol[i] / scale.powi(i as i32));
        }
    }
    Ok(ExpansionTable {
        k,
        l: field.l,
        m: field.m,
        method: Method::Fit,
        taus: g.taus(),
        coeffs,
        metric_series: None,
        fit_window: Some(window),
        fit_condition: Some(condition),
    })
}

/// `(1/i!) d_z^i phi(0)`, `i < k`, from the interpolating polynomial through the
/// first `k + 3` nodes.
pub fn initial_values(phi: &[f64], dz: f64, k: usize) -> Result<Vec<f64>> {
    let npts = (k + 3).min(phi.len());
    if npts < k {
        return Err(Error::Resolution(format!("need at least {k} samples of phi, got {}", phi.len())));
    }
    let a = DMatrix::from_fn(npts, npts, |j, i| (j as f64).powi(i as i32));
    let b = DVector::from_column_slice(&phi[..npts]);
    let c = a.lu().solve(&b).ok_or_else(|| Error::Input("singular interpolation matrix".into()))?;
    Ok((0..k).map(|i| c[i] / dz.powi(i as i32)).collect())
}

/// Coefficients from the transport recursion
///
/// ```text
/// 2(k+1) v'_{k+1} + sum_{i+j=k} [i(i-1) V_j v_i + a0_j v'_i + b_j v_i]
///     + sum_{i+j-1=k} i a1_j v_i - l(l+1) v_k = 0
/// ```
///
/// integrated from `v_{k+1}(0) = (1/(k+1)!) d_z^{k+1} phi(0)` with the trapezoidal rule.
pub fn recursion_coefficients(
    v0: &[f64],
    grid: &Grid,
    series: &MetricSeries,
    phi: &[f64],
    l: u32,
    k: usize,
) -> Result<ExpansionTable> {
    if k == 0 {
        return Err(Error::Input("expansion order must be at least 1".into()));
    }
    if v0.len() != grid.n_tau {
        return Err(Error::Shape(format!("v0 has {} samples, grid has {} tau-nodes", v0.len(), grid.n_tau)));
    }
    if series.get(&series.a1, "a1", 0)? != 0.0 {
        return Err(Error::Input("a1 must vanish at z = 0".into()));
    }
    let ev = (l * (l + 1)) as f64;
    let dt = grid.dtau();
    let init = initial_values(phi, grid.dz(), k)?;
    let mut coeffs: Vec<Vec<f64>> = vec![v0.to_vec()];
    for order in 0..k - 1 {
        // Sources at z^order that do not involve tau-derivatives.
        let mut g = vec![0.0; grid.n_tau];
        let mut derivative_terms: Vec<(f64, usize)> = Vec::new();
        for i in 0..=order {
            let j = order - i;
            let c = (i * i.saturating_sub(1)) as f64 * series.get(&series.lapse, "V", j)?
                + series.get(&series.b, "b", j)?
                + if i == order { -ev } else { 0.0 };
            let a0 = series.get(&series.a0, "a0", j)?;
            if a0 != 0.0 {
                derivative_terms.push((a0, i));
            }
            for (n, x) in g.iter_mut().enumerate() {
                *x += c * coeffs[i][n];
            }
        }
        for i in 1..=order + 1 {
            let j = order + 1 - i;
            let a1 = series.get(&series.a1, "a1", j)?;
            if a1 != 0.0 {
                let vi = if i < coeffs.len() { &coeffs[i] } else { continue };
                for (n, x) in g.iter_mut().enumerate() {
                    *x += i as f64 * a1 * vi[n];
                }
            }
        }
        let integral = numerics::cumulative_trapezoid(&g, dt);
        let factor = 2.0 * (order + 1) as f64;
        let next: Vec<f64> = (0..grid.n_tau)
            .map(|n| {
                let transport: f64 =
                    derivative_terms.iter().map(|&(a0, i)| a0 * (coeffs[i][n] - coeffs[i][0])).sum();
                init[order + 1] - (integral[n] + transport) / factor
            })
            .collect();
        coeffs.push(next);
    }
    Ok(ExpansionTable {
        k,
        l,
        m: 0,
        method: Method::Recursion,
        taus: grid.taus(),
        coeffs,
        metric_series: Some(series.clone()),
        fit_window: None,
        fit_condition: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderCertificate {
    pub k: usize,
    /// `max |v - sum_{i<k} v_i z^i| / z^k` over nodes with `z >= z_floor`.
    pub c_hat: f64,
    pub z_floor: f64,
}

/// Remainder bound of the truncated expansion; nodes below `2 dz` are excluded.
pub fn remainder_certificate(field: &ModeField, table: &ExpansionTable, k: usize) -> Result<RemainderCertificate> {
    if k == 0 {
        return Err(Error::Input("remainder order must be at least 1".into()));
    }
    if table.k < k {
        return Err(Error::Input(format!("table has order {}, certificate needs {k}", table.k)));
    }
    let g = field.grid;
    if table.taus.len() != g.n_tau {
        return Err(Error::Shape("table and field have different tau grids".into()));
    }
    let z_floor = 2.0 * g.dz();
    let mut c_hat = 0.0f64;
    for n in 0..g.n_tau {
        for j in 0..g.n_z {
            let z = g.z(j);
            if z < z_floor * (1.0 - 1e-12) {
                continue;
            }
            let partial = (0..k).rev().fold(0.0, |acc, i| acc * z + table.coeffs[i][n]);
            c_hat = c_hat.max((field.get(n, j) - partial).abs() / z.powi(k as i32));
        }
    }
    Ok(RemainderCertificate { k, c_hat, z_floor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{conformal_reduce, make_minkowski, make_schwarzschild, Domain};
    use crate::operator::{assemble, mode_reduce};

    fn grid(n: usize) -> Grid {
        Grid::new(n, n, Domain::new(1.0, 1.0).unwrap()).unwrap()
    }

    fn series(mass: f64, l: u32) -> MetricSeries {
        let m = if mass == 0.0 { make_minkowski(1.0, 1.0) } else { make_schwarzschild(mass, 1.0, 1.0) };
        let c = mode_reduce(&assemble(&conformal_reduce(&m.unwrap()).unwrap()).unwrap(), l).unwrap();
        MetricSeries::from_coefficients(&c).unwrap()
    }

    #[test]
    fn schwarzschild_series() {
        let s = series(0.1, 0);
        assert_eq!(s.lapse, vec![1.0, -0.2]);
        assert_eq!(s.a1, vec![0.0, 2.0, -0.6000000000000001]);
        assert_eq!(s.b, vec![0.0, -0.2]);
    }

    #[test]
    fn fit_recovers_polynomial_fields() {
        let g = grid(41);
        let f = ModeField::from_fn(1, 0, g, |t, z| t.cos() + z * t.sin());
        let table = fit_coefficients(&f, 3).unwrap();
        assert!(table.max_error(0, f64::cos) < 1e-12);
        assert!(table.max_error(1, f64::sin) < 1e-11);
        assert!(table.max_error(2, |_| 0.0) < 1e-9);
        let c = fit_coefficients(&ModeField::from_fn(0, 0, g, |_, _| 2.5), 2).unwrap();
        assert!(c.max_error(0, |_| 2.5) < 1e-13 && c.max_error(1, |_| 0.0) < 1e-12);
    }

    #[test]
    fn fit_preconditions() {
        let f = ModeField::zeros(0, 0, grid(9));
        assert!(matches!(fit_coefficients(&f, 3), Err(Error::Resolution(_))));
        assert!(fit_coefficients(&f, 6).is_err());
        assert!(fit_coefficients(&f, 0).is_err());
    }

    #[test]
    fn recursion_reproduces_dipole() {
        let g = grid(201);
        let v0: Vec<f64> = g.taus().iter().map(|t| t.cos()).collect();
        let phi: Vec<f64> = g.zs().iter().map(|_| 1.0).collect();
        let t = recursion_coefficients(&v0, &g, &series(0.0, 1), &phi, 1, 3).unwrap();
        assert!(t.max_error(1, f64::sin) < 1e-5);
        assert!(t.max_error(2, |_| 0.0) < 1e-12);
    }

    #[test]
    fn recursion_of_monopole_transport_vanishes() {
        let g = grid(51);
        let v0: Vec<f64> = g.taus().iter().map(|t| (2.0 * t).sin()).collect();
        let t = recursion_coefficients(&v0, &g, &series(0.0, 0), &vec![0.0; 51], 0, 4).unwrap();
        for i in 1..4 {
            assert_eq!(t.max_error(i, |_| 0.0), 0.0);
        }
        let z = recursion_coefficients(&vec![0.0; 51], &g, &series(0.2, 2), &vec![0.0; 51], 2, 4).unwrap();
        assert!(z.coeffs.iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn missing_series_order_rejected() {
        let g = grid(11);
        let s = MetricSeries { lapse: vec![1.0], a1: vec![0.0], a0: vec![], b: vec![], terminating: false };
        let err = recursion_coefficients(&vec![0.0; 11], &g, &s, &vec![0.0; 11], 0, 3).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn initial_values_of_polynomial() {
        let dz = 0.05;
        let phi: Vec<f64> = (0..20).map(|j| {
            let z = j as f64 * dz;
            1.0 - 2.0 * z + 0.5 * z * z + 3.0 * z * z * z
        }).collect();
        let v = initial_values(&phi, dz, 4).unwrap();
        for (a, b) in v.iter().zip([1.0, -2.0, 0.5, 3.0]) {
            assert!((a - b).abs() < 1e-9, "{v:?}");
        }
    }

    #[test]
    fn remainder_of_exact_expansion() {
        let g = grid(41);
        let f = ModeField::from_fn(1, 0, g, |t, z| t.cos() + z * t.sin());
        let table = fit_coefficients(&f, 2).unwrap();
        assert!(remainder_certificate(&f, &table, 2).unwrap().c_hat < 1e-10);
        assert!(remainder_certificate(&f, &table, 0).is_err());
        assert!(remainder_certificate(&f, &table, 3).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = Grid::new(3, 5, Domain::new(1.0, 1.0).unwrap()).unwrap();
        let f = ModeField::from_fn(0, 0, g, |t, _| t);
        let t = ExpansionTable { coeffs: vec![extract_radiation_field(&f)], ..fit_coefficients(&f, 1).unwrap() };
        assert_eq!(t.to_csv(&["x".into()]), "# x\ntau,v_0\n0,0\n0.5,0.5\n1,1\n");
    }
}

//! Evaluable scalar fields on the compactified domain `(tau, z, theta, phi)`.
//!
//! Built-in backgrounds use closed forms with analytic gradients. Data read
//! from files is held on a `(tau, z)` grid and interpolated bilinearly.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A point `(tau, z, theta, phi)`; indices 0..4 in that order everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub tau: f64,
    pub z: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Point {
    pub fn new(tau: f64, z: f64, theta: f64, phi: f64) -> Self {
        Self { tau, z, theta, phi }
    }

    /// A point on the equator, for angle-independent quantities.
    pub fn equatorial(tau: f64, z: f64) -> Self {
        Self::new(tau, z, std::f64::consts::FRAC_PI_2, 0.0)
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.tau, self.z, self.theta, self.phi]
    }

    pub fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut c = self.coords();
        c[axis] += h;
        Self::new(c[0], c[1], c[2], c[3])
    }
}

pub trait ScalarField: Send + Sync + fmt::Debug {
    fn value(&self, p: Point) -> f64;

    /// Coordinate gradient `(d_tau, d_z, d_theta, d_phi)`.
    fn gradient(&self, p: Point) -> [f64; 4] {
        central_gradient(|q| self.value(q), p, 1e-6)
    }

    /// True only when the field is identically zero by construction.
    fn is_zero(&self) -> bool {
        false
    }

    fn is_tau_independent(&self) -> bool {
        false
    }

    fn is_angle_independent(&self) -> bool {
        false
    }

    /// Coefficients `c_k` of an exact expansion `sum c_k z^k`, when the field has one.
    fn z_series(&self) -> Option<Vec<f64>> {
        None
    }
}

pub type Field = Arc<dyn ScalarField>;

pub(crate) fn central_gradient(f: impl Fn(Point) -> f64, p: Point, h: f64) -> [f64; 4] {
    let mut g = [0.0; 4];
    for (axis, gi) in g.iter_mut().enumerate() {
        *gi = (f(p.shifted(axis, h)) - f(p.shifted(axis, -h))) / (2.0 * h);
    }
    g
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _p: Point) -> f64 {
        self.0
    }
    fn gradient(&self, _p: Point) -> [f64; 4] {
        [0.0; 4]
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
    fn is_tau_independent(&self) -> bool {
        true
    }
    fn is_angle_independent(&self) -> bool {
        true
    }
    fn z_series(&self) -> Option<Vec<f64>> {
        Some(vec![self.0])
    }
}

/// `sum_k coeffs[k] z^k`.
#[derive(Debug, Clone)]
pub struct ZPolynomial {
    pub coeffs: Vec<f64>,
}

impl ZPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> ZPolynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        ZPolynomial { coeffs }
    }
}

impl ScalarField for ZPolynomial {
    fn value(&self, p: Point) -> f64 {
        self.eval(p.z)
    }
    fn gradient(&self, p: Point) -> [f64; 4] {
        [0.0, self.derivative().eval(p.z), 0.0, 0.0]
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }
    fn is_tau_independent(&self) -> bool {
        true
    }
    fn is_angle_independent(&self) -> bool {
        true
    }
    fn z_series(&self) -> Option<Vec<f64>> {
        Some(self.coeffs.clone())
    }
}

/// `sin^2(theta)`, the `phi-phi` component of the round metric.
#[derive(Debug, Clone, Copy)]
pub struct SinSquaredTheta;

impl ScalarField for SinSquaredTheta {
    fn value(&self, p: Point) -> f64 {
        p.theta.sin().powi(2)
    }
    fn gradient(&self, p: Point) -> [f64; 4] {
        [0.0, 0.0, 2.0 * p.theta.sin() * p.theta.cos(), 0.0]
    }
    fn is_tau_independent(&self) -> bool {
        true
    }
}

/// A closure-backed field with finite-difference gradient.
#[derive(Clone)]
pub struct FnField {
    name: String,
    f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
}

impl FnField {
    pub fn new(name: impl Into<String>, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField({})", self.name)
    }
}

impl ScalarField for FnField {
    fn value(&self, p: Point) -> f64 {
        (self.f)(p)
    }
}

/// `z * d_z F` for a parent field `F`.
#[derive(Debug, Clone)]
pub struct ZTimesDz(pub Field);

impl ScalarField for ZTimesDz {
    fn value(&self, p: Point) -> f64 {
        p.z * self.0.gradient(p)[1]
    }
    fn is_tau_independent(&self) -> bool {
        self.0.is_tau_independent()
    }
    fn is_angle_independent(&self) -> bool {
        self.0.is_angle_independent()
    }
}

/// Angle-independent data sampled on a rectangular `(tau, z)` grid.
#[derive(Debug, Clone)]
pub struct SampledField {
    tau: Vec<f64>,
    z: Vec<f64>,
    /// Row-major, `values[i * z.len() + j]` at `(tau[i], z[j])`.
    values: Vec<f64>,
}

impl SampledField {
    pub fn new(tau: Vec<f64>, z: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if tau.len() < 3 || z.len() < 3 {
            return Err(Error::Resolution(format!(
                "sampled field needs at least 3 points per axis for differentiation, got {}x{}",
                tau.len(),
                z.len()
            )));
        }
        if values.len() != tau.len() * z.len() {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                tau.len() * z.len(),
                values.len()
            )));
        }
        for axis in [&tau, &z] {
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Input("sample axes must be strictly increasing".into()));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("sampled field contains non-finite values".into()));
        }
        Ok(Self { tau, z, values })
    }

    pub fn tau_axis(&self) -> &[f64] {
        &self.tau
    }

    pub fn z_axis(&self) -> &[f64] {
        &self.z
    }

    fn locate(axis: &[f64], x: f64) -> (usize, f64) {
        let n = axis.len();
        let i = match axis.binary_search_by(|a| a.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let t = (x - axis[i]) / (axis[i + 1] - axis[i]);
        (i, t)
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.z.len() + j]
    }

    fn min_spacing(axis: &[f64]) -> f64 {
        axis.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

impl ScalarField for SampledField {
    fn value(&self, p: Point) -> f64 {
        let (i, s) = Self::locate(&self.tau, p.tau);
        let (j, t) = Self::locate(&self.z, p.z);
        let a = self.at(i, j) * (1.0 - t) + self.at(i, j + 1) * t;
        let b = self.at(i + 1, j) * (1.0 - t) + self.at(i + 1, j + 1) * t;
        a * (1.0 - s) + b * s
    }

    fn gradient(&self, p: Point) -> [f64; 4] {
        let ht = 0.5 * Self::min_spacing(&self.tau);
        let hz = 0.5 * Self::min_spacing(&self.z);
        let dt = (self.value(p.shifted(0, ht)) - self.value(p.shifted(0, -ht))) / (2.0 * ht);
        let dz = (self.value(p.shifted(1, hz)) - self.value(p.shifted(1, -hz))) / (2.0 * hz);
        [dt, dz, 0.0, 0.0]
    }

    fn is_tau_independent(&self) -> bool {
        let nz = self.z.len();
        (1..self.tau.len()).all(|i| (0..nz).all(|j| self.at(i, j) == self.at(0, j)))
    }

    fn is_angle_independent(&self) -> bool {
        true
    }
}

pub fn constant(c: f64) -> Field {
    Arc::new(Constant(c))
}

pub fn zero() -> Field {
    constant(0.0)
}

pub fn z_polynomial(coeffs: Vec<f64>) -> Field {
    Arc::new(ZPolynomial::new(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_gradient_is_analytic() {
        let p = ZPolynomial::new(vec![1.0, -2.0, 3.0]);
        let g = p.gradient(Point::equatorial(0.3, 0.5));
        assert_eq!(g[1], -2.0 + 6.0 * 0.5);
        assert_eq!(p.eval(0.5), 1.0 - 1.0 + 0.75);
    }

    #[test]
    fn sampled_field_reproduces_bilinear_data() {
        let tau = vec![0.0, 0.5, 1.0];
        let z = vec![0.0, 0.25, 0.5, 1.0];
        let f = |t: f64, z: f64| 1.0 + 2.0 * t - 3.0 * z + t * z;
        let values = tau.iter().flat_map(|t| z.iter().map(move |zz| f(*t, *zz))).collect();
        let s = SampledField::new(tau, z, values).unwrap();
        let p = Point::equatorial(0.3, 0.6);
        assert!((s.value(p) - f(0.3, 0.6)).abs() < 1e-12);
        let g = s.gradient(p);
        assert!((g[0] - (2.0 + 0.6)).abs() < 1e-10);
        assert!((g[1] - (-3.0 + 0.3)).abs() < 1e-10);
    }

    #[test]
    fn coarse_sampled_field_is_rejected() {
        let err = SampledField::new(vec![0.0, 1.0], vec![0.0, 0.5, 1.0], vec![0.0; 6]).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }
}

//! Laurent polynomials in `(tau, z)` with exact sparse storage.

use std::collections::BTreeMap;

/// `sum c_{ij} tau^i z^j`, keyed by `(i, j)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Laurent {
    terms: BTreeMap<(i32, i32), f64>,
}

impl Laurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(tau_power: i32, z_power: i32, c: f64) -> Self {
        let mut p = Self::zero();
        p.push((tau_power, z_power), c);
        p
    }

    pub fn from_terms(terms: &[((i32, i32), f64)]) -> Self {
        let mut p = Self::zero();
        for &(k, c) in terms {
            p.push(k, c);
        }
        p
    }

    fn push(&mut self, key: (i32, i32), c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(key).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn coefficient(&self, tau_power: i32, z_power: i32) -> f64 {
        self.terms.get(&(tau_power, z_power)).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let mut p = self.clone();
        for (&k, &c) in &other.terms {
            p.push(k, c);
        }
        p
    }

    pub fn sub(&self, other: &Laurent) -> Laurent {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Laurent {
        let mut p = Self::zero();
        for (&k, &c) in &self.terms {
            p.push(k, s * c);
        }
        p
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut p = Self::zero();
        for (&(a, b), &c) in &self.terms {
            for (&(d, e), &f) in &other.terms {
                p.push((a + d, b + e), c * f);
            }
        }
        p
    }

    pub fn d_tau(&self) -> Laurent {
        let mut p = Self::zero();
        for (&(i, j), &c) in &self.terms {
            p.push((i - 1, j), i as f64 * c);
        }
        p
    }

    pub fn d_z(&self) -> Laurent {
        let mut p = Self::zero();
        for (&(i, j), &c) in &self.terms {
            p.push((i, j - 1), j as f64 * c);
        }
        p
    }

    /// Drops coefficients below `tol` times the largest one.
    pub fn chop(&self, tol: f64) -> Laurent {
        let cut = tol * self.max_abs();
        Laurent { terms: self.terms.iter().filter(|(_, c)| c.abs() > cut).map(|(k, c)| (*k, *c)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Coefficients `[c_0, c_1, ...]` if the polynomial involves only non-negative powers of `z`.
    pub fn z_polynomial(&self) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        for (&(i, j), &c) in &self.terms {
            if i != 0 || j < 0 {
                return None;
            }
            let j = j as usize;
            if out.len() <= j {
                out.resize(j + 1, 0.0);
            }
            out[j] = c;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let p = Laurent::from_terms(&[((0, -1), 2.0), ((1, 2), 3.0)]);
        let q = p.mul(&Laurent::monomial(0, 1, 1.0));
        assert_eq!(q.coefficient(0, 0), 2.0);
        assert_eq!(q.coefficient(1, 3), 3.0);
        assert_eq!(p.d_z().coefficient(0, -2), -2.0);
        assert_eq!(p.d_tau().coefficient(0, 2), 3.0);
        assert_eq!(p.sub(&p), Laurent::zero());
        assert_eq!(Laurent::monomial(0, 2, 1.5).z_polynomial(), Some(vec![0.0, 0.0, 1.5]));
        assert_eq!(p.z_polynomial(), None);
    }
}

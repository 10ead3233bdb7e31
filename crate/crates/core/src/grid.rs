//! Uniform `(tau, z)` grids and per-mode solution storage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_tau: usize,
    pub n_z: usize,
    pub t_max: f64,
    pub z0: f64,
}

impl Grid {
    pub fn new(n_tau: usize, n_z: usize, domain: Domain) -> Result<Self> {
        if n_tau < 3 || n_z < 3 {
            return Err(Error::Resolution(format!("grid needs at least 3x3 points, got {n_tau}x{n_z}")));
        }
        Ok(Self { n_tau, n_z, t_max: domain.t_max, z0: domain.z0 })
    }

    /// Grid with `dtau = dz` covering the domain with `n_z` points in `z`.
    pub fn square(n_z: usize, domain: Domain) -> Result<Self> {
        let dz = domain.z0 / (n_z.max(2) - 1) as f64;
        let n_tau = (domain.t_max / dz).round() as usize + 1;
        Self::new(n_tau, n_z, Domain { t_max: (n_tau - 1) as f64 * dz, z0: domain.z0 })
    }

    pub fn domain(&self) -> Domain {
        Domain { t_max: self.t_max, z0: self.z0 }
    }

    pub fn dtau(&self) -> f64 {
        self.t_max / (self.n_tau - 1) as f64
    }

    pub fn dz(&self) -> f64 {
        self.z0 / (self.n_z - 1) as f64
    }

    pub fn tau(&self, n: usize) -> f64 {
        if n + 1 == self.n_tau {
            self.t_max
        } else {
            n as f64 * self.dtau()
        }
    }

    pub fn z(&self, j: usize) -> f64 {
        if j + 1 == self.n_z {
            self.z0
        } else {
            j as f64 * self.dz()
        }
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.n_tau).map(|n| self.tau(n)).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| self.z(j)).collect()
    }

    /// Halves both spacings; every node of `self` is a node of the result.
    pub fn refined(&self) -> Grid {
        Grid { n_tau: 2 * (self.n_tau - 1) + 1, n_z: 2 * (self.n_z - 1) + 1, ..*self }
    }

    pub fn len(&self) -> usize {
        self.n_tau * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Values `v[n, j]` of one `(l, m)` mode at `(tau_n, z_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub l: u32,
    pub m: i32,
    pub grid: Grid,
    values: Vec<f64>,
}

impl ModeField {
    pub fn zeros(l: u32, m: i32, grid: Grid) -> Self {
        Self { l, m, grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(l: u32, m: i32, grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        Ok(Self { l, m, grid, values })
    }

    pub fn from_fn(l: u32, m: i32, grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for n in 0..grid.n_tau {
            let t = grid.tau(n);
            for j in 0..grid.n_z {
                values.push(f(t, grid.z(j)));
            }
        }
        Self { l, m, grid, values }
    }

    #[inline]
    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.values[n * self.grid.n_z + j]
    }

    #[inline]
    pub fn set(&mut self, n: usize, j: usize, v: f64) {
        self.values[n * self.grid.n_z + j] = v;
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let nz = self.grid.n_z;
        &self.values[n * nz..(n + 1) * nz]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let nz = self.grid.n_z;
        &mut self.values[n * nz..(n + 1) * nz]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.grid.n_tau).map(|n| self.get(n, j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Samples this field on a coarser grid that nests in it (factor `2^k`).
    pub fn restrict_to(&self, coarse: Grid) -> Result<ModeField> {
        let rt = (self.grid.n_tau - 1) / (coarse.n_tau - 1);
        let rz = (self.grid.n_z - 1) / (coarse.n_z - 1);
        if rt * (coarse.n_tau - 1) != self.grid.n_tau - 1 || rz * (coarse.n_z - 1) != self.grid.n_z - 1 {
            return Err(Error::Shape("grids do not nest".into()));
        }
        let mut out = ModeField::zeros(self.l, self.m, coarse);
        for n in 0..coarse.n_tau {
            for j in 0..coarse.n_z {
                out.set(n, j, self.get(n * rt, j * rz));
            }
        }
        Ok(out)
    }
}

//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::expr::{parse_expression, Expr};
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricConfig {
    Minkowski,
    Schwarzschild { mass: f64 },
    /// A sampled metric in JSON form, relative to the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub t_max: f64,
    pub z0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_tau: usize,
    pub n_z: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    #[serde(default)]
    pub l: Vec<u32>,
    /// Inclusive range `[l_min, l_max]`, used when `l` is empty.
    #[serde(default)]
    pub range: Option<[u32; 2]>,
    #[serde(default)]
    pub m: i32,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self { l: vec![0], range: None, m: 0 }
    }
}

impl ModesConfig {
    pub fn list(&self) -> Vec<u32> {
        if !self.l.is_empty() {
            return self.l.clone();
        }
        match self.range {
            Some([a, b]) => (a..=b).collect(),
            None => vec![0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Initial data on `tau = 0` as an expression in `z`.
    pub phi: Option<String>,
    /// Boundary data on `z = z0` as an expression in `t`.
    pub psi: Option<String>,
    /// Two-column CSV `z,phi` on a uniform grid.
    pub phi_file: Option<PathBuf>,
    /// Two-column CSV `t,psi` on a uniform grid.
    pub psi_file: Option<PathBuf>,
    /// Exact solution `v(t, z)`; when set, `phi` and `psi` default to its traces.
    pub exact: Option<String>,
    /// Right-hand side `f(t, z)`.
    pub source: Option<String>,
    /// Draw smooth random data from the run seed instead.
    #[serde(default)]
    pub random: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    /// Metric series for the recursion when they cannot be read off the background.
    pub series: Option<SeriesConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub lapse: Vec<f64>,
    pub a1: Vec<f64>,
    #[serde(default)]
    pub a0: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
}

fn default_k() -> usize {
    3
}

fn default_methods() -> Vec<String> {
    vec!["fit".into(), "recursion".into()]
}

impl Default for ExpandConfig {
    fn default() -> Self {
        Self { k: default_k(), methods: default_methods(), series: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub m: Option<f64>,
    pub q: Option<f64>,
    pub l: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    2000
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { m: None, q: None, l: None, epsilon: None, samples: default_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    3
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self { levels: default_levels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    /// Comparison window as a fraction of `T`.
    #[serde(default = "default_window")]
    pub window: f64,
}

fn default_order() -> usize {
    8
}

fn default_window() -> f64 {
    0.25
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { order: default_order(), window: default_window() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub metric: MetricConfig,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub modes: ModesConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub expand: ExpandConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Data expressions after parsing.
#[derive(Debug, Clone)]
pub struct ParsedData {
    pub phi: Option<Expr>,
    pub psi: Option<Expr>,
    pub exact: Option<Expr>,
    pub source: Option<Expr>,
}

fn parse_field(name: &str, text: &Option<String>) -> Result<Option<Expr>, RunError> {
    text.as_deref()
        .map(|s| parse_expression(s).map_err(|e| RunError::Config(format!("data.{name}: {e}"))))
        .transpose()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks everything that does not need the metric.
    pub fn validate(&self, base: &Path) -> Result<ParsedData, RunError> {
        if self.grid.n_tau < 3 || self.grid.n_z < 3 {
            return Err(RunError::Config(format!(
                "grid must be at least 3x3, got {}x{}",
                self.grid.n_tau, self.grid.n_z
            )));
        }
        if !(self.domain.t_max > 0.0 && self.domain.z0 > 0.0) {
            return Err(RunError::Config("domain.t_max and domain.z0 must be positive".into()));
        }
        if let MetricConfig::File { path } = &self.metric {
            let p = base.join(path);
            if !p.is_file() {
                return Err(RunError::Config(format!("metric file {} does not exist", p.display())));
            }
        }
        for f in [&self.data.phi_file, &self.data.psi_file].into_iter().flatten() {
            let p = base.join(f);
            if !p.is_file() {
                return Err(RunError::Config(format!("data file {} does not exist", p.display())));
            }
        }
        if self.data.phi.is_some() && self.data.phi_file.is_some() {
            return Err(RunError::Config("give either data.phi or data.phi_file, not both".into()));
        }
        if self.data.psi.is_some() && self.data.psi_file.is_some() {
            return Err(RunError::Config("give either data.psi or data.psi_file, not both".into()));
        }
        if self.data.random
            && (self.data.phi.is_some() || self.data.psi.is_some() || self.data.exact.is_some())
        {
            return Err(RunError::Config("data.random excludes explicit data".into()));
        }
        for m in &self.expand.methods {
            if m != "fit" && m != "recursion" {
                return Err(RunError::Config(format!("unknown expansion method `{m}`")));
            }
        }
        if !(self.oracle.window > 0.0 && self.oracle.window <= 1.0) {
            return Err(RunError::Config("oracle.window must lie in (0, 1]".into()));
        }
        let parsed = ParsedData {
            phi: parse_field("phi", &self.data.phi)?,
            psi: parse_field("psi", &self.data.psi)?,
            exact: parse_field("exact", &self.data.exact)?,
            source: parse_field("source", &self.data.source)?,
        };
        if let Some(phi) = &parsed.phi {
            if phi.uses_t() {
                return Err(RunError::Config("data.phi must not depend on t".into()));
            }
        }
        Ok(parsed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        metric = { kind = "schwarzschild", mass = 0.1 }
        domain = { t_max = 1.0, z0 = 1.0 }
        grid = { n_tau = 11, n_z = 11 }
    "#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(c.metric, MetricConfig::Schwarzschild { mass: 0.1 });
        assert_eq!(c.modes.list(), vec![0]);
        assert_eq!(c.expand.k, 3);
        assert_eq!(c.oracle.order, 8);
        assert_eq!(c.rng_seed, 0);
        c.validate(Path::new(".")).unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_toml("metric = 3").is_err());
        let c = RunConfig::from_toml(&format!("{BASE}\n[data]\npsi = \"sin(t\"")).unwrap();
        let msg = c.validate(Path::new(".")).unwrap_err().to_string();
        assert!(msg.contains("position 5"), "{msg}");
        let small = BASE.replace("n_tau = 11", "n_tau = 2");
        assert!(RunConfig::from_toml(&small).unwrap().validate(Path::new(".")).is_err());
        let unknown = format!("{BASE}\n[data]\nphy = \"0\"");
        assert!(RunConfig::from_toml(&unknown).is_err());
    }

    #[test]
    fn mode_range() {
        let c = RunConfig::from_toml(&format!("{BASE}\n[modes]\nrange = [1, 3]")).unwrap();
        assert_eq!(c.modes.list(), vec![1, 2, 3]);
    }
}

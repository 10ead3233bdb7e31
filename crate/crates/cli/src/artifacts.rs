//! Serialization of run outputs with a common provenance header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use scri_core::grid::ModeField;

pub const TOOL: &str = "scri";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies the run that produced an artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub rng_seed: u64,
    pub command: String,
}

impl Header {
    pub fn new(config_text: &str, rng_seed: u64, command: &str) -> Self {
        let mut h = Sha256::new();
        h.update(config_text.as_bytes());
        h.update(format!("\nrng_seed={rng_seed}\n").as_bytes());
        let digest = h.finalize();
        let config_sha256 = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Self { tool: TOOL, version: VERSION, config_sha256, rng_seed, command: command.to_string() }
    }

    /// Comment lines for CSV files.
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("tool: {} {}", self.tool, self.version),
            format!("config_sha256: {}", self.config_sha256),
            format!("rng_seed: {}", self.rng_seed),
            format!("command: {}", self.command),
        ]
    }
}

/// Writes artifacts into one directory and remembers their names.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    pub header: Header,
    pub written: Vec<String>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, header: Header) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), header, written: Vec::new() })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `{"header": ..., <body fields>}`.
    pub fn write_json(&mut self, name: &str, body: serde_json::Value) -> std::io::Result<()> {
        let mut obj = serde_json::Map::new();
        obj.insert("header".into(), serde_json::to_value(&self.header).expect("header serializes"));
        match body {
            serde_json::Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("body".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(obj)).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_solution(&mut self, field: &ModeField) -> std::io::Result<String> {
        let name = format!("solution_l{}_m{}.csv", field.l, field.m);
        let text = solution_csv(&self.header, field);
        self.write_text(&name, &text)?;
        Ok(name)
    }
}

/// `tau,z,v` rows, `tau` outermost.
pub fn solution_csv(header: &Header, field: &ModeField) -> String {
    let g = field.grid;
    let mut out = String::with_capacity(g.len() * 40);
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# l: {}, m: {}", field.l, field.m);
    out.push_str("tau,z,v\n");
    for n in 0..g.n_tau {
        let t = g.tau(n);
        for j in 0..g.n_z {
            let _ = writeln!(out, "{},{},{}", t, g.z(j), field.get(n, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use scri_core::grid::Grid;
    use scri_core::metric::Domain;

    #[test]
    fn header_hash_depends_on_seed() {
        let a = Header::new("x = 1", 0, "solve");
        assert_eq!(a.config_sha256.len(), 64);
        assert_ne!(a.config_sha256, Header::new("x = 1", 1, "solve").config_sha256);
        assert_eq!(a, Header::new("x = 1", 0, "solve"));
    }

    #[test]
    fn csv_shortest_round_trip() {
        let g = Grid::new(3, 3, Domain::new(1.0, 1.0).unwrap()).unwrap();
        let f = ModeField::from_fn(2, -1, g, |t, z| t + 0.1 * z);
        let csv = solution_csv(&Header::new("", 0, "solve"), &f);
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "tau,z,v");
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[2], "0,0.5,0.05");
        for r in &rows[1..] {
            let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(v[2], v[0] + 0.1 * v[1]);
        }
    }
}

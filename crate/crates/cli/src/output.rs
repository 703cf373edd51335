//! Result files: one schema-versioned `report.json` plus CSV tables.

use std::path::{Path, PathBuf};

use fraclog_core::{CacheStatus, DiscreteFunction};
use serde::Serialize;

use crate::config::{emit, RunConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct OutDir {
    dir: PathBuf,
    header: Vec<String>,
    written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    schema_version: u32,
    version: &'a str,
    timestamp: String,
    command: &'a str,
    config: &'a RunConfig,
    cache: Option<CacheStatus>,
    files: Vec<String>,
    results: R,
}

/// Shortest round-trip scientific form.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

impl OutDir {
    pub fn create(dir: &Path, config: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        let mut header = vec![format!("fraclog {VERSION}")];
        header.extend(emit(config).lines().filter(|l| !l.is_empty()).map(str::to_string));
        Ok(OutDir { dir: dir.to_path_buf(), header, written: Vec::new() })
    }

    /// Writes `#`-prefixed version and config lines, then the table.
    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let io = |source| CliError::Io { path: path.clone(), source };
        let mut body = Vec::new();
        for line in &self.header {
            body.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut body);
            let csv_err = |e: csv::Error| CliError::Csv { path: path.clone(), message: e.to_string() };
            w.write_record(columns).map_err(csv_err)?;
            for row in rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        std::fs::write(&path, body).map_err(io)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// `cell_index, x, [y], d, value, value_over_ds`
    pub fn solution(&mut self, name: &str, u: &DiscreteFunction, s: f64) -> Result<PathBuf, CliError> {
        let grid = u.grid();
        let planar = grid.dim() == 2;
        let mut columns = vec!["cell_index", "x"];
        if planar {
            columns.push("y");
        }
        columns.extend(["d", "value", "value_over_ds"]);
        let rows: Vec<Vec<String>> = u
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let c = grid.centers[i];
                let d = grid.dist[i];
                let mut row = vec![i.to_string(), num(c[0])];
                if planar {
                    row.push(num(c[1]));
                }
                row.extend([num(d), num(v), num(v / d.powf(s))]);
                row
            })
            .collect();
        self.csv(name, &columns, &rows)
    }

    pub fn report<R: Serialize>(
        &mut self,
        command: &str,
        config: &RunConfig,
        cache: Option<CacheStatus>,
        results: R,
    ) -> Result<PathBuf, CliError> {
        let path = self.dir.join("report.json");
        let files = self
            .written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        let report = Report {
            schema_version: SCHEMA_VERSION,
            version: VERSION,
            timestamp: chrono::Utc::now().to_rfc3339(),
            command,
            config,
            cache,
            files,
            results,
        };
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Json { path: path.clone(), message: e.to_string() })?;
        std::fs::write(&path, text + "\n").map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_body(text: &str) -> String {
        text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
    }

    #[test]
    fn scientific_numbers_round_trip() {
        for x in [0.0, 1.0, -2.5e-300, std::f64::consts::PI, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_files_carry_header_and_body() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { s: Some(0.4), ..RunConfig::default() };
        let mut out = OutDir::create(dir.path(), &cfg).unwrap();
        let path = out.csv("t.csv", &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with(&format!("# fraclog {VERSION}\n")));
        assert!(text.contains("# s = 0.4\n"));
        assert_eq!(csv_body(&text), "a,b\n1,2\n");
    }

    #[test]
    fn unwritable_directory_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = OutDir::create(&blocker.join("sub"), &RunConfig::default()).err().unwrap();
        assert!(err.to_string().contains("file"), "{err}");
    }
}

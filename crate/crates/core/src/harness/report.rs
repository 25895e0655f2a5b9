use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

/// A numeric table; emitted as `{name}.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// Outcome of one command: summary values, tables, and names of extra files
/// (profiles, snapshots) written next to the manifest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub passed: Option<bool>,
    pub summary: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
    pub files: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(
            key.into(),
            serde_json::to_value(value).expect("summary value serialises"),
        );
    }
}

/// Run metadata recorded next to a report.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunInfo {
    pub seed: Option<u64>,
    pub config: Option<Value>,
    pub wall_time_seconds: f64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    #[serde(flatten)]
    info: RunInfo,
    #[serde(flatten)]
    report: Report,
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes every table as CSV plus `manifest.json`. Only the manifest holds
/// run-dependent values such as the wall time.
pub fn emit(report: &Report, info: &RunInfo, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for table in &report.tables {
        let path = dir.join(table.file_name());
        let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
        w.write_record(&table.columns).map_err(csv_error(&path))?;
        for row in &table.rows {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(csv_error(&path))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    let manifest = Manifest {
        tool: "sitsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        info: info.clone(),
        report: report.clone(),
    };
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads back a directory written by [`emit`].
pub fn reload(dir: &Path) -> Result<(Report, RunInfo)> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    let mut report = manifest.report;
    for table in &mut report.tables {
        let path = dir.join(table.file_name());
        let mut r = csv::Reader::from_path(&path).map_err(csv_error(&path))?;
        for rec in r.records() {
            let rec = rec.map_err(csv_error(&path))?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            table.rows.push(row);
        }
    }
    Ok((report, manifest.info))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_writes_manifest_only() {
        let dir = tempfile::tempdir().unwrap();
        emit(&Report::new("noop"), &RunInfo::default(), dir.path()).unwrap();
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from(MANIFEST_NAME)]);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("demo");
        r.passed = Some(true);
        r.set("gap", 0.1 + 0.2);
        let mut t = Table::new("values", &["n", "err"]);
        t.push(vec![50.0, 1.0 / 3.0]);
        t.push(vec![100.0, 2e-17]);
        r.tables.push(t);
        let info = RunInfo {
            seed: Some(7),
            config: Some(serde_json::json!({"a": 1})),
            wall_time_seconds: 0.5,
        };
        emit(&r, &info, dir.path()).unwrap();
        let (back, back_info) = reload(dir.path()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back_info, info);
    }
}

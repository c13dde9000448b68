//! Result records, tables, the cache and the output writers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::svg;
use crate::CliError;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "LOUPE_CACHE_DIR";

/// A numeric table with named columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Which columns of the table to plot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub y: Vec<String>,
    /// Equal scales on both axes (for traces).
    pub equal_axes: bool,
}

/// The result of one command, identical for identical configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub summary: String,
    pub payload: Value,
    pub table: Option<Table>,
    pub plot: Option<PlotSpec>,
    pub library_version: String,
}

/// A cached record with the wall time of the run that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub record: ResultRecord,
    pub wall_time_s: f64,
}

/// What a command returns before it is wrapped into a record.
pub struct Outcome {
    pub summary: String,
    pub payload: Value,
    pub table: Option<Table>,
    pub plot: Option<PlotSpec>,
}

impl ResultRecord {
    pub fn new(cfg: &RunConfig, out: Outcome) -> Self {
        ResultRecord {
            config_hash: cfg.hash(),
            command: cfg.command.clone(),
            config: cfg.hashed_params(),
            summary: out.summary,
            payload: out.payload,
            table: out.table,
            plot: out.plot,
            library_version: crate::VERSION.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }
}

/// Cache directory from the `cache-dir` key or the environment.
pub fn cache_dir(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.get("cache-dir").map(PathBuf::from).or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
}

fn cache_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("{hash}.json"))
}

/// Exact-hash lookup. Unreadable or inconsistent records are skipped with a warning.
pub fn cache_lookup(dir: &Path, hash: &str) -> Option<CacheEntry> {
    let path = cache_path(dir, hash);
    let text = fs::read_to_string(&path).ok()?;
    match serde_json::from_str::<CacheEntry>(&text) {
        Ok(e) if e.record.config_hash == hash => Some(e),
        Ok(_) => {
            eprintln!("warning: corrupt cache record {} (hash mismatch), recomputing", path.display());
            None
        }
        Err(err) => {
            eprintln!("warning: corrupt cache record {} ({err}), recomputing", path.display());
            None
        }
    }
}

/// Stores a record unless one with the same hash already exists.
pub fn cache_store(dir: &Path, entry: &CacheEntry) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cache dir {}: {e}", dir.display())))?;
    let path = cache_path(dir, &entry.record.config_hash);
    let tmp = dir.join(format!(".{}.tmp", entry.record.config_hash));
    let text = serde_json::to_string_pretty(entry).expect("records serialize");
    fs::write(&tmp, text).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
    if path.exists() {
        let _ = fs::remove_file(&tmp);
        return Ok(());
    }
    fs::rename(&tmp, &path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &str, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

/// Table as CSV text.
pub fn table_csv(t: &Table) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.columns).map_err(|e| CliError::Io(e.to_string()))?;
    for row in &t.rows {
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| CliError::Io(e.to_string()))?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes the JSON record and any requested CSV or SVG artifacts.
pub fn emit(cfg: &RunConfig, rec: &ResultRecord) -> Result<(), CliError> {
    if let Some(path) = cfg.get("out") {
        write(path, &rec.to_json())?;
    }
    if let Some(path) = cfg.get("csv") {
        let t = rec.table.as_ref().ok_or_else(|| CliError::Config(format!("`{}` produces no table", rec.command)))?;
        write(path, &table_csv(t)?)?;
    }
    if let Some(path) = cfg.get("svg") {
        let (t, p) = rec.table.as_ref().zip(rec.plot.as_ref()).ok_or_else(|| CliError::Config(format!("`{}` produces no plot", rec.command)))?;
        write(path, &svg::plot(t, p)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ResultRecord {
        let cfg = RunConfig::build("capacity", [("seed".to_string(), "3".to_string())].into()).unwrap();
        ResultRecord::new(
            &cfg,
            Outcome {
                summary: "x".into(),
                payload: serde_json::json!({"value": 0.25, "list": [1, 2]}),
                table: Some(Table { columns: vec!["a".into(), "b".into()], rows: vec![vec![1.0, 0.1], vec![2.0, 1e-300]] }),
                plot: None,
            },
        )
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = record();
        let back: ResultRecord = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let text = table_csv(record().table.as_ref().unwrap()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("a,b\n"));
    }

    #[test]
    fn corrupt_records_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let r = record();
        fs::write(dir.path().join(format!("{}.json", r.config_hash)), "{not json").unwrap();
        assert!(cache_lookup(dir.path(), &r.config_hash).is_none());
        fs::remove_file(dir.path().join(format!("{}.json", r.config_hash))).unwrap();
        cache_store(dir.path(), &CacheEntry { record: r.clone(), wall_time_s: 1.0 }).unwrap();
        assert_eq!(cache_lookup(dir.path(), &r.config_hash).unwrap().record, r);
    }
}

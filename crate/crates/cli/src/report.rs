//! Machine-readable benchmark reports plus an aligned text table, shaped
//! like the published F1 / Time (s) / Par (MB) comparison.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub dataset: String,
    pub f1_mean: f64,
    pub f1_per_seed: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Mean test-set prediction wall time over the seeds, in seconds;
    /// 0 when timing is disabled.
    pub time_s: f64,
    pub param_mb: f64,
    pub epochs: usize,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub rows: Vec<ResultRow>,
}

/// Render the aligned text table.
pub fn text_table(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:<28} {:>8} {:>10} {:>10} {:>8}\n",
        "Method", "Dataset", "F1", "Time (s)", "Par (MB)", "Epochs"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<10} {:<28} {:>8.3} {:>10.3} {:>10.2} {:>8}\n",
            row.method, row.dataset, row.f1_mean, row.time_s, row.param_mb, row.epochs
        ));
    }
    out
}

/// Write `report.json` and `report.txt` under `dir`, overwriting
/// deterministically.
pub fn write_report(rows: &[ResultRow], dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        rows: rows.to_vec(),
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("serializing report: {e}")))?;
    let json_path = dir.join("report.json");
    std::fs::write(&json_path, json + "\n")
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", json_path.display())))?;
    let txt_path = dir.join("report.txt");
    std::fs::write(&txt_path, text_table(rows))
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", txt_path.display())))?;
    Ok(())
}

/// Read back a report written by [`write_report`].
pub fn load_report(dir: &Path) -> Result<Report, CliError> {
    let path = dir.join("report.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DatasetSource, ExperimentConfig, SamplerMode};

    fn dummy_config() -> ExperimentConfig {
        serde_json::from_str(r#"{ "dataset": { "path": "x" } }"#).unwrap()
    }

    #[test]
    fn empty_report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        write_report(&[], dir.path()).unwrap();
        let report = load_report(dir.path()).unwrap();
        assert_eq!(report.schema_version, REPORT_SCHEMA_VERSION);
        assert!(report.rows.is_empty());
    }

    #[test]
    fn rows_round_trip_exactly() {
        let mut config = dummy_config();
        config.sampler = SamplerMode::Uniform;
        config.dataset = DatasetSource::Path("data/pubmed".into());
        let rows = vec![ResultRow {
            method: "uniform".into(),
            dataset: "pubmed".into(),
            f1_mean: 0.8791234,
            f1_per_seed: vec![0.88, 0.879, 0.878, 0.88, 0.8785],
            seeds: vec![0, 1, 2, 3, 4],
            time_s: 0.0791,
            param_mb: 6.0,
            epochs: 10,
            config,
        }];
        let dir = tempfile::tempdir().unwrap();
        write_report(&rows, dir.path()).unwrap();
        let report = load_report(dir.path()).unwrap();
        assert_eq!(report.rows, rows);
    }

    #[test]
    fn table_has_the_published_columns() {
        let rows = vec![ResultRow {
            method: "rl".into(),
            dataset: "synthetic".into(),
            f1_mean: 0.9,
            f1_per_seed: vec![0.9],
            seeds: vec![0],
            time_s: 0.5,
            param_mb: 4.7,
            epochs: 10,
            config: dummy_config(),
        }];
        let table = text_table(&rows);
        assert!(table.contains("F1"));
        assert!(table.contains("Time (s)"));
        assert!(table.contains("Par (MB)"));
    }
}

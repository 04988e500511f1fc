//! Append-only run log: line-delimited JSON, one run per line.
//!
//! Appends write the full serialized record plus newline in a single call,
//! so a crash can only truncate the final line. Readers ignore a trailing
//! partial line; corruption anywhere else is an error.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{RunRecord, StoreError};

pub struct RunLog {
    path: PathBuf,
}

impl RunLog {
    pub fn at(path: &Path) -> RunLog {
        RunLog {
            path: path.to_path_buf(),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// All complete records, in append order.
    pub fn read_all(&self) -> Result<Vec<RunRecord>, StoreError> {
        read_runs(&self.path)
    }

    pub fn find(&self, run_id: &str) -> Result<RunRecord, StoreError> {
        self.read_all()?
            .into_iter()
            .find(|r| r.run_id == run_id)
            .ok_or_else(|| StoreError::MissingRun(run_id.to_string()))
    }

    /// Appends a record with a fresh `run_id`.
    pub fn append(&self, record: &RunRecord) -> Result<(), StoreError> {
        append_run(&self.path, record)
    }
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>, StoreError> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StoreError::Storage(format!("{}: {e}", path.display()))),
    };
    let mut records = Vec::new();
    let lines: Vec<&str> = text.split('\n').collect();
    for (i, line) in lines.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(line) {
            Ok(record) => records.push(record),
            // only the final line may be a partial (interrupted) write
            Err(e) if i + 1 == lines.len() => {
                let _ = e;
            }
            Err(e) => {
                return Err(StoreError::Storage(format!(
                    "{} line {}: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(records)
}

pub fn append_run(path: &Path, record: &RunRecord) -> Result<(), StoreError> {
    let existing = read_runs(path)?;
    if existing.iter().any(|r| r.run_id == record.run_id) {
        return Err(StoreError::DuplicateRunId(record.run_id.clone()));
    }
    let mut line =
        serde_json::to_string(record).map_err(|e| StoreError::Storage(e.to_string()))?;
    line.push('\n');
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| StoreError::Storage(format!("{}: {e}", parent.display())))?;
        }
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| StoreError::Storage(format!("{}: {e}", path.display())))?;
    file.write_all(line.as_bytes())
        .map_err(|e| StoreError::Storage(e.to_string()))?;
    file.sync_data()
        .map_err(|e| StoreError::Storage(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::PhotoOutcome;
    use super::*;
    use crate::estimate::{DepthEstimate, EstimateSource};
    use std::collections::BTreeSet;

    fn record(run_id: &str) -> RunRecord {
        RunRecord {
            run_id: run_id.to_string(),
            model_id: "gpt-4-vision".into(),
            prompt_checksum: "abc".into(),
            started: "2024-01-01T00:00:00Z".into(),
            finished: "2024-01-01T00:01:00Z".into(),
            photos: vec![
                PhotoOutcome::Ok {
                    photo_id: "p1".into(),
                    image_hash: "h1".into(),
                    estimate: DepthEstimate::new(
                        0.4,
                        "knee deep",
                        EstimateSource::Model("gpt-4-vision".into()),
                        BTreeSet::new(),
                    )
                    .unwrap(),
                },
                PhotoOutcome::Error {
                    photo_id: "p2".into(),
                    message: "no fixture".into(),
                },
            ],
        }
    }

    #[test]
    fn append_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let log = RunLog::at(&dir.path().join("runs.jsonl"));
        let rec = record("run-1");
        log.append(&rec).unwrap();
        assert_eq!(log.read_all().unwrap(), vec![rec.clone()]);
        assert_eq!(log.find("run-1").unwrap(), rec);
    }

    #[test]
    fn duplicate_run_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let log = RunLog::at(&dir.path().join("runs.jsonl"));
        log.append(&record("run-1")).unwrap();
        assert!(matches!(
            log.append(&record("run-1")).unwrap_err(),
            StoreError::DuplicateRunId(id) if id == "run-1"
        ));
    }

    #[test]
    fn missing_run_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let log = RunLog::at(&dir.path().join("runs.jsonl"));
        log.append(&record("run-1")).unwrap();
        assert!(matches!(
            log.find("other").unwrap_err(),
            StoreError::MissingRun(id) if id == "other"
        ));
    }

    #[test]
    fn truncated_final_line_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        let log = RunLog::at(&path);
        log.append(&record("run-1")).unwrap();
        log.append(&record("run-2")).unwrap();

        // simulate an interrupted append: half a record, no newline
        let mut text = std::fs::read_to_string(&path).unwrap();
        let half = serde_json::to_string(&record("run-3")).unwrap();
        text.push_str(&half[..half.len() / 2]);
        std::fs::write(&path, text).unwrap();

        let records = log.read_all().unwrap();
        assert_eq!(
            records.iter().map(|r| r.run_id.as_str()).collect::<Vec<_>>(),
            vec!["run-1", "run-2"]
        );
    }

    #[test]
    fn mid_file_corruption_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        std::fs::write(&path, "{broken\n").unwrap();
        append_run(&path, &record("run-1")).unwrap_err();
    }

    #[test]
    fn reading_a_missing_log_yields_no_runs() {
        let dir = tempfile::tempdir().unwrap();
        let log = RunLog::at(&dir.path().join("absent.jsonl"));
        assert!(log.read_all().unwrap().is_empty());
    }
}

//! Photo manifests, run records, and the GeoJSON point export.
//!
//! A manifest lists the photos of a batch: identifier, image locator,
//! optional WGS84 coordinates, optional source URL, and per-annotator manual
//! depths. Two equivalent forms are supported — delimited text with a header
//! (spreadsheet-friendly annotation entry) and JSON. See the README for the
//! bit-exact schemas.

mod geojson;
mod manifest;
mod run_log;

pub use geojson::{export_geojson, GeoJsonExport};
pub use manifest::{load_manifest, load_manifest_str, ManifestFormat};
pub use run_log::{append_run, read_runs, RunLog};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::DepthEstimate;
use crate::metrics::AnnotationSet;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("manifest parse error at line {line}: {message}")]
    ManifestParse { line: usize, message: String },
    #[error("duplicate photo id `{id}` (lines {first} and {second})")]
    DuplicatePhotoId {
        id: String,
        first: usize,
        second: usize,
    },
    #[error("invalid coordinate at line {line}: {field} = {value}")]
    InvalidCoordinate {
        line: usize,
        field: &'static str,
        value: f64,
    },
    #[error("run id `{0}` already exists in the run log")]
    DuplicateRunId(String),
    #[error("run id `{0}` not found in the run log")]
    MissingRun(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

/// One photo of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoRecord {
    pub photo_id: String,
    /// Filesystem path (absolute, or relative to the manifest location).
    pub path: String,
    /// Content hash of the prepared image bytes; filled in once the image
    /// has been read and prepared, not at manifest load time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    pub annotations: AnnotationSet,
}

/// Per-photo outcome inside a run record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PhotoOutcome {
    Ok {
        photo_id: String,
        image_hash: String,
        estimate: DepthEstimate,
    },
    Error {
        photo_id: String,
        message: String,
    },
}

impl PhotoOutcome {
    pub fn photo_id(&self) -> &str {
        match self {
            PhotoOutcome::Ok { photo_id, .. } | PhotoOutcome::Error { photo_id, .. } => photo_id,
        }
    }

    pub fn estimate(&self) -> Option<&DepthEstimate> {
        match self {
            PhotoOutcome::Ok { estimate, .. } => Some(estimate),
            PhotoOutcome::Error { .. } => None,
        }
    }
}

/// One estimation run over a manifest: every input photo appears exactly
/// once, as an estimate or as an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub model_id: String,
    pub prompt_checksum: String,
    pub started: String,
    pub finished: String,
    pub photos: Vec<PhotoOutcome>,
}

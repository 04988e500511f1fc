//! Manifest loading and validation.
//!
//! Delimited form: a header row `photo_id,path,lat,lon,source_url` followed
//! by one column per annotator (`m1,m2,...`). Empty cells mean "not
//! provided"; missing annotator cells are excluded from means. JSON form: an
//! array of records with an `annotations` object. Validation rejects
//! duplicate ids, out-of-range coordinates, lone lat/lon values, and
//! negative depths, each with the offending line number.

use std::collections::HashMap;
use std::path::Path;

use super::{PhotoRecord, StoreError};
use crate::metrics::AnnotationSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifestFormat {
    Csv,
    Json,
}

impl ManifestFormat {
    fn from_path(path: &Path) -> ManifestFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ManifestFormat::Json,
            _ => ManifestFormat::Csv,
        }
    }
}

const FIXED_COLUMNS: [&str; 5] = ["photo_id", "path", "lat", "lon", "source_url"];

/// Loads and validates a manifest file; the format follows the extension
/// (`.json` for JSON, anything else is delimited text).
pub fn load_manifest(path: &Path) -> Result<Vec<PhotoRecord>, StoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| StoreError::Storage(format!("{}: {e}", path.display())))?;
    load_manifest_str(&text, ManifestFormat::from_path(path))
}

pub fn load_manifest_str(
    text: &str,
    format: ManifestFormat,
) -> Result<Vec<PhotoRecord>, StoreError> {
    let records = match format {
        ManifestFormat::Csv => parse_csv(text)?,
        ManifestFormat::Json => parse_json(text)?,
    };
    check_duplicates(&records)?;
    for (line, record) in records.iter() {
        validate_record(record, *line)?;
    }
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

fn check_duplicates(records: &[(usize, PhotoRecord)]) -> Result<(), StoreError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (line, record) in records {
        if let Some(first) = seen.insert(record.photo_id.as_str(), *line) {
            return Err(StoreError::DuplicatePhotoId {
                id: record.photo_id.clone(),
                first,
                second: *line,
            });
        }
    }
    Ok(())
}

fn validate_record(record: &PhotoRecord, line: usize) -> Result<(), StoreError> {
    match (record.lat, record.lon) {
        (Some(lat), Some(lon)) => {
            if !(-90.0..=90.0).contains(&lat) || lat.is_nan() {
                return Err(StoreError::InvalidCoordinate {
                    line,
                    field: "lat",
                    value: lat,
                });
            }
            if !(-180.0..=180.0).contains(&lon) || lon.is_nan() {
                return Err(StoreError::InvalidCoordinate {
                    line,
                    field: "lon",
                    value: lon,
                });
            }
        }
        (None, None) => {}
        (Some(lat), None) => {
            return Err(StoreError::ManifestParse {
                line,
                message: format!("lat {lat} given without lon"),
            })
        }
        (None, Some(lon)) => {
            return Err(StoreError::ManifestParse {
                line,
                message: format!("lon {lon} given without lat"),
            })
        }
    }
    if record.photo_id.is_empty() {
        return Err(StoreError::ManifestParse {
            line,
            message: "empty photo_id".into(),
        });
    }
    if record.path.is_empty() {
        return Err(StoreError::ManifestParse {
            line,
            message: "empty path".into(),
        });
    }
    for (annotator, depth) in &record.annotations.annotator_depths {
        if *depth < 0.0 || !depth.is_finite() {
            return Err(StoreError::ManifestParse {
                line,
                message: format!("negative or non-finite depth {depth} for annotator {annotator}"),
            });
        }
    }
    Ok(())
}

fn parse_csv(text: &str) -> Result<Vec<(usize, PhotoRecord)>, StoreError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| StoreError::ManifestParse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < FIXED_COLUMNS.len() || names[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(StoreError::ManifestParse {
            line: 1,
            message: format!(
                "header must start with {}, got {}",
                FIXED_COLUMNS.join(","),
                names.join(",")
            ),
        });
    }
    let annotators: Vec<String> = names[FIXED_COLUMNS.len()..]
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let row = row.map_err(|e| StoreError::ManifestParse {
            line,
            message: e.to_string(),
        })?;
        let field = |idx: usize| row.get(idx).unwrap_or("").to_string();
        let opt_f64 = |idx: usize, name: &str| -> Result<Option<f64>, StoreError> {
            let raw = row.get(idx).unwrap_or("");
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<f64>()
                .map(Some)
                .map_err(|_| StoreError::ManifestParse {
                    line,
                    message: format!("{name} is not a number: `{raw}`"),
                })
        };

        let mut annotator_depths = Vec::new();
        for (k, annotator) in annotators.iter().enumerate() {
            let raw = row.get(FIXED_COLUMNS.len() + k).unwrap_or("");
            if raw.is_empty() {
                continue;
            }
            let depth = raw.parse::<f64>().map_err(|_| StoreError::ManifestParse {
                line,
                message: format!("depth for {annotator} is not a number: `{raw}`"),
            })?;
            annotator_depths.push((annotator.clone(), depth));
        }

        let photo_id = field(0);
        let source_url = {
            let s = field(4);
            (!s.is_empty()).then_some(s)
        };
        out.push((
            line,
            PhotoRecord {
                photo_id: photo_id.clone(),
                path: field(1),
                image_hash: None,
                lat: opt_f64(2, "lat")?,
                lon: opt_f64(3, "lon")?,
                source_url,
                annotations: AnnotationSet {
                    photo_id,
                    annotator_depths,
                    notes: None,
                },
            },
        ));
    }
    Ok(out)
}

fn parse_json(text: &str) -> Result<Vec<(usize, PhotoRecord)>, StoreError> {
    #[derive(serde::Deserialize)]
    struct JsonRecord {
        photo_id: String,
        path: String,
        #[serde(default)]
        lat: Option<f64>,
        #[serde(default)]
        lon: Option<f64>,
        #[serde(default)]
        source_url: Option<String>,
        #[serde(default)]
        annotations: Vec<(String, f64)>,
    }
    let rows: Vec<JsonRecord> = serde_json::from_str(text).map_err(|e| {
        StoreError::ManifestParse {
            line: e.line(),
            message: e.to_string(),
        }
    })?;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            (
                i + 1,
                PhotoRecord {
                    photo_id: r.photo_id.clone(),
                    path: r.path,
                    image_hash: None,
                    lat: r.lat,
                    lon: r.lon,
                    source_url: r.source_url,
                    annotations: AnnotationSet {
                        photo_id: r.photo_id,
                        annotator_depths: r.annotations,
                        notes: None,
                    },
                },
            )
        })
        .collect())
}

//! Point-depth GeoJSON export for downstream mapping.
//!
//! Output is a standard `FeatureCollection` of `Point` features with
//! coordinates as `[lon, lat]`. Properties carry the photo id, depth,
//! estimate source, and flags. Photos without coordinates, and photos whose
//! run outcome was an error, are skipped and counted.

use serde::Serialize;
use serde_json::Value;

use super::{PhotoOutcome, PhotoRecord, RunRecord};

#[derive(Debug, Serialize)]
struct Geometry {
    #[serde(rename = "type")]
    kind: &'static str,
    coordinates: [f64; 2],
}

#[derive(Debug, Serialize)]
struct Feature {
    #[serde(rename = "type")]
    kind: &'static str,
    geometry: Geometry,
    properties: Value,
}

#[derive(Debug, Serialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: &'static str,
    features: Vec<Feature>,
}

/// The exported document plus skip accounting.
#[derive(Debug)]
pub struct GeoJsonExport {
    pub document: Value,
    pub features: usize,
    pub skipped_no_coordinates: usize,
    pub skipped_errors: usize,
}

/// Builds the FeatureCollection for a run, joining coordinates from the
/// manifest records by photo id.
pub fn export_geojson(run: &RunRecord, manifest: &[PhotoRecord]) -> GeoJsonExport {
    let mut features = Vec::new();
    let mut skipped_no_coordinates = 0;
    let mut skipped_errors = 0;

    for outcome in &run.photos {
        let estimate = match outcome {
            PhotoOutcome::Ok { estimate, .. } => estimate,
            PhotoOutcome::Error { .. } => {
                skipped_errors += 1;
                continue;
            }
        };
        let record = manifest.iter().find(|r| r.photo_id == outcome.photo_id());
        let (lat, lon) = match record.and_then(|r| r.lat.zip(r.lon)) {
            Some(coords) => coords,
            None => {
                skipped_no_coordinates += 1;
                continue;
            }
        };
        features.push(Feature {
            kind: "Feature",
            geometry: Geometry {
                kind: "Point",
                coordinates: [lon, lat],
            },
            properties: serde_json::json!({
                "photo_id": outcome.photo_id(),
                "depth_m": estimate.value_m,
                "source": estimate.source.as_str(),
                "flags": estimate.flag_names(),
            }),
        });
    }

    let count = features.len();
    let collection = FeatureCollection {
        kind: "FeatureCollection",
        features,
    };
    GeoJsonExport {
        document: serde_json::to_value(collection).expect("geojson serializes"),
        features: count,
        skipped_no_coordinates,
        skipped_errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{DepthEstimate, EstimateSource};
    use crate::metrics::AnnotationSet;
    use std::collections::BTreeSet;

    fn photo(id: &str, coords: Option<(f64, f64)>) -> PhotoRecord {
        PhotoRecord {
            photo_id: id.to_string(),
            path: format!("{id}.png"),
            image_hash: None,
            lat: coords.map(|(lat, _)| lat),
            lon: coords.map(|(_, lon)| lon),
            source_url: None,
            annotations: AnnotationSet {
                photo_id: id.to_string(),
                annotator_depths: vec![],
                notes: None,
            },
        }
    }

    fn ok_outcome(id: &str, depth: f64) -> PhotoOutcome {
        PhotoOutcome::Ok {
            photo_id: id.to_string(),
            image_hash: "h".into(),
            estimate: DepthEstimate::new(
                depth,
                "r",
                EstimateSource::Model("gpt-4-vision".into()),
                BTreeSet::new(),
            )
            .unwrap(),
        }
    }

    fn run(photos: Vec<PhotoOutcome>) -> RunRecord {
        RunRecord {
            run_id: "r1".into(),
            model_id: "gpt-4-vision".into(),
            prompt_checksum: "c".into(),
            started: String::new(),
            finished: String::new(),
            photos,
        }
    }

    #[test]
    fn photos_without_coordinates_are_skipped_and_counted() {
        let manifest = vec![photo("a", Some((29.76, -95.36))), photo("b", None)];
        let export = export_geojson(
            &run(vec![ok_outcome("a", 0.4), ok_outcome("b", 0.6)]),
            &manifest,
        );
        assert_eq!(export.features, 1);
        assert_eq!(export.skipped_no_coordinates, 1);
        assert_eq!(export.skipped_errors, 0);
    }

    #[test]
    fn empty_run_exports_an_empty_collection() {
        let export = export_geojson(&run(vec![]), &[]);
        assert_eq!(export.features, 0);
        assert_eq!(export.document["type"], "FeatureCollection");
        assert_eq!(export.document["features"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn depth_passes_through_exactly_and_coordinates_are_lon_lat() {
        let depth = 0.30000000000000004;
        let manifest = vec![photo("a", Some((29.76, -95.36)))];
        let export = export_geojson(&run(vec![ok_outcome("a", depth)]), &manifest);
        let feature = &export.document["features"][0];
        assert_eq!(feature["type"], "Feature");
        assert_eq!(feature["geometry"]["type"], "Point");
        let coords = feature["geometry"]["coordinates"].as_array().unwrap();
        assert_eq!(coords[0].as_f64().unwrap(), -95.36); // lon first
        assert_eq!(coords[1].as_f64().unwrap(), 29.76);
        assert_eq!(feature["properties"]["depth_m"].as_f64().unwrap(), depth);
        assert_eq!(feature["properties"]["photo_id"], "a");
    }

    #[test]
    fn errored_photos_are_skipped_separately() {
        let manifest = vec![photo("a", Some((1.0, 2.0))), photo("b", Some((3.0, 4.0)))];
        let export = export_geojson(
            &run(vec![
                ok_outcome("a", 0.4),
                PhotoOutcome::Error {
                    photo_id: "b".into(),
                    message: "boom".into(),
                },
            ]),
            &manifest,
        );
        assert_eq!(export.features, 1);
        assert_eq!(export.skipped_errors, 1);
    }
}

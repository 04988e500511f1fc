//! Evaluation statistics: MAE and Pearson correlation of model depths against
//! multi-annotator manual depths, plus report/scatter/outlier assembly.
//!
//! MAE is the mean of absolute differences. The mean signed error
//! (manual minus model) is reported alongside it so systematic bias stays
//! visible. Pearson uses the sample formulation; the normalization constant
//! cancels, so the result is scale-free.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("zero variance: correlation undefined")]
    ZeroVariance,
    #[error("photo `{0}` has no annotator depths")]
    EmptyAnnotations(String),
    #[error("photos missing a model estimate: {}", .0.join(", "))]
    MissingEstimate(Vec<String>),
    #[error("negative annotator depth {depth_m} for photo `{photo_id}`")]
    NegativeDepth { photo_id: String, depth_m: f64 },
}

/// Per-photo manual depths from one or more annotators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub photo_id: String,
    /// `(annotator_id, depth_m)` in annotator order.
    pub annotator_depths: Vec<(String, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl AnnotationSet {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (_, d) in &self.annotator_depths {
            if *d < 0.0 || !d.is_finite() {
                return Err(EvalError::NegativeDepth {
                    photo_id: self.photo_id.clone(),
                    depth_m: *d,
                });
            }
        }
        Ok(())
    }
}

/// One evaluated photo: the model value (if any) joined with its annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPhoto {
    pub photo_id: String,
    pub model_m: Option<f64>,
    pub annotations: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub photo_id: String,
    pub manual_mean_m: f64,
    pub model_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorCorrelation {
    pub annotator_id: String,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outlier {
    pub photo_id: String,
    pub abs_error_m: f64,
}

/// The full evaluation result; serializes to the report JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub mae_m: f64,
    pub mean_signed_error_m: f64,
    pub pearson_vs_mean: f64,
    pub pearson_per_annotator: Vec<AnnotatorCorrelation>,
    pub outlier_factor: f64,
    pub scatter: Vec<ScatterPoint>,
    pub outliers: Vec<Outlier>,
}

/// Mean absolute error between two equal-length depth vectors.
pub fn mae(manual: &[f64], model: &[f64]) -> Result<f64, EvalError> {
    if manual.len() != model.len() {
        return Err(EvalError::LengthMismatch {
            left: manual.len(),
            right: model.len(),
        });
    }
    if manual.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum: f64 = manual
        .iter()
        .zip(model)
        .map(|(m, g)| (m - g).abs())
        .sum();
    Ok(sum / manual.len() as f64)
}

/// Mean of `manual[i] - model[i]`; positive means the model underestimates.
pub fn mean_signed_error(manual: &[f64], model: &[f64]) -> Result<f64, EvalError> {
    if manual.len() != model.len() {
        return Err(EvalError::LengthMismatch {
            left: manual.len(),
            right: model.len(),
        });
    }
    if manual.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum: f64 = manual.iter().zip(model).map(|(m, g)| m - g).sum();
    Ok(sum / manual.len() as f64)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if x.len() < 2 {
        return Err(EvalError::ZeroVariance);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Per-photo arithmetic mean of annotator depths, photo order preserved.
pub fn annotator_mean(annotations: &[AnnotationSet]) -> Result<Vec<(String, f64)>, EvalError> {
    annotations
        .iter()
        .map(|a| {
            a.validate()?;
            let (first, rest) = a
                .annotator_depths
                .split_first()
                .ok_or_else(|| EvalError::EmptyAnnotations(a.photo_id.clone()))?;
            // a constant column means exactly that constant
            if rest.iter().all(|(_, d)| *d == first.1) {
                return Ok((a.photo_id.clone(), first.1));
            }
            let sum: f64 = a.annotator_depths.iter().map(|(_, d)| d).sum();
            Ok((a.photo_id.clone(), sum / a.annotator_depths.len() as f64))
        })
        .collect()
}

/// Computes the full report: MAE and Pearson against the per-photo annotator
/// mean, per-annotator Pearson, scatter pairs, and photos whose absolute
/// error exceeds `outlier_factor * MAE`.
pub fn evaluate(photos: &[EvalPhoto], outlier_factor: f64) -> Result<EvaluationReport, EvalError> {
    let missing: Vec<String> = photos
        .iter()
        .filter(|p| p.model_m.is_none())
        .map(|p| p.photo_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingEstimate(missing));
    }
    if photos.is_empty() {
        return Err(EvalError::EmptyInput);
    }

    let annotations: Vec<AnnotationSet> = photos
        .iter()
        .map(|p| AnnotationSet {
            photo_id: p.photo_id.clone(),
            annotator_depths: p.annotations.clone(),
            notes: None,
        })
        .collect();
    let means = annotator_mean(&annotations)?;

    let manual: Vec<f64> = means.iter().map(|(_, m)| *m).collect();
    let model: Vec<f64> = photos.iter().map(|p| p.model_m.unwrap()).collect();

    let mae_m = mae(&manual, &model)?;
    let mean_signed_error_m = mean_signed_error(&manual, &model)?;
    let pearson_vs_mean = pearson(&manual, &model)?;

    // Per-annotator r over the photos that annotator covered; annotators
    // whose vector is too short or constant are skipped.
    let mut annotator_ids: Vec<String> = Vec::new();
    for p in photos {
        for (id, _) in &p.annotations {
            if !annotator_ids.iter().any(|a| a == id) {
                annotator_ids.push(id.clone());
            }
        }
    }
    let mut pearson_per_annotator = Vec::new();
    for id in annotator_ids {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (p, g) in photos.iter().zip(&model) {
            if let Some((_, d)) = p.annotations.iter().find(|(a, _)| a == &id) {
                xs.push(*d);
                ys.push(*g);
            }
        }
        if let Ok(r) = pearson(&xs, &ys) {
            pearson_per_annotator.push(AnnotatorCorrelation { annotator_id: id, r });
        }
    }

    let scatter: Vec<ScatterPoint> = means
        .iter()
        .zip(&model)
        .map(|((photo_id, manual_mean_m), model_m)| ScatterPoint {
            photo_id: photo_id.clone(),
            manual_mean_m: *manual_mean_m,
            model_m: *model_m,
        })
        .collect();

    let threshold = outlier_factor * mae_m;
    let outliers: Vec<Outlier> = scatter
        .iter()
        .filter_map(|p| {
            let abs_error_m = (p.model_m - p.manual_mean_m).abs();
            (abs_error_m > threshold).then(|| Outlier {
                photo_id: p.photo_id.clone(),
                abs_error_m,
            })
        })
        .collect();

    Ok(EvaluationReport {
        n: photos.len(),
        mae_m,
        mean_signed_error_m,
        pearson_vs_mean,
        pearson_per_annotator,
        outlier_factor,
        scatter,
        outliers,
    })
}

/// Writes the scatter pairs as CSV (`photo_id,manual_mean_m,model_m`).
/// Floats print in shortest round-trip form, so a re-parse is lossless.
pub fn scatter_to_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("photo_id,manual_mean_m,model_m\n");
    for p in &report.scatter {
        out.push_str(&format!("{},{},{}\n", p.photo_id, p.manual_mean_m, p.model_m));
    }
    out
}

/// Parses a scatter CSV produced by [`scatter_to_csv`].
pub fn scatter_from_csv(text: &str) -> Result<Vec<ScatterPoint>, csv::Error> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut points = Vec::new();
    for row in reader.deserialize() {
        points.push(row?);
    }
    Ok(points)
}

//! Shared test support: deterministic images, the recorded-response corpus,
//! and replay workspace assembly (fixtures + manifest + run log + cache).

#![allow(dead_code)]

use std::io::Cursor;
use std::path::PathBuf;

use floodgauge::client::{prepare_image, ReplayStore};
use floodgauge::prompt::{build_prompt_named, PromptTemplate};

pub const MODEL_ID: &str = "gpt-4-vision";

pub struct Fixture {
    pub photo_id: &'static str,
    pub response: &'static str,
    pub expected_m: f64,
}

/// The recorded response corpus with each text's concluding depth value.
pub fn fixtures() -> Vec<Fixture> {
    let raw: [(&str, f64); 12] = [
        (
            include_str!("../../fixtures/responses/sedan_wheel_hub.txt"),
            0.3,
        ),
        (
            include_str!("../../fixtures/responses/submerged_stop_sign.txt"),
            2.45,
        ),
        (
            include_str!("../../fixtures/responses/truck_in_water.txt"),
            0.4,
        ),
        (
            include_str!("../../fixtures/responses/rescuers_waist_deep.txt"),
            1.0,
        ),
        (
            include_str!("../../fixtures/responses/group_below_knee.txt"),
            0.15,
        ),
        (
            include_str!("../../fixtures/responses/person_below_knee.txt"),
            0.35,
        ),
        (
            include_str!("../../fixtures/responses/person_knee_stop_sign.txt"),
            0.4,
        ),
        (
            include_str!("../../fixtures/responses/bus_ground_clearance.txt"),
            0.75,
        ),
        (
            include_str!("../../fixtures/responses/pickup_suv_metrics.txt"),
            0.6,
        ),
        (
            include_str!("../../fixtures/responses/truck_multi_reference.txt"),
            1.3,
        ),
        (
            include_str!("../../fixtures/responses/person_mid_thigh.txt"),
            0.6,
        ),
        (
            include_str!("../../fixtures/responses/speed_limit_sign.txt"),
            2.0,
        ),
    ];
    raw.iter()
        .enumerate()
        .map(|(i, (response, expected_m))| Fixture {
            photo_id: Box::leak(format!("p{:02}", i + 1).into_boxed_str()),
            response,
            expected_m: *expected_m,
        })
        .collect()
}

/// Hand-built annotation sheet for the replay corpus (three annotators).
/// The derived statistics below were frozen from an independent
/// spreadsheet-style computation over these exact numbers.
pub const ANNOTATIONS: [(f64, f64, f64); 12] = [
    (0.3, 0.4, 0.35),
    (2.4, 2.5, 2.6),
    (0.5, 0.6, 0.4),
    (0.8, 0.9, 1.0),
    (0.2, 0.15, 0.25),
    (0.4, 0.4, 0.4),
    (0.4, 0.5, 0.3),
    (0.7, 0.8, 0.9),
    (0.5, 0.55, 0.45),
    (0.6, 0.7, 0.8),
    (0.4, 0.45, 0.35),
    (1.0, 1.2, 1.4),
];

/// Frozen oracle values for [`ANNOTATIONS`] against the corpus depths.
pub const EXPECTED_MAE_M: f64 = 0.17916666666666667;
pub const EXPECTED_SIGNED_ERROR_M: f64 = -0.12083333333333336;
pub const EXPECTED_PEARSON_VS_MEAN: f64 = 0.9184221665160156;
pub const EXPECTED_PEARSON_PER_ANNOTATOR: [(&str, f64); 3] = [
    ("m1", 0.8883084514426504),
    ("m2", 0.9106351256126991),
    ("m3", 0.939818514904366),
];
/// `(photo index 1-based, |error|)` at outlier factor 2.0.
pub const EXPECTED_OUTLIERS: [(usize, f64); 2] = [(10, 0.6), (12, 0.8)];

/// Small deterministic PNG whose bytes differ per seed.
pub fn test_image(seed: u8) -> Vec<u8> {
    let img = image::RgbImage::from_fn(8, 8, |x, y| {
        image::Rgb([seed, (x * 29 + 3) as u8, (y * 13 + 7) as u8])
    });
    let mut out = Vec::new();
    image::DynamicImage::ImageRgb8(img)
        .write_to(&mut Cursor::new(&mut out), image::ImageFormat::Png)
        .unwrap();
    out
}

pub struct ReplayWorkspace {
    pub root: tempfile::TempDir,
    pub fixtures_dir: PathBuf,
    pub manifest: PathBuf,
    pub run_log: PathBuf,
    pub cache_dir: PathBuf,
    pub prompt: PromptTemplate,
}

impl ReplayWorkspace {
    pub fn path(&self, name: &str) -> String {
        self.root.path().join(name).to_string_lossy().into_owned()
    }
}

/// Lays out a complete offline workspace: one image per corpus entry, a
/// replay store keyed to those images and the `appendix1` prompt, and a
/// CSV manifest with the [`ANNOTATIONS`] sheet. Photos 2 and 5 carry no
/// coordinates.
pub fn build_replay_workspace() -> ReplayWorkspace {
    build_replay_workspace_with(|_| true)
}

/// Same, but `keep_fixture(index)` controls which replay entries exist
/// (images and manifest rows are always complete).
pub fn build_replay_workspace_with(keep_fixture: impl Fn(usize) -> bool) -> ReplayWorkspace {
    let root = tempfile::tempdir().unwrap();
    let fixtures_dir = root.path().join("replay");
    let images_dir = root.path().join("images");
    std::fs::create_dir_all(&images_dir).unwrap();

    let prompt = build_prompt_named("appendix1").unwrap();
    let mut store = ReplayStore::open(&fixtures_dir).unwrap();

    let mut manifest_text = String::from("photo_id,path,lat,lon,source_url,m1,m2,m3\n");
    for (i, fixture) in fixtures().iter().enumerate() {
        let bytes = test_image(i as u8 + 1);
        let image_path = images_dir.join(format!("{}.png", fixture.photo_id));
        std::fs::write(&image_path, &bytes).unwrap();

        if keep_fixture(i) {
            let prepared = prepare_image(&bytes, usize::MAX).unwrap();
            store
                .insert(&prepared.hash, prompt.checksum(), MODEL_ID, fixture.response)
                .unwrap();
        }

        let coords = if i == 1 || i == 4 {
            ",".to_string()
        } else {
            format!("{},{}", 29.0 + i as f64 * 0.1, -95.0 - i as f64 * 0.1)
        };
        let (m1, m2, m3) = ANNOTATIONS[i];
        manifest_text.push_str(&format!(
            "{},images/{}.png,{coords},,{m1},{m2},{m3}\n",
            fixture.photo_id, fixture.photo_id
        ));
    }

    let manifest = root.path().join("manifest.csv");
    std::fs::write(&manifest, manifest_text).unwrap();

    ReplayWorkspace {
        fixtures_dir,
        manifest,
        run_log: root.path().join("runs.jsonl"),
        cache_dir: root.path().join("cache"),
        prompt,
        root,
    }
}

/// Runs the CLI with captured stdout/stderr.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["floodgauge"];
    full.extend_from_slice(args);
    let code = floodgauge::cli::run_with(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

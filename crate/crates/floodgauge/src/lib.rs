//! floodgauge — floodwater depth estimation from flood photos.
//!
//! A photo of a flooded street usually contains objects of known size:
//! people, sedans, trucks, buses, stop signs. Given where the waterline sits
//! on such an object, the depth follows from its tabulated landmark heights.
//! This crate drives that idea end to end with a vision-capable language
//! model in the loop:
//!
//! 1. [`reference`] — landmark height tables per object kind and the
//!    deterministic waterline-to-depth calculus.
//! 2. [`prompt`] — generates the estimation instruction text from a
//!    landmark profile, so prompt and tables cannot diverge.
//! 3. [`client`] — submits `(image, prompt)` to a provider (HTTP or offline
//!    replay) with caching, retries, and bounded concurrency.
//! 4. [`parse`] — extracts the concluding depth value from the model's
//!    free-text answer.
//! 5. [`metrics`] — MAE and Pearson statistics against multi-annotator
//!    manual depths, with report/scatter/outlier outputs.
//! 6. [`dataset`] — photo manifests, the append-only run log, and the
//!    GeoJSON point export.
//! 7. [`cli`] — the `floodgauge` command-line pipeline over all of it.

pub mod cli;
pub mod client;
pub mod dataset;
pub mod estimate;
pub mod metrics;
pub mod parse;
pub mod prompt;
pub mod reference;

pub use estimate::{DepthEstimate, EstimateFlag, EstimateSource};
pub use reference::{ObjectKind, Profile, WaterlineObservation, WaterlineSpec};

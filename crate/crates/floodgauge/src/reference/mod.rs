//! Reference-object height tables and the waterline-to-depth calculus.
//!
//! Every supported street object carries an ordered ladder of named landmarks
//! measured from the ground (knee, door bottom, sign bottom, ...). A
//! [`WaterlineObservation`] states where the water sits on such an object;
//! [`depth_from_observation`] turns it into a [`DepthEstimate`] without any
//! model in the loop.
//!
//! Height data is grouped into named profiles. The default `appendix1`
//! profile holds the height set the estimation prompt ships with; the
//! alternate `tables` profile holds the published averages, which differ in
//! the women's shoulder height (1.3 m instead of 1.4 m) and omit the window
//! landmarks. Custom profiles load from a JSON file (see [`Profile::from_json_str`]).

mod profiles;

pub use profiles::PROFILE_APPENDIX1;
pub use profiles::PROFILE_TABLES;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{DepthEstimate, EstimateSource};

/// Closed set of reference-object categories.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ObjectKind {
    HumanMale,
    HumanFemale,
    Sedan,
    Truck,
    Suv,
    Bus,
    StopSign,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 7] = [
        ObjectKind::HumanMale,
        ObjectKind::HumanFemale,
        ObjectKind::Sedan,
        ObjectKind::Truck,
        ObjectKind::Suv,
        ObjectKind::Bus,
        ObjectKind::StopSign,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectKind::HumanMale => "HumanMale",
            ObjectKind::HumanFemale => "HumanFemale",
            ObjectKind::Sedan => "Sedan",
            ObjectKind::Truck => "Truck",
            ObjectKind::Suv => "Suv",
            ObjectKind::Bus => "Bus",
            ObjectKind::StopSign => "StopSign",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named height on an object, measured from the ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub name: String,
    pub height_m: f64,
}

/// Ordered landmark ladder for one object kind.
///
/// Invariants (checked by [`LandmarkTable::validate`]): the first landmark is
/// `Ground` at 0.0, heights strictly increase, and the last landmark is the
/// total object height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkTable {
    pub kind: ObjectKind,
    pub profile_id: String,
    pub landmarks: Vec<Landmark>,
}

pub const GROUND: &str = "Ground";

#[derive(Debug, Error, PartialEq)]
pub enum ReferenceError {
    #[error("unknown profile `{0}` (built-ins: appendix1, tables)")]
    UnknownProfile(String),
    #[error("unknown landmark `{name}` for {kind}")]
    UnknownLandmark { kind: ObjectKind, name: String },
    #[error("fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("landmark `{lower}` is not below `{upper}`")]
    LandmarkOrder { lower: String, upper: String },
    #[error("exposed height {exposed_m} m exceeds total height {total_m} m of {kind}")]
    ExposedExceedsTotal {
        kind: ObjectKind,
        exposed_m: f64,
        total_m: f64,
    },
    #[error("exposed height {0} m is negative")]
    NegativeExposed(f64),
    #[error("invalid landmark table for {kind}: {reason}")]
    InvalidTable { kind: ObjectKind, reason: String },
    #[error("invalid profile data: {0}")]
    InvalidProfile(String),
}

impl LandmarkTable {
    /// Ground-referenced height of a named landmark.
    pub fn height_of(&self, name: &str) -> Result<f64, ReferenceError> {
        self.landmarks
            .iter()
            .find(|l| l.name == name)
            .map(|l| l.height_m)
            .ok_or_else(|| ReferenceError::UnknownLandmark {
                kind: self.kind,
                name: name.to_string(),
            })
    }

    /// Height of the last (topmost) landmark.
    pub fn total_height_m(&self) -> f64 {
        self.landmarks.last().map(|l| l.height_m).unwrap_or(0.0)
    }

    fn index_of(&self, name: &str) -> Result<usize, ReferenceError> {
        self.landmarks
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| ReferenceError::UnknownLandmark {
                kind: self.kind,
                name: name.to_string(),
            })
    }

    /// Checks the ground-start / strictly-increasing invariants.
    pub fn validate(&self) -> Result<(), ReferenceError> {
        let first = self.landmarks.first().ok_or_else(|| ReferenceError::InvalidTable {
            kind: self.kind,
            reason: "empty landmark list".into(),
        })?;
        if first.name != GROUND || first.height_m != 0.0 {
            return Err(ReferenceError::InvalidTable {
                kind: self.kind,
                reason: format!(
                    "first landmark must be {GROUND} at 0.0, got {} at {}",
                    first.name, first.height_m
                ),
            });
        }
        let mut names = BTreeSet::new();
        for pair in self.landmarks.windows(2) {
            if pair[1].height_m <= pair[0].height_m {
                return Err(ReferenceError::InvalidTable {
                    kind: self.kind,
                    reason: format!(
                        "heights must strictly increase: {} ({}) then {} ({})",
                        pair[0].name, pair[0].height_m, pair[1].name, pair[1].height_m
                    ),
                });
            }
        }
        for l in &self.landmarks {
            if !l.height_m.is_finite() || l.height_m < 0.0 {
                return Err(ReferenceError::InvalidTable {
                    kind: self.kind,
                    reason: format!("non-finite or negative height for {}", l.name),
                });
            }
            if !names.insert(l.name.as_str()) {
                return Err(ReferenceError::InvalidTable {
                    kind: self.kind,
                    reason: format!("duplicate landmark name {}", l.name),
                });
            }
        }
        Ok(())
    }
}

/// A complete, validated set of landmark tables (one per object kind).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    id: String,
    tables: BTreeMap<ObjectKind, LandmarkTable>,
}

impl Profile {
    /// Resolves a built-in profile by identifier.
    pub fn builtin(id: &str) -> Result<&'static Profile, ReferenceError> {
        match id {
            "appendix1" => Ok(&PROFILE_APPENDIX1),
            "tables" => Ok(&PROFILE_TABLES),
            other => Err(ReferenceError::UnknownProfile(other.to_string())),
        }
    }

    /// The default profile (the height set the shipped prompt uses).
    pub fn default_profile() -> &'static Profile {
        &PROFILE_APPENDIX1
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn table(&self, kind: ObjectKind) -> &LandmarkTable {
        // construction guarantees a table per kind
        &self.tables[&kind]
    }

    pub fn tables(&self) -> impl Iterator<Item = &LandmarkTable> {
        self.tables.values()
    }

    /// Builds a profile from `(kind, [(name, height_m)...])` entries. A
    /// `Ground` landmark at 0.0 is prepended when absent. Every object kind
    /// must be covered and every table must satisfy its invariants.
    pub fn from_entries(
        id: impl Into<String>,
        entries: Vec<(ObjectKind, Vec<(String, f64)>)>,
    ) -> Result<Profile, ReferenceError> {
        let id = id.into();
        let mut tables = BTreeMap::new();
        for (kind, raw) in entries {
            let mut landmarks: Vec<Landmark> = Vec::with_capacity(raw.len() + 1);
            if raw.first().map(|(n, _)| n.as_str()) != Some(GROUND) {
                landmarks.push(Landmark {
                    name: GROUND.to_string(),
                    height_m: 0.0,
                });
            }
            landmarks.extend(raw.into_iter().map(|(name, height_m)| Landmark { name, height_m }));
            let table = LandmarkTable {
                kind,
                profile_id: id.clone(),
                landmarks,
            };
            table.validate()?;
            if tables.insert(kind, table).is_some() {
                return Err(ReferenceError::InvalidProfile(format!(
                    "duplicate table for {kind}"
                )));
            }
        }
        for kind in ObjectKind::ALL {
            if !tables.contains_key(&kind) {
                return Err(ReferenceError::InvalidProfile(format!(
                    "missing table for {kind}"
                )));
            }
        }
        Ok(Profile { id, tables })
    }

    /// Loads a profile from its JSON file form:
    ///
    /// ```json
    /// { "profile_id": "custom",
    ///   "objects": { "Sedan": [["GroundClearance", 0.2], ["Roof", 1.4]], ... } }
    /// ```
    pub fn from_json_str(json: &str) -> Result<Profile, ReferenceError> {
        #[derive(Deserialize)]
        struct ProfileFile {
            profile_id: String,
            objects: BTreeMap<ObjectKind, Vec<(String, f64)>>,
        }
        let file: ProfileFile = serde_json::from_str(json)
            .map_err(|e| ReferenceError::InvalidProfile(e.to_string()))?;
        Profile::from_entries(file.profile_id, file.objects.into_iter().collect())
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Profile, ReferenceError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ReferenceError::InvalidProfile(format!("{}: {e}", path.display()))
        })?;
        Profile::from_json_str(&text)
    }
}

/// Where the water sits on a reference object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaterlineSpec {
    /// Water exactly at a named landmark.
    AtLandmark { landmark: String },
    /// Water between two landmarks, at `fraction` of the way up from `lower`.
    Between {
        lower: String,
        upper: String,
        fraction: f64,
    },
    /// Object submerged from above; only `exposed_m` of it is visible.
    SubmergedFromTop { exposed_m: f64 },
}

/// A structured statement of the waterline on one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterlineObservation {
    pub kind: ObjectKind,
    pub spec: WaterlineSpec,
}

impl WaterlineObservation {
    pub fn at(kind: ObjectKind, landmark: &str) -> Self {
        Self {
            kind,
            spec: WaterlineSpec::AtLandmark {
                landmark: landmark.to_string(),
            },
        }
    }

    pub fn between(kind: ObjectKind, lower: &str, upper: &str, fraction: f64) -> Self {
        Self {
            kind,
            spec: WaterlineSpec::Between {
                lower: lower.to_string(),
                upper: upper.to_string(),
                fraction,
            },
        }
    }

    pub fn submerged_from_top(kind: ObjectKind, exposed_m: f64) -> Self {
        Self {
            kind,
            spec: WaterlineSpec::SubmergedFromTop { exposed_m },
        }
    }
}

/// Looks up a kind's table in a named built-in profile.
pub fn landmark_table(
    kind: ObjectKind,
    profile_id: &str,
) -> Result<&'static LandmarkTable, ReferenceError> {
    Ok(Profile::builtin(profile_id)?.table(kind))
}

/// Ground-referenced height of a landmark, exactly as tabulated.
pub fn depth_at_landmark(table: &LandmarkTable, landmark: &str) -> Result<f64, ReferenceError> {
    table.height_of(landmark)
}

/// Linear interpolation between two landmarks of the same table.
///
/// Returns `h_lower + fraction * (h_upper - h_lower)`; `fraction` 0 and 1 hit
/// the endpoints exactly.
pub fn depth_between(
    table: &LandmarkTable,
    lower: &str,
    upper: &str,
    fraction: f64,
) -> Result<f64, ReferenceError> {
    if !(0.0..=1.0).contains(&fraction) || fraction.is_nan() {
        return Err(ReferenceError::InvalidFraction(fraction));
    }
    let lo_idx = table.index_of(lower)?;
    let hi_idx = table.index_of(upper)?;
    if lo_idx >= hi_idx {
        return Err(ReferenceError::LandmarkOrder {
            lower: lower.to_string(),
            upper: upper.to_string(),
        });
    }
    let h_lo = table.landmarks[lo_idx].height_m;
    let h_hi = table.landmarks[hi_idx].height_m;
    if fraction == 0.0 {
        return Ok(h_lo);
    }
    if fraction == 1.0 {
        return Ok(h_hi);
    }
    Ok(h_lo + fraction * (h_hi - h_lo))
}

/// Turns a waterline observation into a rule-engine [`DepthEstimate`].
pub fn depth_from_observation(
    obs: &WaterlineObservation,
    profile: &Profile,
) -> Result<DepthEstimate, ReferenceError> {
    let table = profile.table(obs.kind);
    let (value_m, rationale) = match &obs.spec {
        WaterlineSpec::AtLandmark { landmark } => {
            let h = depth_at_landmark(table, landmark)?;
            (
                h,
                format!("water at the {landmark} landmark of {} ({h} m above ground)", obs.kind),
            )
        }
        WaterlineSpec::Between {
            lower,
            upper,
            fraction,
        } => {
            let h = depth_between(table, lower, upper, *fraction)?;
            let h_lo = table.height_of(lower)?;
            let h_hi = table.height_of(upper)?;
            (
                h,
                format!(
                    "water {fraction:.2} of the way from {lower} ({h_lo} m) to {upper} ({h_hi} m) on {}",
                    obs.kind
                ),
            )
        }
        WaterlineSpec::SubmergedFromTop { exposed_m } => {
            if *exposed_m < 0.0 || exposed_m.is_nan() {
                return Err(ReferenceError::NegativeExposed(*exposed_m));
            }
            let total = table.total_height_m();
            if *exposed_m > total {
                return Err(ReferenceError::ExposedExceedsTotal {
                    kind: obs.kind,
                    exposed_m: *exposed_m,
                    total_m: total,
                });
            }
            (
                total - exposed_m,
                format!(
                    "{} total height {total} m with {exposed_m} m exposed above the water",
                    obs.kind
                ),
            )
        }
    };
    DepthEstimate::new(value_m, rationale, EstimateSource::RuleEngine, BTreeSet::new())
        .map_err(|e| ReferenceError::InvalidTable {
            kind: obs.kind,
            reason: e.to_string(),
        })
}

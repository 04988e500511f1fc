//! Deterministic generation of the estimation prompt from a landmark profile.
//!
//! The instruction text is rendered from the profile's tables rather than
//! stored as a string, so the heights the prompt quotes can never drift from
//! the heights the rule engine uses. The `appendix1` rendering is pinned by a
//! snapshot test; that snapshot is the contract for number formatting.

use sha2::{Digest, Sha256};

use crate::reference::{LandmarkTable, ObjectKind, Profile, ReferenceError, GROUND};

/// Rendered instruction text plus its content hash.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    sections: Vec<String>,
    profile_id: String,
    checksum: String,
}

impl PromptTemplate {
    /// Ordered text blocks (header, one block per object group, directives).
    pub fn sections(&self) -> &[String] {
        &self.sections
    }

    pub fn profile_id(&self) -> &str {
        &self.profile_id
    }

    /// Hex SHA-256 of the rendered bytes; used as a cache-key component.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    /// Full prompt text, newline-joined, with a trailing newline.
    pub fn rendered(&self) -> String {
        let mut text = self.sections.join("\n");
        text.push('\n');
        text
    }

    /// The block describing `kind`, when one exists.
    pub fn object_block(&self, kind: ObjectKind) -> Option<&str> {
        let prefix = match kind {
            ObjectKind::HumanMale | ObjectKind::HumanFemale => "For human",
            ObjectKind::Sedan => "For sedan cars",
            ObjectKind::Truck => "For a truck car",
            ObjectKind::Suv => "For a SUV car",
            ObjectKind::Bus => "For a bus",
            ObjectKind::StopSign => "For street signage",
        };
        self.sections
            .iter()
            .find(|s| s.starts_with(prefix))
            .map(String::as_str)
    }
}

/// Stable hash of the template's rendered bytes.
pub fn prompt_checksum(template: &PromptTemplate) -> &str {
    template.checksum()
}

/// Formats a height with one decimal, or two where the value needs them
/// (e.g. `1.75`). Values are rounded to whole centimeters first.
pub fn format_height(height_m: f64) -> String {
    let cm = (height_m * 100.0).round() as i64;
    let whole = cm / 100;
    let frac = cm % 100;
    if frac % 10 == 0 {
        format!("{whole}.{}", frac / 10)
    } else {
        format!("{whole}.{frac:02}")
    }
}

/// Builds the full estimation prompt from a named built-in profile.
pub fn build_prompt_named(profile_id: &str) -> Result<PromptTemplate, ReferenceError> {
    Ok(build_prompt(Profile::builtin(profile_id)?))
}

/// Builds the full estimation prompt from a profile.
pub fn build_prompt(profile: &Profile) -> PromptTemplate {
    let sections = vec![
        "Flood related photos will be an input. Estimate the floodwater depth based on \
         visible reference points in this image. In estimating the flood water depth, \
         consider the following height metrics for common features:"
            .to_string(),
        human_block(profile),
        vehicle_block(profile.table(ObjectKind::Sedan), "For sedan cars"),
        vehicle_block(profile.table(ObjectKind::Truck), "For a truck car"),
        vehicle_block(profile.table(ObjectKind::Suv), "For a SUV car"),
        vehicle_block(profile.table(ObjectKind::Bus), "For a bus"),
        signage_block(profile.table(ObjectKind::StopSign)),
        "Based on the water height against the different parts of each features, and the \
         average height metrics, estimate the depth of the water."
            .to_string(),
        "Provide the estimated floodwater depth in meters.".to_string(),
        "Give estimation as a discrete number and not interval.".to_string(),
    ];
    let mut text = sections.join("\n");
    text.push('\n');
    let checksum = hex::encode(Sha256::digest(text.as_bytes()));
    PromptTemplate {
        sections,
        profile_id: profile.id().to_string(),
        checksum,
    }
}

fn human_metrics(table: &LandmarkTable) -> String {
    let mut parts = vec![format!(
        "Total height = {}m",
        format_height(table.total_height_m())
    )];
    let last = table.landmarks.len() - 1;
    for l in &table.landmarks[..last] {
        if l.name == GROUND {
            continue;
        }
        parts.push(format!("{} height = {}m", l.name, format_height(l.height_m)));
    }
    parts.join(", ")
}

fn human_block(profile: &Profile) -> String {
    format!(
        "For human, consider these height metrics: Men {}; Women: {}.",
        human_metrics(profile.table(ObjectKind::HumanMale)),
        human_metrics(profile.table(ObjectKind::HumanFemale)),
    )
}

const VEHICLE_PHRASE_ORDER: [(&str, &str); 5] = [
    ("Roof", "the overall height from the ground to the roof is"),
    ("GroundClearance", "the ground clearance is approximately"),
    ("DoorBottom", "the height from the ground to the bottom of the door is"),
    ("HoodTop", "the height from the ground to the top of the hood is"),
    ("WindowBottom", "the height from the ground to the bottom of the window is"),
];

fn vehicle_block(table: &LandmarkTable, label: &str) -> String {
    let mut phrases = Vec::new();
    for (name, phrase) in VEHICLE_PHRASE_ORDER {
        if let Ok(h) = table.height_of(name) {
            phrases.push(format!("{phrase} {} meters", format_height(h)));
        }
    }
    for l in &table.landmarks {
        if l.name == GROUND || VEHICLE_PHRASE_ORDER.iter().any(|(n, _)| *n == l.name) {
            continue;
        }
        phrases.push(format!(
            "the height from the ground to the {} is {} meters",
            l.name,
            format_height(l.height_m)
        ));
    }
    format!("{label}, consider these height metrics: {}.", phrases.join(", "))
}

fn signage_block(table: &LandmarkTable) -> String {
    let mut sentences = Vec::new();
    match (table.height_of("SignBottom"), table.height_of("SignTop")) {
        (Ok(bottom), Ok(top)) => {
            let plaque = format_height(top - bottom);
            sentences.push(format!(
                "For street signage (including stop signs), the dimension of a stop sign \
                 (the sign is a red octagon) is {plaque}m by {plaque}m, while the vertical \
                 measurement from ground to the top of the stop sign, indicating the total \
                 height of the stop sign plaque including the pole is {}m.",
                format_height(top)
            ));
            sentences.push(format!(
                "The height of the bottom of the sign from the ground is {}m.",
                format_height(bottom)
            ));
        }
        _ => {
            let mut phrases = Vec::new();
            for l in &table.landmarks {
                if l.name == GROUND {
                    continue;
                }
                phrases.push(format!(
                    "the height from the ground to the {} is {} meters",
                    l.name,
                    format_height(l.height_m)
                ));
            }
            sentences.push(format!(
                "For street signage (including stop signs), consider these height metrics: {}.",
                phrases.join(", ")
            ));
        }
    }
    sentences.push("Avoid the reflection of the stop sign in the water.".to_string());
    sentences.push("Also, use any other features as a secondary reference.".to_string());
    sentences.join(" ")
}

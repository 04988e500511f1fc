//! Built-in landmark profiles.
//!
//! `appendix1` is the height set embedded in the shipped estimation prompt.
//! `tables` is the alternate published-average set; it differs in the women's
//! shoulder height (1.3 m vs 1.4 m), lacks window-bottom landmarks for sedan
//! and truck, and names the bus 2.0 m line `HoodTop` per its source table.
//! The stop-sign plaque spans SignBottom..SignTop (0.9 m); the SUV has no
//! published window landmark in either set.

use std::sync::LazyLock;

use super::{ObjectKind, Profile};

fn entries(raw: &[(ObjectKind, &[(&str, f64)])]) -> Vec<(ObjectKind, Vec<(String, f64)>)> {
    raw.iter()
        .map(|(kind, landmarks)| {
            (
                *kind,
                landmarks
                    .iter()
                    .map(|(n, h)| (n.to_string(), *h))
                    .collect(),
            )
        })
        .collect()
}

pub static PROFILE_APPENDIX1: LazyLock<Profile> = LazyLock::new(|| {
    Profile::from_entries(
        "appendix1",
        entries(&[
            (
                ObjectKind::HumanMale,
                &[("Knee", 0.4), ("Waist", 0.9), ("Shoulder", 1.4), ("Head", 1.75)],
            ),
            (
                ObjectKind::HumanFemale,
                &[("Knee", 0.4), ("Waist", 0.8), ("Shoulder", 1.4), ("Head", 1.6)],
            ),
            (
                ObjectKind::Sedan,
                &[
                    ("GroundClearance", 0.2),
                    ("DoorBottom", 0.6),
                    ("WindowBottom", 0.8),
                    ("HoodTop", 1.0),
                    ("Roof", 1.4),
                ],
            ),
            (
                ObjectKind::Truck,
                &[
                    ("GroundClearance", 0.5),
                    ("DoorBottom", 0.8),
                    ("HoodTop", 1.3),
                    ("WindowBottom", 1.4),
                    ("Roof", 1.8),
                ],
            ),
            (
                ObjectKind::Suv,
                &[
                    ("GroundClearance", 0.3),
                    ("DoorBottom", 0.7),
                    ("HoodTop", 1.0),
                    ("Roof", 1.7),
                ],
            ),
            (
                ObjectKind::Bus,
                &[
                    ("GroundClearance", 0.7),
                    ("DoorBottom", 1.0),
                    ("WindowBottom", 2.0),
                    ("Roof", 3.2),
                ],
            ),
            (
                ObjectKind::StopSign,
                &[("SignBottom", 2.0), ("SignTop", 2.9)],
            ),
        ]),
    )
    .expect("built-in appendix1 profile is valid")
});

pub static PROFILE_TABLES: LazyLock<Profile> = LazyLock::new(|| {
    Profile::from_entries(
        "tables",
        entries(&[
            (
                ObjectKind::HumanMale,
                &[("Knee", 0.4), ("Waist", 0.9), ("Shoulder", 1.4), ("Head", 1.75)],
            ),
            (
                ObjectKind::HumanFemale,
                &[("Knee", 0.4), ("Waist", 0.8), ("Shoulder", 1.3), ("Head", 1.6)],
            ),
            (
                ObjectKind::Sedan,
                &[
                    ("GroundClearance", 0.2),
                    ("DoorBottom", 0.6),
                    ("HoodTop", 1.0),
                    ("Roof", 1.4),
                ],
            ),
            (
                ObjectKind::Truck,
                &[
                    ("GroundClearance", 0.5),
                    ("DoorBottom", 0.8),
                    ("HoodTop", 1.3),
                    ("Roof", 1.8),
                ],
            ),
            // The published vehicle table has no SUV column; the prompt's SUV
            // heights are reused so the profile stays total over all kinds.
            (
                ObjectKind::Suv,
                &[
                    ("GroundClearance", 0.3),
                    ("DoorBottom", 0.7),
                    ("HoodTop", 1.0),
                    ("Roof", 1.7),
                ],
            ),
            (
                ObjectKind::Bus,
                &[
                    ("GroundClearance", 0.7),
                    ("DoorBottom", 1.0),
                    ("HoodTop", 2.0),
                    ("Roof", 3.2),
                ],
            ),
            (
                ObjectKind::StopSign,
                &[("SignBottom", 2.0), ("SignTop", 2.9)],
            ),
        ]),
    )
    .expect("built-in tables profile is valid")
});

//! Depth estimates and their provenance.
//!
//! A [`DepthEstimate`] is produced either by the deterministic reference
//! engine ([`crate::reference`]) or by extracting the concluding value from a
//! model response ([`crate::parse`]). Both paths share the same plausibility
//! band: depths outside `[0, 10]` meters are rejected at construction.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper edge of the accepted depth band, in meters.
pub const MAX_PLAUSIBLE_DEPTH_M: f64 = 10.0;

/// Depths above this are kept but flagged [`EstimateFlag::LowPlausibility`].
pub const LOW_PLAUSIBILITY_DEPTH_M: f64 = 5.0;

#[derive(Debug, Clone, Copy, Error, PartialEq)]
#[error("implausible depth {0} m: outside [0, {MAX_PLAUSIBLE_DEPTH_M}] m")]
pub struct ImplausibleDepth(pub f64);

/// Quality annotations attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimateFlag {
    /// The selected statement was an interval; the value is its midpoint.
    RangeCollapsed,
    /// The selected statement used centimeters and was converted to meters.
    UnitConverted,
    /// More than one qualifying depth statement was found in the text.
    MultipleCandidates,
    /// Value exceeds the low-plausibility threshold but is still in band.
    LowPlausibility,
}

/// Who produced an estimate: the deterministic rule engine or a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EstimateSource {
    RuleEngine,
    Model(String),
}

impl EstimateSource {
    pub fn as_str(&self) -> &str {
        match self {
            EstimateSource::RuleEngine => "rule-engine",
            EstimateSource::Model(id) => id,
        }
    }
}

impl fmt::Display for EstimateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for EstimateSource {
    fn from(s: &str) -> Self {
        if s == "rule-engine" {
            EstimateSource::RuleEngine
        } else {
            EstimateSource::Model(s.to_string())
        }
    }
}

impl Serialize for EstimateSource {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EstimateSource {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(EstimateSource::from(s.as_str()))
    }
}

/// A floodwater depth in meters plus the reasoning that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    pub value_m: f64,
    pub rationale: String,
    pub source: EstimateSource,
    pub flags: BTreeSet<EstimateFlag>,
}

impl DepthEstimate {
    /// Builds an estimate, enforcing the `[0, 10]` m plausibility band and
    /// auto-flagging values above [`LOW_PLAUSIBILITY_DEPTH_M`].
    pub fn new(
        value_m: f64,
        rationale: impl Into<String>,
        source: EstimateSource,
        mut flags: BTreeSet<EstimateFlag>,
    ) -> Result<Self, ImplausibleDepth> {
        if !value_m.is_finite() || !(0.0..=MAX_PLAUSIBLE_DEPTH_M).contains(&value_m) {
            return Err(ImplausibleDepth(value_m));
        }
        if value_m > LOW_PLAUSIBILITY_DEPTH_M {
            flags.insert(EstimateFlag::LowPlausibility);
        }
        Ok(Self {
            value_m,
            rationale: rationale.into(),
            source,
            flags,
        })
    }

    pub fn flag_names(&self) -> Vec<&'static str> {
        self.flags
            .iter()
            .map(|f| match f {
                EstimateFlag::RangeCollapsed => "RangeCollapsed",
                EstimateFlag::UnitConverted => "UnitConverted",
                EstimateFlag::MultipleCandidates => "MultipleCandidates",
                EstimateFlag::LowPlausibility => "LowPlausibility",
            })
            .collect()
    }
}

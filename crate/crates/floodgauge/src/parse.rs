//! Extraction of the concluding depth value from model response text.
//!
//! The model is instructed to finish with a discrete depth in meters, after
//! free-form reasoning that quotes many intermediate heights. The selection
//! rule: a *depth statement* is a number adjacent to a unit token (`m`,
//! `meter(s)`, `cm`, `centimeter(s)`) inside a sentence that mentions depth
//! (`depth`, `floodwater`, or `water level`). The last such statement wins.
//! Centimeter values convert to meters; a trailing `between A and B` interval
//! collapses to its midpoint.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::estimate::{DepthEstimate, EstimateFlag, EstimateSource, ImplausibleDepth};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("no depth statement found in response text")]
    NoDepthFound,
    #[error(transparent)]
    ImplausibleDepth(#[from] ImplausibleDepth),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
}

const DEPTH_KEYWORDS: [&str; 3] = ["depth", "floodwater", "water level"];

static SCALAR_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(\d+(?:\.\d+)?)\s*(centimeters?|meters?|cm|m)\b").unwrap()
});

static INTERVAL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)between\s+(\d+(?:\.\d+)?)\s*(centimeters?|meters?|cm|m)?\s+and\s+(\d+(?:\.\d+)?)\s*(centimeters?|meters?|cm|m)\b",
    )
    .unwrap()
});

/// Converts a value in the given unit to meters. Centimeters multiply by
/// 0.01 exactly; meter spellings pass through.
pub fn normalize_unit(value: f64, unit: &str) -> Result<f64, ParseError> {
    match unit.to_ascii_lowercase().as_str() {
        "m" | "meter" | "meters" => Ok(value),
        "cm" | "centimeter" | "centimeters" => Ok(value * 0.01),
        other => Err(ParseError::UnknownUnit(other.to_string())),
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value_m: f64,
    unit_converted: bool,
    from_interval: bool,
}

/// Splits on `.` `!` `?` and newlines; a `.` between two digits is part of a
/// decimal number, not a boundary.
fn sentences(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, b) in bytes.iter().enumerate() {
        let boundary = match b {
            b'!' | b'?' | b'\n' => true,
            b'.' => {
                let prev_digit = i > 0 && bytes[i - 1].is_ascii_digit();
                let next_digit = i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit();
                !(prev_digit && next_digit)
            }
            _ => false,
        };
        if boundary {
            if i > start {
                out.push(&text[start..=i.min(text.len() - 1)]);
            }
            start = i + 1;
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out.into_iter().filter(|s| !s.trim().is_empty()).collect()
}

fn mentions_depth(sentence: &str) -> bool {
    let lower = sentence.to_ascii_lowercase();
    DEPTH_KEYWORDS.iter().any(|k| lower.contains(k))
}

// Skip matches glued to a preceding ',' '.' or digit (e.g. the "000" of
// "1,000") so fragments of unsupported number formats are not misread.
fn glued_to_prev_number(sentence: &str, match_start: usize) -> bool {
    sentence[..match_start]
        .chars()
        .next_back()
        .is_some_and(|c| c == ',' || c == '.' || c.is_ascii_digit())
}

fn scan_sentence(sentence: &str, out: &mut Vec<Candidate>) -> Result<(), ParseError> {
    let mut local: Vec<(usize, Candidate)> = Vec::new();
    let mut interval_spans: Vec<(usize, usize)> = Vec::new();

    for caps in INTERVAL_RE.captures_iter(sentence) {
        let whole = caps.get(0).unwrap();
        let lower: f64 = caps[1].parse().unwrap();
        let upper: f64 = caps[3].parse().unwrap();
        let upper_unit = &caps[4];
        let lower_unit = caps.get(2).map(|m| m.as_str()).unwrap_or(upper_unit);
        let lower_m = normalize_unit(lower, lower_unit)?;
        let upper_m = normalize_unit(upper, upper_unit)?;
        interval_spans.push((whole.start(), whole.end()));
        local.push((
            whole.start(),
            Candidate {
                value_m: (lower_m + upper_m) / 2.0,
                unit_converted: lower_unit.to_ascii_lowercase().starts_with('c')
                    || upper_unit.to_ascii_lowercase().starts_with('c'),
                from_interval: true,
            },
        ));
    }

    for caps in SCALAR_RE.captures_iter(sentence) {
        let whole = caps.get(0).unwrap();
        if interval_spans
            .iter()
            .any(|&(s, e)| whole.start() >= s && whole.start() < e)
        {
            continue;
        }
        if glued_to_prev_number(sentence, whole.start()) {
            continue;
        }
        let value: f64 = caps[1].parse().unwrap();
        let unit = &caps[2];
        local.push((
            whole.start(),
            Candidate {
                value_m: normalize_unit(value, unit)?,
                unit_converted: unit.to_ascii_lowercase().starts_with('c'),
                from_interval: false,
            },
        ));
    }

    local.sort_by_key(|(pos, _)| *pos);
    out.extend(local.into_iter().map(|(_, c)| c));
    Ok(())
}

/// Extracts the concluding depth statement from `text`.
///
/// Returns the last qualifying statement's value in meters, with flags for
/// unit conversion, interval collapse, and multiple candidates. The full
/// response text is kept verbatim as the estimate's rationale.
pub fn parse_depth(text: &str, source: EstimateSource) -> Result<DepthEstimate, ParseError> {
    let mut candidates = Vec::new();
    for sentence in sentences(text) {
        if mentions_depth(sentence) {
            scan_sentence(sentence, &mut candidates)?;
        }
    }
    let selected = *candidates.last().ok_or(ParseError::NoDepthFound)?;

    let mut flags = BTreeSet::new();
    if selected.unit_converted {
        flags.insert(EstimateFlag::UnitConverted);
    }
    if selected.from_interval {
        flags.insert(EstimateFlag::RangeCollapsed);
    }
    if candidates.len() > 1 {
        flags.insert(EstimateFlag::MultipleCandidates);
    }
    Ok(DepthEstimate::new(selected.value_m, text, source, flags)?)
}

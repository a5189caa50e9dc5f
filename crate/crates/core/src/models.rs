// SPDX-License-Identifier: MIT
//! Example models and pattern files shipped with the crate.
//!
//! Each model file opens with a comment separating the structure given in
//! its source narrative from the parts reconstructed for this crate.

use crate::modelio::{parse_model, parse_pattern};
use crate::patterns::Pattern;
use crate::scm::Scm;

/// `(name, source text)` for every bundled model.
pub const BUNDLED_MODELS: &[(&str, &str)] = &[
    ("titus", include_str!("../models/titus.scm.txt")),
    ("uav_weather", include_str!("../models/uav_weather.scm.txt")),
    ("uav_attacker", include_str!("../models/uav_attacker.scm.txt")),
    ("uav_attacker_ids", include_str!("../models/uav_attacker_ids.scm.txt")),
    ("uber", include_str!("../models/uber.scm.txt")),
    ("bad_weather_raci", include_str!("../models/bad_weather_raci.scm.txt")),
];

/// `(name, source text)` for every bundled pattern file.
pub const BUNDLED_PATTERNS: &[(&str, &str)] =
    &[("lindberg", include_str!("../patterns/lindberg.pat.txt")), ("raci", include_str!("../patterns/raci.pat.txt"))];

pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED_MODELS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parses a bundled model by name.
pub fn bundled(name: &str) -> Option<Scm> {
    bundled_source(name).map(|s| parse_model(s).expect("bundled models parse"))
}

pub fn bundled_pattern(name: &str) -> Option<Pattern> {
    BUNDLED_PATTERNS.iter().find(|(n, _)| *n == name).map(|(_, s)| parse_pattern(s).expect("bundled patterns parse"))
}

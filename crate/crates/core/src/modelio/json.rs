// SPDX-License-Identifier: MIT
//! Canonical JSON: sorted object keys, two-space indentation, trailing newline.

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::ModelIoError;

pub fn to_json<T: Serialize>(value: &T) -> String {
    // `serde_json::Value` keeps object keys in a sorted map.
    let v = serde_json::to_value(value).expect("model types serialize to JSON");
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Parses and validates; errors name the offending location as `$.a.b[2]`.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, ModelIoError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| schema(e.path().to_string(), e.inner()))?;
    de.end().map_err(|e| schema(".".into(), &e))?;
    Ok(value)
}

fn schema(path: String, e: &serde_json::Error) -> ModelIoError {
    let path = if path == "." { "$".to_string() } else { format!("$.{path}") };
    ModelIoError::Schema { path, message: e.to_string() }
}

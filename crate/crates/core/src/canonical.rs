//! Canonical JSON: object keys sorted, no insignificant whitespace.
//!
//! `serde_json::Value` keeps objects in a `BTreeMap` (the `preserve_order`
//! feature is not enabled), so routing through `Value` sorts every level.

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("malformed json: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("input is valid json but not in canonical form")]
    NotCanonical,
}

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("in-crate types always serialize");
    serde_json::to_string(&v).expect("json values always serialize")
}

pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    to_canonical_string(value).into_bytes()
}

/// Parses `text` and insists that it is byte-identical to the canonical
/// re-encoding of the parsed value.
pub fn from_canonical_str<T: Serialize + DeserializeOwned>(text: &str) -> Result<T, CanonicalError> {
    let value: T = serde_json::from_str(text)?;
    if to_canonical_string(&value) != text {
        return Err(CanonicalError::NotCanonical);
    }
    Ok(value)
}

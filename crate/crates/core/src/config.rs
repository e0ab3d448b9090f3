//! Partial JSON configs laid over a struct's defaults, with errors that name
//! the offending key.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Parses `text` as a JSON object whose keys override fields of `defaults`.
/// Unknown keys and ill-typed values are reported by key name.
pub fn overlay_json<T: Serialize + DeserializeOwned>(defaults: &T, text: &str) -> Result<T> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("config is not valid JSON: {e}")))?;
    let Value::Object(obj) = value else {
        return Err(Error::Format("config must be a JSON object".into()));
    };
    let base = serde_json::to_value(defaults).map_err(|e| Error::Format(e.to_string()))?;
    let Value::Object(base) = base else {
        return Err(Error::Format("config type does not serialize to an object".into()));
    };
    let mut merged = base.clone();
    for (key, v) in obj {
        if !base.contains_key(&key) {
            return Err(Error::Config {
                key,
                message: "unknown key".into(),
            });
        }
        // Check each key alone against the defaults so a type error is pinned to it.
        let mut probe = base.clone();
        probe.insert(key.clone(), v.clone());
        serde_json::from_value::<T>(Value::Object(probe)).map_err(|e| Error::Config {
            key: key.clone(),
            message: e.to_string(),
        })?;
        merged.insert(key, v);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Format(e.to_string()))
}

//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Command-line flags are applied on top of the file. Each command
//! declares the keys it accepts and anything else is rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use affect_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {}: expected key = value",
                n + 1
            )));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("config line {}: empty key", n + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::Config(format!(
                "config line {}: duplicate key '{k}'",
                n + 1
            )));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

/// Field names of a serializable struct, read from its default value.
pub fn field_names<T: Serialize + Default>() -> Vec<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(map)) => map.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

impl RunConfig {
    /// File values (when `path` is given) overridden by `overrides`.
    pub fn load(path: Option<&Path>, overrides: Vec<(String, String)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            values.extend(parse_flat(&text)?);
        }
        values.extend(overrides);
        Ok(Self { values })
    }

    pub fn from_pairs<K: Into<String>, V: Into<String>>(
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        Self {
            values: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("key '{key}': cannot parse '{v}': {e}")))
            })
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, command: &str, allowed: &[String]) -> Result<()> {
        match self.values.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::Config(format!(
                "unknown key '{k}' for command '{command}'"
            ))),
            None => Ok(()),
        }
    }

    /// Replaces fields of `base` named by keys in this config, parsing each
    /// value according to the field's current JSON type.
    pub fn overlay<T: Serialize + DeserializeOwned>(&self, base: &T) -> Result<T> {
        let Value::Object(mut map) =
            serde_json::to_value(base).map_err(|e| Error::Config(e.to_string()))?
        else {
            return Err(Error::Config("overlay target is not a struct".into()));
        };
        let keys: Vec<String> = map.keys().cloned().collect();
        for key in keys {
            let Some(raw) = self.get(&key) else { continue };
            let parsed = typed_value(&key, raw, &map[&key])?;
            map.insert(key, parsed);
        }
        serde_json::from_value(Value::Object(map))
            .map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> Value {
        Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect::<Map<_, _>>(),
        )
    }
}

fn typed_value(key: &str, raw: &str, current: &Value) -> Result<Value> {
    let bad = || Error::Config(format!("key '{key}': cannot parse '{raw}'"));
    Ok(match current {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad())?),
        Value::Number(n) if n.is_u64() => Value::from(raw.parse::<u64>().map_err(|_| bad())?),
        Value::Number(n) if n.is_i64() => Value::from(raw.parse::<i64>().map_err(|_| bad())?),
        Value::Number(_) => {
            let v: f64 = raw.parse().map_err(|_| bad())?;
            serde_json::Number::from_f64(v)
                .map(Value::Number)
                .ok_or_else(bad)?
        }
        _ => Value::String(raw.to_string()),
    })
}

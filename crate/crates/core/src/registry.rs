//! Name-keyed registries for interchangeable strategies.
//!
//! Optimizers, relevance reductions, emotion losses and metrics are each
//! selected at runtime by a string key from a config file or CLI flag. A
//! [`Registry`] maps those keys to constructor functions.

use crate::error::{Error, Result};

pub struct Registry<F> {
    kind: &'static str,
    entries: Vec<(&'static str, F)>,
}

impl<F> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers `entry` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, entry: F) -> &mut Self {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = entry,
            None => self.entries.push((name, entry)),
        }
        self
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown {} '{}' (known: {})",
                    self.kind,
                    name,
                    self.names().join(", ")
                ))
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| *n == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_replace() {
        let mut reg: Registry<fn() -> u8> = Registry::new("thing");
        reg.register("a", || 1).register("b", || 2);
        assert_eq!((reg.get("b").unwrap())(), 2);
        reg.register("b", || 3);
        assert_eq!((reg.get("b").unwrap())(), 3);
        assert_eq!(reg.names(), vec!["a", "b"]);
        let err = reg.get("zzz").err().unwrap();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("known: a, b"));
    }
}

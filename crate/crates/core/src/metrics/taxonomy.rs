//! Grouping of free-text emotion attributes into 26 classes plus "None".

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::data::NUM_CLASSES;
use crate::error::{Error, IngestKind, Result};

/// Class id assigned to attributes outside the table.
pub const NONE_CLASS: usize = NUM_CLASSES - 1;

const TABLE: &str = include_str!("../../data/taxonomy.csv");

#[derive(Clone, Debug, PartialEq)]
pub struct EmotionTaxonomy {
    pub class_names: Vec<String>,
    mapping: HashMap<String, usize>,
}

impl EmotionTaxonomy {
    /// Parses `class_id,class_name,attr,attr,...` rows.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: String| Error::ingest(IngestKind::Parse, m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("class_id,class_name,attributes") {
            return Err(Error::ingest(
                IngestKind::Header,
                "expected class_id,class_name,attributes",
            ));
        }
        let mut class_names = Vec::new();
        let mut mapping = HashMap::new();
        for line in lines {
            let mut cells = line.split(',').map(str::trim);
            let id: usize = cells
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad(format!("bad class id in '{line}'")))?;
            if id != class_names.len() {
                return Err(bad(format!("class ids must be consecutive, got {id}")));
            }
            let name = cells
                .next()
                .ok_or_else(|| bad(format!("missing class name in '{line}'")))?;
            class_names.push(name.to_string());
            for attr in cells.filter(|c| !c.is_empty()) {
                if mapping.insert(attr.to_lowercase(), id).is_some() {
                    return Err(bad(format!("attribute '{attr}' listed twice")));
                }
            }
        }
        if class_names.len() != NUM_CLASSES {
            return Err(bad(format!(
                "expected {NUM_CLASSES} classes, got {}",
                class_names.len()
            )));
        }
        Ok(Self {
            class_names,
            mapping,
        })
    }

    /// The bundled table.
    pub fn builtin() -> &'static EmotionTaxonomy {
        static TAX: OnceLock<EmotionTaxonomy> = OnceLock::new();
        TAX.get_or_init(|| EmotionTaxonomy::parse(TABLE).expect("bundled taxonomy is valid"))
    }

    /// Case-insensitive, trimmed lookup; unknown attributes map to
    /// [`NONE_CLASS`].
    pub fn map_attribute(&self, attribute: &str) -> usize {
        self.mapping
            .get(&attribute.trim().to_lowercase())
            .copied()
            .unwrap_or(NONE_CLASS)
    }

    pub fn num_attributes(&self) -> usize {
        self.mapping.len()
    }

    /// Attributes of class `id`, sorted.
    pub fn attributes_of(&self, id: usize) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .mapping
            .iter()
            .filter(|(_, c)| **c == id)
            .map(|(a, _)| a.as_str())
            .collect();
        out.sort_unstable();
        out
    }
}

pub fn map_attribute(attribute: &str) -> usize {
    EmotionTaxonomy::builtin().map_attribute(attribute)
}

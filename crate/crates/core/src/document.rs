use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One text record from one source dataset.
///
/// Field order here is the on-disk field order of shard files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: String,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            source: source.into(),
            url: None,
            meta: BTreeMap::new(),
        }
    }
}

//! JSON model archives.
//!
//! Floats are written in shortest round-trip form and parsed back exactly,
//! so a reloaded archive predicts bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::HarnessError;
use crate::dataio::DatasetSchema;
use crate::stacking::StackedEnsemble;

pub const FORMAT_VERSION: u32 = 1;
pub const KIND_STACKED: &str = "stacked_ensemble";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format_version: u32,
    pub kind: String,
    pub config_digest: String,
    pub seed: u64,
    pub schema: DatasetSchema,
    pub pipeline: PipelineConfig,
    pub model: StackedEnsemble,
}

impl ModelArchive {
    pub fn new(
        config_digest: String,
        seed: u64,
        schema: DatasetSchema,
        pipeline: PipelineConfig,
        model: StackedEnsemble,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: KIND_STACKED.into(),
            config_digest,
            seed,
            schema,
            pipeline,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("archive serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| HarnessError::Archive(format!("not valid JSON: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(HarnessError::Archive(format!(
                    "unsupported format_version {v}; this build reads version {FORMAT_VERSION}"
                )))
            }
            None => return Err(HarnessError::Archive("missing format_version".into())),
        }
        match value.get("kind").and_then(|v| v.as_str()) {
            Some(KIND_STACKED) => {}
            other => return Err(HarnessError::Archive(format!("unknown model kind {other:?}"))),
        }
        // parse from text again: going through Value would lose float exactness guarantees
        serde_json::from_str(text).map_err(|e| HarnessError::Archive(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }
}

//! Versioned on-disk model files.
//!
//! A model artifact is self-describing JSON: a format id, a format
//! version, the feature schema with its hash, the learner config, and the
//! learned parameters. Loading refuses unknown formats or versions and
//! re-verifies the schema hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrainedModel;
use crate::{Error, Result};

const FORMAT_ID: &str = "parkcast.model";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelArtifact {
    format: String,
    version: u32,
    schema_sha256: String,
    model: TrainedModel,
}

pub fn schema_hash(schema: &[String]) -> String {
    let mut hasher = Sha256::new();
    for column in schema {
        hasher.update(column.as_bytes());
        hasher.update(b"\n");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let artifact = ModelArtifact {
        format: FORMAT_ID.to_string(),
        version: FORMAT_VERSION,
        schema_sha256: schema_hash(&model.schema),
        model: model.clone(),
    };
    let body = serde_json::to_string(&artifact)
        .map_err(|e| Error::Artifact(format!("cannot serialize model: {e}")))?;
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let body =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let artifact: ModelArtifact = serde_json::from_str(&body)
        .map_err(|e| Error::Artifact(format!("not a model artifact: {e}")))?;
    if artifact.format != FORMAT_ID {
        return Err(Error::Artifact(format!(
            "unknown artifact format {:?}",
            artifact.format
        )));
    }
    if artifact.version != FORMAT_VERSION {
        return Err(Error::Artifact(format!(
            "unsupported artifact version {} (this build reads {FORMAT_VERSION})",
            artifact.version
        )));
    }
    if artifact.schema_sha256 != schema_hash(&artifact.model.schema) {
        return Err(Error::Artifact("schema hash mismatch".into()));
    }
    Ok(artifact.model)
}

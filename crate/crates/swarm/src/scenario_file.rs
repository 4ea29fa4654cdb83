//! JSON scenario files.

use std::fs;
use std::path::Path;

use compton_swarm_core::sim::{ConfigError, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

impl LoadError {
    /// Dotted path of the offending field, when known.
    pub fn field(&self) -> Option<&str> {
        match self {
            LoadError::Io { .. } => None,
            LoadError::Parse { field, .. } => Some(field),
            LoadError::Invalid(e) => Some(&e.field),
        }
    }
}

/// Parses and validates a scenario. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, LoadError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<root>".to_string() } else { path };
        LoadError::Parse { field, message: e.into_inner().to_string() }
    })?;
    de.end().map_err(|e| LoadError::Parse { field: "<root>".into(), message: e.to_string() })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

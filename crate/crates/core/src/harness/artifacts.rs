//! TOML files for scenarios, observation sets and other serde values.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::results::create_file;
use crate::error::{Error, Result};

/// Writes any serializable value as TOML, creating parent directories.
/// Used for [`ChannelRealization`](crate::channel::ChannelRealization) and
/// [`ObservationSet`](crate::observation::ObservationSet) snapshots.
pub fn save_toml<V: Serialize>(value: &V, path: &Path) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut f = create_file(path)?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn load_toml<V: DeserializeOwned>(path: &Path) -> Result<V> {
    let text = std::fs::read_to_string(path)?;
    let de = toml::Deserializer::parse(&text).map_err(|e| Error::Parse(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| Error::Config { path: e.path().to_string(), message: e.inner().to_string() })
}

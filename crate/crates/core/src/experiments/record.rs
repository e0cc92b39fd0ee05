//! Persisted experiment records with config hashing.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Version of the record and config JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Code version string stored in every record.
pub fn code_version() -> String {
    format!("roughswitch-{}", env!("CARGO_PKG_VERSION"))
}

/// A self-describing experiment run.
///
/// Floats are written in shortest round-trip form, so raw measurement arrays
/// survive a save/load cycle bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub kind: String,
    pub code_version: String,
    pub config: Value,
    /// SHA-256 of the canonical config JSON.
    pub config_hash: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub raw: Value,
    /// SHA-256 of the canonical raw-measurement JSON.
    pub raw_digest: String,
    pub summary: Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical (sorted-key, compact) JSON form of `value`.
pub fn canonical_hash(value: &Value) -> String {
    sha256_hex(value.to_string().as_bytes())
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl ExperimentRecord {
    pub fn new<C: Serialize, R: Serialize, S: Serialize>(
        kind: &str,
        config: &C,
        seed: u64,
        started_unix: u64,
        raw: &R,
        summary: &S,
    ) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let raw = serde_json::to_value(raw)?;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            code_version: code_version(),
            config_hash: canonical_hash(&config),
            config,
            seed,
            started_unix,
            finished_unix: unix_now(),
            raw_digest: canonical_hash(&raw),
            raw,
            summary: serde_json::to_value(summary)?,
        })
    }

    pub fn raw_as<R: DeserializeOwned>(&self) -> Result<R> {
        Ok(serde_json::from_value(self.raw.clone())?)
    }

    pub fn summary_as<S: DeserializeOwned>(&self) -> Result<S> {
        Ok(serde_json::from_value(self.summary.clone())?)
    }

    pub fn config_as<C: DeserializeOwned>(&self) -> Result<C> {
        Ok(serde_json::from_value(self.config.clone())?)
    }

    /// Checks the schema version and both digests.
    pub fn verify(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion { expected: SCHEMA_VERSION, found: self.schema_version });
        }
        let computed = canonical_hash(&self.config);
        if computed != self.config_hash {
            return Err(Error::HashMismatch { stored: self.config_hash.clone(), computed });
        }
        let computed = canonical_hash(&self.raw);
        if computed != self.raw_digest {
            return Err(Error::HashMismatch { stored: self.raw_digest.clone(), computed });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(s)?;
        if let Some(v) = value.get("schema_version").and_then(Value::as_u64) {
            if v != u64::from(SCHEMA_VERSION) {
                return Err(Error::SchemaVersion { expected: SCHEMA_VERSION, found: v as u32 });
            }
        }
        let record: Self = serde_json::from_value(value)?;
        record.verify()?;
        Ok(record)
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

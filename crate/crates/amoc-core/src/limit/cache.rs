//! Versioned JSON cache of simulated quantile tables.
//!
//! One record per `(family, delta, probs, replications, grid, seed)`; the
//! worker count is deliberately not part of the key because results do
//! not depend on it. Any key mismatch means re-simulation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::{LimitFamily, QuantileTable, SimConfig};

pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileCache {
    pub version: u32,
    pub records: Vec<QuantileTable>,
}

impl Default for QuantileCache {
    fn default() -> Self {
        Self {
            version: CACHE_VERSION,
            records: Vec::new(),
        }
    }
}

fn key_matches(table: &QuantileTable, family: &LimitFamily, probs: &[f64], cfg: &SimConfig) -> bool {
    table.family.kind == family.kind
        && table.family.delta == family.delta
        && table.probs == probs
        && table.config.replications == cfg.replications
        && table.config.grid == cfg.grid
        && table.config.seed == cfg.seed
}

impl QuantileCache {
    /// Load a cache file; a missing file yields an empty cache, an
    /// unreadable or wrong-version file is an error.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cache read {}: {e}", path.display())))?;
        let cache: Self = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("cache parse {}: {e}", path.display())))?;
        if cache.version != CACHE_VERSION {
            return Err(Error::InvalidConfig(format!(
                "cache version {} unsupported (expected {CACHE_VERSION})",
                cache.version
            )));
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("cache serialize: {e}")))?;
        fs::write(path, text)
            .map_err(|e| Error::InvalidConfig(format!("cache write {}: {e}", path.display())))
    }

    pub fn find(&self, family: &LimitFamily, probs: &[f64], cfg: &SimConfig) -> Option<&QuantileTable> {
        self.records
            .iter()
            .find(|t| key_matches(t, family, probs, cfg))
    }

    /// Insert or replace the record with the same key.
    pub fn insert(&mut self, table: QuantileTable) {
        self.records
            .retain(|t| !key_matches(t, &table.family, &table.probs, &table.config));
        self.records.push(table);
    }
}

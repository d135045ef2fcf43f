//! Store directories: a `manifest.json` plus one binary file per shard.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use pdrill_core::partition::PartitionSpec;
use pdrill_core::store::{read_shard, write_shard};
use pdrill_core::{Engine, Schema, Shard};

use crate::error::{IngestError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub table: String,
    pub schema: Schema,
    pub shards: Vec<String>,
    pub partition: Option<PartitionSpec>,
    pub seed: u64,
    pub rows: u64,
}

pub fn shard_file_name(id: u32) -> String {
    format!("shard-{id:05}.pdrl")
}

/// Writes shards and the manifest into `dir`, creating it if needed.
pub fn write_store(dir: &Path, manifest: &Manifest, shards: &[Shard]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
    if manifest.shards.len() != shards.len() {
        return Err(IngestError::Config("manifest and shard count disagree".into()));
    }
    for (name, shard) in manifest.shards.iter().zip(shards) {
        write_shard(&dir.join(name), shard)?;
    }
    let json = serde_json::to_vec_pretty(manifest).map_err(|e| IngestError::Config(e.to_string()))?;
    let path = dir.join(MANIFEST);
    fs::write(&path, json).map_err(|e| IngestError::io(&path, e))
}

#[derive(Debug)]
pub struct Store {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Store {
    pub fn open(dir: &Path) -> Result<Store> {
        let path = dir.join(MANIFEST);
        let bytes = fs::read(&path).map_err(|e| IngestError::io(&path, e))?;
        let manifest: Manifest =
            serde_json::from_slice(&bytes).map_err(|e| IngestError::Config(format!("{}: {e}", path.display())))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(IngestError::Config(format!(
                "{}: unsupported manifest version {}",
                path.display(),
                manifest.version
            )));
        }
        Ok(Store {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    /// Reads and verifies every shard.
    pub fn load_shards(&self) -> Result<Vec<Shard>> {
        self.manifest
            .shards
            .iter()
            .map(|name| {
                let shard = read_shard(&self.dir.join(name))?;
                if shard.schema.fields != self.manifest.schema.fields {
                    return Err(IngestError::Config(format!("{name}: schema differs from the manifest")));
                }
                Ok(shard)
            })
            .collect()
    }

    /// Registers the store's table with an engine.
    pub fn attach(&self, engine: &Engine) -> Result<()> {
        engine.add_table(&self.manifest.table, self.load_shards()?)?;
        Ok(())
    }

    pub fn shared_shards(&self) -> Result<Vec<Arc<Shard>>> {
        Ok(self.load_shards()?.into_iter().map(Arc::new).collect())
    }
}

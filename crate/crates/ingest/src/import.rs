//! The import pipeline: shard, reorder, partition, encode, write.

use std::path::Path;

use pdrill_core::partition::{build_shard, PartitionSpec, DEFAULT_MAX_CHUNK_ROWS};
use pdrill_core::{parallel, Field, Schema, Shard, ShardOptions, Table, Value, ValueKind};

use crate::csv_import::read_csv_path;
use crate::error::{IngestError, Result};
use crate::report::ImportReport;
use crate::sharding;
use crate::store::{shard_file_name, write_store, Manifest, MANIFEST_VERSION};

pub const DEFAULT_SHARD_ROWS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ImportConfig {
    pub table: String,
    /// Declared or overriding column kinds; other columns are inferred.
    pub schema: Vec<(String, ValueKind)>,
    /// No fields: every shard is one chunk in input order.
    pub partition_fields: Vec<String>,
    pub max_chunk_rows: usize,
    pub shard_rows: usize,
    pub seed: u64,
    pub shard: ShardOptions,
}

impl Default for ImportConfig {
    fn default() -> Self {
        ImportConfig {
            table: "data".into(),
            schema: Vec::new(),
            partition_fields: Vec::new(),
            max_chunk_rows: DEFAULT_MAX_CHUNK_ROWS,
            shard_rows: DEFAULT_SHARD_ROWS,
            seed: 0,
            shard: ShardOptions::default(),
        }
    }
}

impl ImportConfig {
    pub fn partition_spec(&self) -> Option<PartitionSpec> {
        (!self.partition_fields.is_empty())
            .then(|| PartitionSpec::new(self.partition_fields.iter().cloned(), self.max_chunk_rows))
    }

    fn validate(&self, table: &Table) -> Result<()> {
        if self.shard_rows == 0 || self.max_chunk_rows == 0 {
            return Err(IngestError::Config("row targets must be at least 1".into()));
        }
        for f in &self.partition_fields {
            if table.schema.index_of(f).is_none() {
                return Err(IngestError::Config(format!("partition field `{f}` is not a column")));
            }
        }
        Ok(())
    }
}

/// Splits `table` into encoded shards, one worker per shard.
pub fn build_shards(table: &Table, cfg: &ImportConfig) -> Result<Vec<Shard>> {
    cfg.validate(table)?;
    let spec = cfg.partition_spec();
    let parts = sharding::assign(table.num_rows(), cfg.shard_rows, cfg.seed);
    let inner = ShardOptions {
        parallel: cfg.shard.parallel && parts.len() == 1,
        ..cfg.shard
    };
    parallel::map_range(parts.len(), cfg.shard.parallel, |i| {
        let rows = table.select_rows(&parts[i]);
        build_shard(i as u32, &rows, spec.as_ref(), inner)
    })
    .into_iter()
    .map(|r| r.map_err(IngestError::from))
    .collect()
}

/// Builds and writes a store directory for an in-memory table.
pub fn import_table(table: &Table, cfg: &ImportConfig, out: &Path) -> Result<ImportReport> {
    let shards = build_shards(table, cfg)?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        table: cfg.table.clone(),
        schema: table.schema.clone(),
        shards: (0..shards.len() as u32).map(shard_file_name).collect(),
        partition: cfg.partition_spec(),
        seed: cfg.seed,
        rows: table.num_rows() as u64,
    };
    write_store(out, &manifest, &shards)?;
    let mut file_bytes = 0;
    for name in &manifest.shards {
        let p = out.join(name);
        file_bytes += std::fs::metadata(&p).map_err(|e| IngestError::io(&p, e))?.len();
    }
    Ok(ImportReport::from_shards(&cfg.table, &shards, file_bytes)?)
}

/// Reads a CSV file and imports it.
pub fn ingest_csv(input: &Path, cfg: &ImportConfig, out: &Path) -> Result<ImportReport> {
    ingest_csv_files(&[input], cfg, out)
}

/// Imports several CSV files with the same header as one table.
pub fn ingest_csv_files(inputs: &[impl AsRef<Path>], cfg: &ImportConfig, out: &Path) -> Result<ImportReport> {
    let mut tables = Vec::with_capacity(inputs.len());
    for p in inputs {
        tables.push((p.as_ref(), read_csv_path(p.as_ref(), &cfg.table, &cfg.schema)?));
    }
    import_table(&concat(tables)?, cfg, out)
}

/// Appends tables with equal field names; kinds must agree unless a
/// file's column is entirely NULL.
fn concat(tables: Vec<(&Path, Table)>) -> Result<Table> {
    let mut iter = tables.into_iter();
    let (_, first) = iter
        .next()
        .ok_or_else(|| IngestError::Config("no input files".into()))?;
    let mut fields = first.schema.fields.clone();
    let mut columns = first.columns;
    let mut all_null: Vec<bool> = columns.iter().map(|c| c.iter().all(Value::is_null)).collect();
    for (path, t) in iter {
        let names = |f: &[Field]| f.iter().map(|f| f.name.clone()).collect::<Vec<_>>();
        if names(&t.schema.fields) != names(&fields) {
            return Err(IngestError::Config(format!(
                "{}: header differs from the first input",
                path.display()
            )));
        }
        for (i, (f, col)) in t.schema.fields.iter().zip(t.columns).enumerate() {
            let col_null = col.iter().all(Value::is_null);
            if f.kind != fields[i].kind {
                if all_null[i] {
                    fields[i].kind = f.kind;
                } else if !col_null {
                    return Err(IngestError::Config(format!(
                        "{}: column `{}` reads as {}, earlier files as {}; declare it with --schema",
                        path.display(),
                        f.name,
                        f.kind,
                        fields[i].kind
                    )));
                }
            }
            all_null[i] &= col_null;
            fields[i].nullable |= f.nullable;
            columns[i].extend(col);
        }
    }
    Ok(Table::new(Schema::new(&first.schema.table_name, fields)?, columns)?)
}

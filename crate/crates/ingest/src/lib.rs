//! CSV import into store directories, the row-scan oracle, synthetic data
//! and the benchmark ladder.

pub mod bench;
pub mod csv_import;
pub mod error;
pub mod import;
pub mod oracle;
pub mod report;
pub mod sharding;
pub mod store;
pub mod synth;

pub use error::{IngestError, Result};
pub use import::{build_shards, import_table, ingest_csv, ingest_csv_files, ImportConfig};
pub use oracle::{oracle_query, oracle_sql, OracleTable};
pub use report::ImportReport;
pub use store::{Manifest, Store};

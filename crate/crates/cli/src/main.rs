//! `pdrill`: import CSV into a store, query it, run the storage benchmark,
//! or serve it over HTTP.
//!
//! Exit codes: 0 ok, 1 usage, 2 data error, 3 internal error.

mod query;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdrill_core::partition::DEFAULT_MAX_CHUNK_ROWS;
use pdrill_core::ShardOptions;
use pdrill_ingest::bench::{run_bench, BenchConfig};
use pdrill_ingest::csv_import::parse_schema_spec;
use pdrill_ingest::import::DEFAULT_SHARD_ROWS;
use pdrill_ingest::{ingest_csv_files, ImportConfig, IngestError};

#[derive(Parser)]
#[command(name = "pdrill", version, about = "Partition-skipping column store")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Import CSV files into a store directory.
    Import(ImportArgs),
    /// Run one SQL query against a store.
    Query(query::QueryArgs),
    /// Run the storage optimization ladder on synthetic logs.
    Bench(BenchArgs),
    /// Serve a store over HTTP under /v1.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ImportArgs {
    /// CSV file with a header row; repeat for several files.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Column kinds, e.g. `ts:timestamp,zip:string`; others are inferred.
    #[arg(long)]
    schema: Option<String>,
    #[arg(long, value_delimiter = ',')]
    partition_fields: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_CHUNK_ROWS)]
    max_chunk_rows: usize,
    #[arg(long, default_value_t = DEFAULT_SHARD_ROWS)]
    shard_rows: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "data")]
    table: String,
    /// Seed of the row-to-shard assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep string dictionaries as sorted arrays instead of tries.
    #[arg(long)]
    flat_dicts: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON bench config; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// Element cache budget in bytes.
    #[arg(long, default_value_t = 256 << 20)]
    cache_bytes: usize,
}

/// A failure and the exit code it maps to.
pub enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Core(c) => c.into(),
            e if e.is_data_error() => Failure::Data(e.to_string()),
            e => Failure::Internal(e.to_string()),
        }
    }
}

impl From<pdrill_core::Error> for Failure {
    fn from(e: pdrill_core::Error) -> Self {
        match e {
            pdrill_core::Error::Distributed { .. } => Failure::Internal(e.to_string()),
            e if e.is_user_error() => Failure::Data(e.to_string()),
            e => Failure::Internal(e.to_string()),
        }
    }
}

fn import(a: ImportArgs) -> Result<(), Failure> {
    let cfg = ImportConfig {
        table: a.table,
        schema: a
            .schema
            .as_deref()
            .map(parse_schema_spec)
            .transpose()?
            .unwrap_or_default(),
        partition_fields: a.partition_fields,
        max_chunk_rows: a.max_chunk_rows,
        shard_rows: a.shard_rows,
        seed: a.seed,
        shard: ShardOptions {
            trie_strings: !a.flat_dicts,
            ..Default::default()
        },
    };
    let report = ingest_csv_files(&a.input, &cfg, &a.out)?;
    print!("{report}");
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
            BenchConfig::from_json(&text)?
        }
        None => BenchConfig::default(),
    };
    let report = run_bench(&cfg)?;
    print!("{report}");
    if let Some(p) = &a.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Internal(e.to_string()))?;
        std::fs::write(p, text).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), Failure> {
    let engine = pdrill_service::load_engine(&a.store, a.cache_bytes).map_err(|e| Failure::Data(e.to_string()))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
    rt.block_on(async {
        let listener = pdrill_service::bind(&a.listen)
            .await
            .map_err(|e| Failure::Data(e.to_string()))?;
        eprintln!("serving {} on http://{}/v1", a.store.display(), a.listen);
        pdrill_service::serve(listener, engine)
            .await
            .map_err(|e| Failure::Internal(e.to_string()))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = match cli.command {
        Command::Import(a) => import(a),
        Command::Query(a) => query::run(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pdrill: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

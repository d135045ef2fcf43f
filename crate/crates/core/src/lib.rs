//! Partition-skipping in-memory column store.

pub mod cache;
pub mod distribute;
pub mod error;
pub mod parallel;
pub mod partition;
pub mod query;
pub mod schema;
pub mod store;
pub mod trie;
pub mod value;

pub use store::{Shard, ShardOptions, Table};

pub use query::{Engine, ExecOptions, QueryResult, QueryStats};

pub use error::{Error, FormatError, Result};
pub use schema::{Field, Schema};
pub use value::{Value, ValueKind};

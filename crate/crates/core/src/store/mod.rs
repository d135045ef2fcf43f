//! Double dictionary encoded columns, chunks and shards.

mod column;
mod dictionary;
mod elements;
pub mod format;
pub mod rle;
mod shard;
mod table;

pub use column::{Column, ColumnChunk};
pub use dictionary::{ChunkDictionary, DictRepr, GlobalDictionary};
pub use elements::{ElementsEncoding, ElementsKind};
pub use format::{decode_shard, encode_shard, read_shard, write_shard};
pub use shard::{ColumnSize, Shard, ShardOptions, VirtualRegistry};
pub use table::Table;

//! SQL subset: parsing, analysis, restriction evaluation and execution.

pub mod accumulate;
pub mod analyze;
pub mod ast;
pub mod engine;
pub mod functions;
pub mod kmv;
pub mod lexer;
pub mod mask;
pub mod parser;
pub mod restriction;
pub mod virtual_field;

pub use analyze::{analyze, Plan};
pub use ast::{AggFunc, Expr, Query};
pub use engine::{ColumnInfo, Engine, ExecOptions, PartialGroups, QueryResult, QueryStats};
pub use parser::parse;

//! Tabular ingestion: raw table parsing, schema-driven one-hot/min-max
//! encoding, and intersectional subgroup extraction.

mod builtin;
mod encode;
mod schema;
mod subgroup;
mod table;

pub use builtin::{builtin_schema, BUILTIN_IDS};
pub use encode::{encode, EncodedDataset, Encoder, FeatureBlock};
pub use schema::{
    ColumnKind, ColumnSpec, Normalization, Schema, TargetSpec, ValueMap, UNKNOWN_CATEGORY,
};
pub use subgroup::{extract_subgroups, Subgroup, SubgroupKey};
pub use table::{
    default_data_dir, parse_table, parse_table_in, parse_table_str, RawTable, TableFormat,
    TableSource, ADULT_HEADER, DATA_DIR_ENV, GERMAN_HEADER,
};

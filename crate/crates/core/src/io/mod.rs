//! File formats: JSON interchange documents and Graphviz export.
//!
//! Every JSON document carries a `schema_version`. Output is canonical:
//! object keys sorted, two-space indentation, trailing newline, so equal
//! inputs give byte-identical files.

pub mod artifacts;
mod document;
mod dot;
mod files;

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use document::{
    parse_map, AnyMap, DocArc, DocLiteral, DocNode, DocProvenance, MapDocument, MapKind,
    ProvenanceKind, DUAL_VALENCE_KEY, NEGATION_LABELS_KEY,
};
pub use dot::{to_dot, DotStyle};
pub use files::{
    EmmTraceFile, MappingFile, ScriptFile, TranscriptFile, TreeTraceFile, EMM_TRACE_KIND,
    TREE_TRACE_KIND,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {found}; this build reads up to {SCHEMA_VERSION}")]
    SchemaVersion { found: u32 },
    #[error("expected a {expected} document, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("malformed document: {0}")]
    Structure(String),
}

pub(crate) fn check_version(found: u32) -> Result<(), IoError> {
    if found > SCHEMA_VERSION || found == 0 {
        return Err(IoError::SchemaVersion { found });
    }
    Ok(())
}

/// Serialize with sorted keys and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

//! JSON interchange for signature matrices and block structures.
//!
//! Signature file: `{"n": 3, "entries": [[row, col, sigma], ...]}` with
//! 0-based indices. [`write_sigfile`] emits the canonical form (entries
//! sorted row-major, compact separators), so read → write is the identity on
//! canonical documents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::btf::BlockStructure;
use crate::error::Error;
use crate::sigma::SignatureMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigFileDocument {
    pub n: usize,
    pub entries: Vec<(usize, usize, i64)>,
}

#[derive(Debug, Error)]
pub enum SigFileError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("system size must be positive")]
    ZeroSize,

    /// Duplicate cells, out-of-range indices and similar content errors.
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl From<serde_json::Error> for SigFileError {
    fn from(e: serde_json::Error) -> Self {
        SigFileError::Format {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub fn read_sigfile(text: &str) -> Result<SignatureMatrix, SigFileError> {
    let doc: SigFileDocument = serde_json::from_str(text)?;
    if doc.n == 0 {
        return Err(SigFileError::ZeroSize);
    }
    Ok(SignatureMatrix::from_entries(doc.n, doc.entries)?)
}

pub fn write_sigfile(sigma: &SignatureMatrix) -> String {
    let doc = SigFileDocument {
        n: sigma.n(),
        entries: sigma.entries().collect(),
    };
    serde_json::to_string(&doc).expect("sigfile document serializes")
}

pub fn read_block_structure(text: &str) -> Result<BlockStructure, SigFileError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_block_structure(bs: &BlockStructure) -> String {
    serde_json::to_string(bs).expect("block structure serializes")
}

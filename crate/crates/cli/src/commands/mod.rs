use std::path::Path;

use serde_json::Value;
use websift::corpus::{tokenize, DocTermMatrix, Vocabulary};
use websift::io::{parse_documents, DocRecord};

use crate::error::{read_input, CliError};
use crate::report::Report;

pub mod detect;
pub mod discover;
pub mod framing;
pub mod ideology;
pub mod sentiment;

/// A finished report, plus an error to exit with after it is written
/// (for results that are usable but numerically suspect).
pub struct Outcome {
    pub report: Report,
    pub failure: Option<CliError>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome {
            report,
            failure: None,
        }
    }
}

pub fn path_value(path: &Path) -> Value {
    Value::from(path.display().to_string())
}

pub fn load_documents(path: &Path) -> Result<Vec<DocRecord>, CliError> {
    let text = read_input(path)?;
    parse_documents(&path.display().to_string(), &text).map_err(CliError::from)
}

pub fn tokenized(docs: &[DocRecord]) -> Vec<Vec<String>> {
    docs.iter().map(|d| tokenize(&d.text)).collect()
}

pub fn doc_matrix(
    vocab: Vocabulary,
    docs: &[&DocRecord],
    tokens: &[Vec<String>],
) -> Result<DocTermMatrix, CliError> {
    let ids = docs.iter().map(|d| d.id.clone()).collect();
    DocTermMatrix::from_tokens(vocab, ids, tokens).map_err(CliError::from)
}

/// JSON for an `f64`; non-finite values become `null`.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

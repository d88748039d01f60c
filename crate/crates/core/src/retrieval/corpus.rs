use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorpusTag {
    /// Free-running text chunked by size.
    #[default]
    #[serde(alias = "textbook_style", alias = "TextbookStyle", alias = "textbooks")]
    Textbook,
    /// Articles with heading structure, one chunk per paragraph.
    #[serde(alias = "hierarchical_style", alias = "HierarchicalStyle", alias = "statpearls")]
    Hierarchical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDocument {
    #[serde(rename = "id")]
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    /// Heading chain (outermost first) in effect at the start of the body.
    #[serde(default)]
    pub headings: Vec<String>,
    #[serde(rename = "content")]
    pub body: String,
    #[serde(default)]
    pub corpus_tag: CorpusTag,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Invalid {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Reads a corpus JSONL file. Document ids must be unique and bodies
/// non-blank; diagnostics carry the file and 1-based line.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusDocument>, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    };
    let invalid = |line: usize, message: String| CorpusError::Invalid {
        path: path.to_owned(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: CorpusDocument = serde_json::from_str(&line).map_err(|e| invalid(i + 1, e.to_string()))?;
        if doc.body.trim().is_empty() {
            return Err(invalid(i + 1, format!("document `{}` has an empty body", doc.doc_id)));
        }
        if !seen.insert(doc.doc_id.clone()) {
            return Err(invalid(i + 1, format!("duplicate document id `{}`", doc.doc_id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn reads_documents_with_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            r#"{{"id":"d1","title":"Asthma","headings":["Anatomy"],"content":"Body.","corpus_tag":"hierarchical"}}"#
        )
        .unwrap();
        writeln!(f, r#"{{"id":"d2","content":"Other."}}"#).unwrap();
        let docs = read_corpus(f.path()).unwrap();
        assert_eq!(docs[0].corpus_tag, CorpusTag::Hierarchical);
        assert_eq!(docs[1].corpus_tag, CorpusTag::Textbook);
        assert_eq!(docs[1].title, "");
    }

    #[test]
    fn rejects_bad_lines_with_position() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"d1","content":"x"}}"#).unwrap();
        writeln!(f, r#"{{"id":"d1","content":"y"}}"#).unwrap();
        let err = read_corpus(f.path()).unwrap_err();
        assert!(matches!(err, CorpusError::Invalid { line: 2, .. }), "{err}");

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"d1","content":"  "}}"#).unwrap();
        assert!(read_corpus(f.path()).is_err());
    }
}

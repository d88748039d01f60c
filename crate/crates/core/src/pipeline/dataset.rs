//! JSON-lines dataset reading and writing.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::types::SummaryPair;

#[derive(Debug, Error)]
pub enum DatasetError {
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

impl DatasetError {
    fn invalid(path: &Path, line: usize, message: impl Into<String>) -> Self {
        DatasetError::Invalid {
            path: path.to_owned(),
            line,
            message: message.into(),
        }
    }
}

/// Streams summary pairs from a JSONL file. Blank lines are skipped; ids
/// must be non-empty and unique, abstracts non-blank. Blank summaries are
/// accepted and later reported as Unscored.
pub struct DatasetReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    seen: HashSet<String>,
}

impl DatasetReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref().to_owned();
        let file = File::open(&path).map_err(|source| DatasetError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(DatasetReader {
            path,
            lines: BufReader::new(file).lines(),
            line_no: 0,
            seen: HashSet::new(),
        })
    }

    fn parse(&mut self, raw: &str) -> Result<SummaryPair, DatasetError> {
        let pair: SummaryPair =
            serde_json::from_str(raw).map_err(|e| DatasetError::invalid(&self.path, self.line_no, e.to_string()))?;
        if pair.id.trim().is_empty() {
            return Err(DatasetError::invalid(&self.path, self.line_no, "empty id"));
        }
        if pair.abstract_text.trim().is_empty() {
            return Err(DatasetError::invalid(
                &self.path,
                self.line_no,
                format!("record `{}` has a blank abstract", pair.id),
            ));
        }
        if !self.seen.insert(pair.id.clone()) {
            return Err(DatasetError::invalid(
                &self.path,
                self.line_no,
                format!("duplicate id `{}`", pair.id),
            ));
        }
        Ok(pair)
    }
}

impl Iterator for DatasetReader {
    type Item = Result<SummaryPair, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(source) => {
                    return Some(Err(DatasetError::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse(&line));
        }
    }
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<SummaryPair>, DatasetError> {
    DatasetReader::open(path)?.collect()
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: serde::Serialize>(path: impl AsRef<Path>, records: &[T]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{GoldLabel, SentenceType};

    fn file_with(lines: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(lines.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_fields_and_keeps_unknown_ones() {
        let f = file_with(
            r#"{"id":"a","summary":"S.","abstract":"A.","label":1,"sentence_types":["explanation"],"source":"cells"}

{"id":"b","summary":"T.","abstract":"B."}
"#,
        );
        let pairs = read_dataset(f.path()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].gold_label, Some(GoldLabel::Factual));
        assert_eq!(pairs[0].sentence_types, Some(vec![SentenceType::Explanation]));
        assert_eq!(pairs[0].metadata["source"], "cells");
        assert_eq!(pairs[1].gold_label, None);
        let line = serde_json::to_string(&pairs[0]).unwrap();
        assert!(line.contains(r#""source":"cells""#));
        assert!(line.contains(r#""label":1"#));
    }

    #[test]
    fn reports_line_numbers() {
        let f = file_with("{\"id\":\"a\",\"summary\":\"S\",\"abstract\":\"A\"}\n{\"id\":\"a\",\"summary\":\"S\",\"abstract\":\"A\"}\n");
        let err = read_dataset(f.path()).unwrap_err();
        assert!(err.to_string().ends_with(":2: duplicate id `a`"), "{err}");
        let f = file_with("not json\n");
        assert!(matches!(
            read_dataset(f.path()),
            Err(DatasetError::Invalid { line: 1, .. })
        ));
        let f = file_with("{\"id\":\"a\",\"summary\":\"S\",\"abstract\":\" \"}\n");
        assert!(read_dataset(f.path()).is_err());
        let f = file_with("{\"id\":\"a\",\"summary\":\"S\",\"abstract\":\"A\",\"label\":3}\n");
        assert!(read_dataset(f.path()).is_err());
    }

    #[test]
    fn blank_summary_is_accepted() {
        let f = file_with("{\"id\":\"a\",\"summary\":\"  \",\"abstract\":\"A.\"}\n");
        let pairs = read_dataset(f.path()).unwrap();
        assert!(pairs[0].has_blank_summary());
    }
}

//! Corpus chunking.
//!
//! Textbook-style documents go through a recursive character splitter: the
//! body is cut at the coarsest separator class present (blank line, newline,
//! sentence boundary, space), adjacent pieces are merged greedily up to the
//! limit, and only oversize pieces recurse into finer classes. Separators
//! stay attached to the end of the piece they close, so plain concatenation
//! of the chunk contents restores the body. A run with no separator left is
//! hard-split every `limit` characters.
//!
//! Hierarchical documents become one chunk per paragraph, titled with the
//! article title and the heading chain in effect at that paragraph.

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::corpus::{CorpusDocument, CorpusTag};

pub const DEFAULT_CHUNK_LIMIT: usize = 1000;
pub const HEADING_JOINER: &str = " -- ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub parent_doc: String,
    pub title: String,
    pub content: String,
    pub ordinal: usize,
}

impl Chunk {
    /// Text handed to the embedder.
    pub fn embedding_text(&self) -> String {
        if self.title.is_empty() {
            self.content.trim().to_owned()
        } else {
            format!("{}\n{}", self.title, self.content.trim())
        }
    }

    /// Hex SHA-256 over title and content; drives embedding-cache reuse.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.title.as_bytes());
        h.update([0u8]);
        h.update(self.content.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separator {
    BlankLine,
    Newline,
    SentenceBoundary,
    Space,
}

pub const DEFAULT_SEPARATORS: [Separator; 4] = [
    Separator::BlankLine,
    Separator::Newline,
    Separator::SentenceBoundary,
    Separator::Space,
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error("document `{0}` has an empty body")]
    EmptyBody(String),
    #[error("chunk limit must be positive")]
    ZeroLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Chunked {
    pub chunks: Vec<Chunk>,
    /// One entry per hard split of a separator-free run.
    pub warnings: Vec<String>,
}

/// Byte offsets just past each separator occurrence.
fn cut_points(text: &str, sep: Separator) -> Vec<usize> {
    match sep {
        Separator::BlankLine => text.match_indices("\n\n").map(|(i, m)| i + m.len()).collect(),
        Separator::Newline => text.match_indices('\n').map(|(i, _)| i + 1).collect(),
        Separator::Space => text.match_indices(' ').map(|(i, _)| i + 1).collect(),
        Separator::SentenceBoundary => {
            let mut cuts = Vec::new();
            let mut prev: Option<char> = None;
            for (i, c) in text.char_indices() {
                if c.is_whitespace() && matches!(prev, Some('.' | '!' | '?')) {
                    cuts.push(i + c.len_utf8());
                }
                prev = Some(c);
            }
            cuts
        }
    }
}

fn split_keep(text: &str, sep: Separator) -> Vec<&str> {
    let mut pieces = Vec::new();
    let mut start = 0;
    for cut in cut_points(text, sep) {
        if cut > start && cut < text.len() {
            pieces.push(&text[start..cut]);
            start = cut;
        }
    }
    pieces.push(&text[start..]);
    pieces
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn hard_split<'a>(text: &'a str, limit: usize, out: &mut Vec<&'a str>) {
    let mut rest = text;
    while !rest.is_empty() {
        let end = rest.char_indices().nth(limit).map_or(rest.len(), |(b, _)| b);
        out.push(&rest[..end]);
        rest = &rest[end..];
    }
}

/// Recursive character splitting of `text` into pieces of at most `limit`
/// characters. Returns the number of hard splits performed alongside.
pub fn split_text(text: &str, limit: usize, separators: &[Separator]) -> (Vec<String>, usize) {
    let mut out = Vec::new();
    let hard = split_into(text, limit, separators, &mut out);
    (out, hard)
}

fn split_into(text: &str, limit: usize, separators: &[Separator], out: &mut Vec<String>) -> usize {
    if char_len(text) <= limit {
        if !text.is_empty() {
            out.push(text.to_owned());
        }
        return 0;
    }
    let Some(pos) = separators.iter().position(|s| split_keep(text, *s).len() > 1) else {
        let mut pieces = Vec::new();
        hard_split(text, limit, &mut pieces);
        out.extend(pieces.into_iter().map(str::to_owned));
        return 1;
    };
    let finer = &separators[pos + 1..];
    let mut hard = 0;
    let mut current = String::new();
    let mut current_len = 0;
    for piece in split_keep(text, separators[pos]) {
        let len = char_len(piece);
        if len > limit {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
                current_len = 0;
            }
            hard += split_into(piece, limit, finer, out);
            continue;
        }
        if current_len + len > limit {
            out.push(std::mem::take(&mut current));
            current_len = 0;
        }
        current.push_str(piece);
        current_len += len;
    }
    if !current.is_empty() {
        out.push(current);
    }
    hard
}

fn chunk_id(doc_id: &str, ordinal: usize) -> String {
    format!("{doc_id}#{ordinal}")
}

pub fn chunk_textbook_style(
    doc: &CorpusDocument,
    limit: usize,
    separators: &[Separator],
) -> Result<Chunked, ChunkError> {
    if limit == 0 {
        return Err(ChunkError::ZeroLimit);
    }
    if doc.body.trim().is_empty() {
        return Err(ChunkError::EmptyBody(doc.doc_id.clone()));
    }
    let (pieces, hard) = split_text(&doc.body, limit, separators);
    let warnings: Vec<String> = (0..hard)
        .map(|_| {
            format!(
                "document `{}`: separator-free run hard-split at {limit} chars",
                doc.doc_id
            )
        })
        .collect();
    for w in &warnings {
        warn!("{w}");
    }
    let chunks = pieces
        .into_iter()
        .enumerate()
        .map(|(ordinal, content)| Chunk {
            chunk_id: chunk_id(&doc.doc_id, ordinal),
            parent_doc: doc.doc_id.clone(),
            title: doc.title.clone(),
            content,
            ordinal,
        })
        .collect();
    Ok(Chunked { chunks, warnings })
}

/// Parses a markdown-style heading line (`## Nerves`) into (level, text).
fn heading(line: &str) -> Option<(usize, &str)> {
    let trimmed = line.trim_start();
    let level = trimmed.chars().take_while(|c| *c == '#').count();
    if level == 0 {
        return None;
    }
    let rest = &trimmed[level..];
    if !rest.starts_with(' ') {
        return None;
    }
    Some((level, rest.trim()))
}

fn paragraphs(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut blank_run = false;
    let mut line_start = 0;
    for (i, c) in body.char_indices() {
        if c == '\n' {
            let line = &body[line_start..i];
            if line.trim().is_empty() {
                if !blank_run {
                    out.push(&body[start..line_start]);
                }
                blank_run = true;
                start = i + 1;
            } else {
                blank_run = false;
            }
            line_start = i + 1;
        }
    }
    out.push(&body[start..]);
    out.into_iter().filter(|p| !p.trim().is_empty()).collect()
}

/// One chunk per blank-line-delimited paragraph. Heading lines (`#`,
/// `##`, ...) update the active chain and are not chunks themselves; the
/// document's `headings` field seeds the chain.
pub fn chunk_hierarchical(doc: &CorpusDocument, heading_joiner: &str) -> Result<Chunked, ChunkError> {
    if doc.body.trim().is_empty() {
        return Err(ChunkError::EmptyBody(doc.doc_id.clone()));
    }
    let mut chain: Vec<String> = doc.headings.clone();
    let mut chunks = Vec::new();
    for para in paragraphs(&doc.body) {
        let mut text_lines = Vec::new();
        for line in para.lines() {
            match heading(line) {
                Some((level, name)) => {
                    chain.truncate(level - 1);
                    chain.push(name.to_owned());
                }
                None => text_lines.push(line.trim()),
            }
        }
        let content = text_lines.join("\n").trim().to_owned();
        if content.is_empty() {
            continue;
        }
        let title = std::iter::once(doc.title.as_str())
            .chain(chain.iter().map(String::as_str))
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(heading_joiner);
        let ordinal = chunks.len();
        chunks.push(Chunk {
            chunk_id: chunk_id(&doc.doc_id, ordinal),
            parent_doc: doc.doc_id.clone(),
            title,
            content,
            ordinal,
        });
    }
    Ok(Chunked {
        chunks,
        warnings: Vec::new(),
    })
}

/// Dispatches on the document's corpus tag.
pub fn chunk_document(doc: &CorpusDocument, limit: usize) -> Result<Chunked, ChunkError> {
    match doc.corpus_tag {
        CorpusTag::Textbook => chunk_textbook_style(doc, limit, &DEFAULT_SEPARATORS),
        CorpusTag::Hierarchical => chunk_hierarchical(doc, HEADING_JOINER),
    }
}

//! On-disk index directory: `manifest.json`, `chunks.jsonl` and the vector
//! cache `vectors.pqfvec`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::chunk::Chunk;
use super::index::{search_top_k, EmbeddingCache, IndexError, RetrievalHit, VectorIndex};
use crate::backend::EmbeddingBackend;
use crate::pipeline::write_jsonl;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHUNKS_FILE: &str = "chunks.jsonl";
pub const VECTORS_FILE: &str = "vectors.pqfvec";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub dimension: usize,
    pub chunk_count: usize,
    pub vector_count: usize,
    pub chunk_limit: usize,
    pub corpora: Vec<String>,
    pub embedder: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    #[serde(flatten)]
    pub chunk: Chunk,
    pub content_hash: String,
}

/// Index plus chunk texts, ready to serve per-sentence queries.
pub struct Retriever {
    index: VectorIndex,
    chunks: Vec<Chunk>,
    by_id: HashMap<String, usize>,
    embedder: Arc<dyn EmbeddingBackend>,
    k: usize,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

fn read_chunk_records(path: &Path) -> Result<Vec<ChunkRecord>, StoreError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| StoreError::Invalid {
            path: path.to_owned(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

impl Retriever {
    pub fn new(
        index: VectorIndex,
        chunks: Vec<Chunk>,
        embedder: Arc<dyn EmbeddingBackend>,
        k: usize,
    ) -> Result<Self, StoreError> {
        let by_id: HashMap<String, usize> = chunks
            .iter()
            .enumerate()
            .map(|(i, c)| (c.chunk_id.clone(), i))
            .collect();
        if let Some(missing) = index.ids().iter().find(|id| !by_id.contains_key(*id)) {
            return Err(StoreError::Invalid {
                path: PathBuf::from(CHUNKS_FILE),
                message: format!("indexed chunk `{missing}` has no text"),
            });
        }
        if index.dimension() != embedder.dimension() {
            return Err(IndexError::CacheDimension {
                expected: embedder.dimension(),
                found: index.dimension(),
            }
            .into());
        }
        Ok(Retriever {
            index,
            chunks,
            by_id,
            embedder,
            k,
        })
    }

    /// Loads an index directory written by [`Retriever::save`].
    pub fn open(dir: impl AsRef<Path>, embedder: Arc<dyn EmbeddingBackend>, k: usize) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        let vectors = dir.join(VECTORS_FILE);
        let index = VectorIndex::load(&vectors, Some(embedder.dimension())).map_err(|e| match e {
            IndexError::Io(source) => StoreError::Io { path: vectors, source },
            other => other.into(),
        })?;
        let chunks = read_chunk_records(&dir.join(CHUNKS_FILE))?
            .into_iter()
            .map(|r| r.chunk)
            .collect();
        Retriever::new(index, chunks, embedder, k)
    }

    /// Reads whatever a previous run left in `dir` as a reuse cache. A
    /// missing or incompatible directory yields an empty cache.
    pub fn load_cache(dir: impl AsRef<Path>, dimension: usize) -> EmbeddingCache {
        let dir = dir.as_ref();
        let mut cache = EmbeddingCache::default();
        let (Ok(index), Ok(records)) = (
            VectorIndex::load(dir.join(VECTORS_FILE), Some(dimension)),
            read_chunk_records(&dir.join(CHUNKS_FILE)),
        ) else {
            return cache;
        };
        let hashes: HashMap<&str, &str> = records
            .iter()
            .map(|r| (r.chunk.chunk_id.as_str(), r.content_hash.as_str()))
            .collect();
        for (id, vector) in index.vectors_by_id() {
            if let Some(hash) = hashes.get(id) {
                cache.insert(id.to_owned(), (*hash).to_owned(), vector.to_vec());
            }
        }
        cache
    }

    pub fn save(
        dir: impl AsRef<Path>,
        manifest: &IndexManifest,
        chunks: &[Chunk],
        index: &VectorIndex,
    ) -> Result<(), StoreError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let vectors = dir.join(VECTORS_FILE);
        index.save(&vectors).map_err(|e| match e {
            IndexError::Io(source) => StoreError::Io { path: vectors, source },
            other => other.into(),
        })?;
        let records: Vec<ChunkRecord> = chunks
            .iter()
            .map(|c| ChunkRecord {
                content_hash: c.content_hash(),
                chunk: c.clone(),
            })
            .collect();
        let chunks_path = dir.join(CHUNKS_FILE);
        write_jsonl(&chunks_path, &records).map_err(io_err(&chunks_path))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        std::fs::write(&manifest_path, json + "\n").map_err(io_err(&manifest_path))?;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn chunk(&self, chunk_id: &str) -> Option<&Chunk> {
        self.by_id.get(chunk_id).map(|&i| &self.chunks[i])
    }

    /// Top-k hits for `query` with their chunks, best first.
    pub fn retrieve(&self, query: &str) -> Result<Vec<(RetrievalHit, &Chunk)>, IndexError> {
        let hits = search_top_k(&self.index, query, self.k, self.embedder.as_ref())?;
        Ok(hits
            .into_iter()
            .filter_map(|h| {
                let chunk = self.chunk(&h.chunk_id)?;
                Some((h, chunk))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use crate::retrieval::build_index;

    fn chunk(id: &str, content: &str) -> Chunk {
        Chunk {
            chunk_id: id.into(),
            parent_doc: "d".into(),
            title: "Doc".into(),
            content: content.into(),
            ordinal: 0,
        }
    }

    #[test]
    fn save_open_and_retrieve() {
        let dir = tempfile::tempdir().unwrap();
        let embedder: Arc<dyn EmbeddingBackend> = Arc::new(MockBackend::new(9, 32));
        let chunks = vec![
            chunk("d#0", "Bronchodilators relax airway smooth muscle."),
            chunk("d#1", "Insulin lowers blood glucose."),
            chunk("d#2", "Statins reduce cholesterol synthesis."),
        ];
        let index = build_index(&chunks, embedder.as_ref()).unwrap();
        let manifest = IndexManifest {
            dimension: 32,
            chunk_count: 3,
            vector_count: 3,
            chunk_limit: 1000,
            corpora: vec!["c.jsonl".into()],
            embedder: "mock".into(),
        };
        Retriever::save(dir.path(), &manifest, &chunks, &index).unwrap();
        let r = Retriever::open(dir.path(), embedder.clone(), 2).unwrap();
        let hits = r.retrieve("How do bronchodilators relax the airway?").unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].1.chunk_id, "d#0");

        let cache = Retriever::load_cache(dir.path(), 32);
        assert_eq!(cache.len(), 3);
        assert!(Retriever::load_cache(dir.path(), 16).is_empty());
        let wrong: Arc<dyn EmbeddingBackend> = Arc::new(MockBackend::new(9, 16));
        assert!(Retriever::open(dir.path(), wrong, 2).is_err());
    }
}

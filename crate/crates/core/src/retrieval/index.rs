//! Exhaustive inner-product index over chunk embeddings, and its on-disk
//! cache format.
//!
//! Cache layout (little-endian): magic `PQFVEC1\0`, `u32` dimension, `u64`
//! record count, then per record a `u16` id length, the UTF-8 chunk id and
//! `dimension` `f32` values.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::chunk::Chunk;
use crate::backend::{BackendError, EmbeddingBackend};

pub const CACHE_MAGIC: &[u8; 8] = b"PQFVEC1\0";
pub const DEFAULT_TOP_K: usize = 3;
const EMBED_BATCH: usize = 64;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("chunk `{chunk_id}` has dimension {found}, index dimension is {expected}")]
    DimensionMismatch {
        chunk_id: String,
        expected: usize,
        found: usize,
    },
    #[error("chunk `{0}` has a non-finite embedding component")]
    NonFinite(String),
    #[error("query has dimension {found}, index dimension is {expected}")]
    QueryDimension { expected: usize, found: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("not a vector cache file (bad magic)")]
    BadMagic,
    #[error("cache dimension {found} does not match configured dimension {expected}")]
    CacheDimension { expected: usize, found: usize },
    #[error("corrupt cache file: {0}")]
    Corrupt(String),
    #[error("chunk id `{0}` is longer than 65535 bytes")]
    IdTooLong(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub chunk_id: String,
    /// Inner product between query and chunk vectors.
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Immutable flat store of `(chunk_id, vector)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    ids: Vec<String>,
    data: Vec<f32>,
}

pub fn inner_product(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

impl VectorIndex {
    pub fn empty(dimension: usize) -> Self {
        VectorIndex {
            dimension,
            ids: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn from_vectors(
        dimension: usize,
        entries: impl IntoIterator<Item = (String, Vec<f32>)>,
    ) -> Result<Self, IndexError> {
        let mut index = VectorIndex::empty(dimension);
        for (chunk_id, vector) in entries {
            if vector.len() != dimension {
                return Err(IndexError::DimensionMismatch {
                    chunk_id,
                    expected: dimension,
                    found: vector.len(),
                });
            }
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(IndexError::NonFinite(chunk_id));
            }
            index.ids.push(chunk_id);
            index.data.extend_from_slice(&vector);
        }
        Ok(index)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Returns `min(k, len)` hits by descending inner product; equal scores
    /// are ordered by ascending chunk id.
    pub fn search_vector(&self, query: &[f32], k: usize) -> Result<Vec<RetrievalHit>, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        if query.len() != self.dimension {
            return Err(IndexError::QueryDimension {
                expected: self.dimension,
                found: query.len(),
            });
        }
        let scores: Vec<f64> = (0..self.len()).map(|i| inner_product(self.vector(i), query)).collect();
        let order = |a: &usize, b: &usize| -> Ordering {
            scores[*b]
                .partial_cmp(&scores[*a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.ids[*a].cmp(&self.ids[*b]))
        };
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let k = k.min(idx.len());
        if k < idx.len() {
            idx.select_nth_unstable_by(k, order);
            idx.truncate(k);
        }
        idx.sort_unstable_by(order);
        Ok(idx
            .into_iter()
            .enumerate()
            .map(|(r, i)| RetrievalHit {
                chunk_id: self.ids[i].clone(),
                score: scores[i],
                rank: r + 1,
            })
            .collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), IndexError> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&(self.dimension as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (i, id) in self.ids.iter().enumerate() {
            let len = u16::try_from(id.len()).map_err(|_| IndexError::IdTooLong(id.clone()))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            for x in self.vector(i) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a cache file; rejects a wrong magic and, when `expected_dimension`
    /// is given, a different dimension.
    pub fn read_from<R: Read>(mut r: R, expected_dimension: Option<usize>) -> Result<Self, IndexError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| IndexError::BadMagic)?;
        if &magic != CACHE_MAGIC {
            return Err(IndexError::BadMagic);
        }
        let truncated = |e: std::io::Error| IndexError::Corrupt(format!("truncated: {e}"));
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(truncated)?;
        let dimension = u32::from_le_bytes(b4) as usize;
        if let Some(expected) = expected_dimension {
            if expected != dimension {
                return Err(IndexError::CacheDimension {
                    expected,
                    found: dimension,
                });
            }
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(truncated)?;
        let count = u64::from_le_bytes(b8);
        let mut index = VectorIndex::empty(dimension);
        let mut vec_bytes = vec![0u8; dimension * 4];
        for _ in 0..count {
            let mut b2 = [0u8; 2];
            r.read_exact(&mut b2).map_err(truncated)?;
            let mut id = vec![0u8; u16::from_le_bytes(b2) as usize];
            r.read_exact(&mut id).map_err(truncated)?;
            let id = String::from_utf8(id).map_err(|e| IndexError::Corrupt(e.to_string()))?;
            r.read_exact(&mut vec_bytes).map_err(truncated)?;
            let values = vec_bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
            index.data.extend(values);
            index.ids.push(id);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(IndexError::Corrupt("trailing bytes after last record".into()));
        }
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>, expected_dimension: Option<usize>) -> Result<Self, IndexError> {
        Self::read_from(BufReader::new(File::open(path)?), expected_dimension)
    }

    /// Chunk id to vector, for cache reuse.
    pub fn vectors_by_id(&self) -> HashMap<&str, &[f32]> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), self.vector(i)))
            .collect()
    }
}

/// Previously computed embeddings keyed by chunk id, each tagged with the
/// content hash it was computed from.
#[derive(Debug, Default, Clone)]
pub struct EmbeddingCache {
    entries: HashMap<String, (String, Vec<f32>)>,
}

impl EmbeddingCache {
    pub fn insert(&mut self, chunk_id: String, content_hash: String, vector: Vec<f32>) {
        self.entries.insert(chunk_id, (content_hash, vector));
    }

    pub fn get(&self, chunk: &Chunk, hash: &str) -> Option<&[f32]> {
        self.entries
            .get(&chunk.chunk_id)
            .filter(|(h, _)| h == hash)
            .map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub embedded: usize,
    pub reused: usize,
}

pub fn build_index(chunks: &[Chunk], embedder: &dyn EmbeddingBackend) -> Result<VectorIndex, IndexError> {
    build_index_cached(chunks, embedder, &EmbeddingCache::default()).map(|(index, _)| index)
}

/// Embeds every chunk whose content hash is not already in `cache`. Batches
/// run concurrently; vectors are stored in chunk order.
pub fn build_index_cached(
    chunks: &[Chunk],
    embedder: &dyn EmbeddingBackend,
    cache: &EmbeddingCache,
) -> Result<(VectorIndex, BuildStats), IndexError> {
    let dimension = embedder.dimension();
    let hashes: Vec<String> = chunks.iter().map(Chunk::content_hash).collect();
    let missing: Vec<usize> = (0..chunks.len())
        .filter(|&i| cache.get(&chunks[i], &hashes[i]).is_none())
        .collect();
    let fresh: Vec<Vec<Vec<f32>>> = missing
        .par_chunks(EMBED_BATCH)
        .map(|batch| {
            let texts: Vec<String> = batch.iter().map(|&i| chunks[i].embedding_text()).collect();
            let vectors = embedder.embed(&texts)?;
            if vectors.len() != texts.len() {
                return Err(IndexError::Backend(BackendError::Malformed(format!(
                    "expected {} embeddings, got {}",
                    texts.len(),
                    vectors.len()
                ))));
            }
            Ok(vectors)
        })
        .collect::<Result<_, IndexError>>()?;
    let mut fresh_by_pos: HashMap<usize, Vec<f32>> = missing.iter().copied().zip(fresh.into_iter().flatten()).collect();
    let stats = BuildStats {
        embedded: missing.len(),
        reused: chunks.len() - missing.len(),
    };
    let entries = chunks.iter().enumerate().map(|(i, c)| {
        let v = match fresh_by_pos.remove(&i) {
            Some(v) => v,
            None => cache.get(c, &hashes[i]).map(<[f32]>::to_vec).unwrap_or_default(),
        };
        (c.chunk_id.clone(), v)
    });
    Ok((VectorIndex::from_vectors(dimension, entries)?, stats))
}

/// Embeds `query_text` and searches the index.
pub fn search_top_k(
    index: &VectorIndex,
    query_text: &str,
    k: usize,
    embedder: &dyn EmbeddingBackend,
) -> Result<Vec<RetrievalHit>, IndexError> {
    if k == 0 {
        return Err(IndexError::ZeroK);
    }
    if index.is_empty() {
        return Ok(Vec::new());
    }
    let query = embedder
        .embed(&[query_text.to_owned()])?
        .pop()
        .ok_or_else(|| BackendError::Malformed("no query embedding".into()))?;
    index.search_vector(&query, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_index(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> VectorIndex {
        VectorIndex::from_vectors(
            dim,
            (0..n).map(|i| {
                (
                    format!("c{i:03}"),
                    (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
                )
            }),
        )
        .unwrap()
    }

    /// Full scan, then a stable sort on (score desc, id asc).
    fn brute_force(index: &VectorIndex, q: &[f32], k: usize) -> Vec<String> {
        let mut all: Vec<(f64, &String)> = index
            .ids()
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let mut s = 0.0f64;
                for (a, b) in index.vector(i).iter().zip(q.iter()) {
                    s += f64::from(*a) * f64::from(*b);
                }
                (s, id)
            })
            .collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        all.into_iter().take(k).map(|(_, id)| id.clone()).collect()
    }

    #[test]
    fn empty_index_returns_nothing() {
        let m = MockBackend::new(1, 8);
        let index = build_index(&[], &m).unwrap();
        assert!(index.is_empty());
        assert!(search_top_k(&index, "anything", 3, &m).unwrap().is_empty());
    }

    #[test]
    fn singleton_always_rank_one() {
        let index = VectorIndex::from_vectors(2, [("only".to_string(), vec![1.0, 0.0])]).unwrap();
        for q in [[0.0f32, 1.0], [-1.0, 0.0], [0.3, 0.3]] {
            let hits = index.search_vector(&q, 3).unwrap();
            assert_eq!(hits.len(), 1);
            assert_eq!((hits[0].chunk_id.as_str(), hits[0].rank), ("only", 1));
        }
    }

    #[test]
    fn matches_brute_force_on_fifty_chunks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let index = random_index(&mut rng, 50, 16);
        for _ in 0..20 {
            let q: Vec<f32> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got: Vec<String> = index
                .search_vector(&q, 3)
                .unwrap()
                .into_iter()
                .map(|h| h.chunk_id)
                .collect();
            assert_eq!(got, brute_force(&index, &q, 3));
        }
    }

    #[test]
    fn default_k_returns_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let index = random_index(&mut rng, 10, 4);
        assert_eq!(
            index.search_vector(&[1.0, 0.0, 0.0, 0.0], DEFAULT_TOP_K).unwrap().len(),
            3
        );
    }

    #[test]
    fn exact_match_wins() {
        let index = VectorIndex::from_vectors(
            3,
            [
                ("a".to_string(), vec![0.0, 1.0, 0.0]),
                ("b".to_string(), vec![1.0, 0.0, 0.0]),
                ("c".to_string(), vec![0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        let hits = index.search_vector(&[1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(hits[0].chunk_id, "b");
        assert_eq!(hits[0].score, 1.0);
    }

    #[test]
    fn duplicate_vectors_tie_break_by_id() {
        let index = VectorIndex::from_vectors(
            2,
            [
                ("z".to_string(), vec![0.5, 0.5]),
                ("m".to_string(), vec![0.5, 0.5]),
                ("a".to_string(), vec![0.1, 0.0]),
            ],
        )
        .unwrap();
        let ids: Vec<String> = index
            .search_vector(&[1.0, 1.0], 2)
            .unwrap()
            .into_iter()
            .map(|h| h.chunk_id)
            .collect();
        assert_eq!(ids, ["m", "z"]);
    }

    #[test]
    fn build_errors() {
        let err = VectorIndex::from_vectors(2, [("x".to_string(), vec![1.0])]).unwrap_err();
        assert!(matches!(err, IndexError::DimensionMismatch { ref chunk_id, .. } if chunk_id == "x"));
        let err = VectorIndex::from_vectors(1, [("y".to_string(), vec![f32::NAN])]).unwrap_err();
        assert!(matches!(err, IndexError::NonFinite(ref id) if id == "y"));
        let index = VectorIndex::empty(2);
        assert!(matches!(
            index.search_vector(&[1.0], 1),
            Err(IndexError::QueryDimension { .. })
        ));
        assert!(matches!(index.search_vector(&[1.0, 1.0], 0), Err(IndexError::ZeroK)));
    }

    #[test]
    fn cache_file_round_trip_and_rejections() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let index = random_index(&mut rng, 7, 5);
        let mut bytes = Vec::new();
        index.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..8], b"PQFVEC1\0");
        assert_eq!(&bytes[8..12], &5u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &7u64.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 7 * (2 + 4 + 5 * 4));
        assert_eq!(VectorIndex::read_from(&bytes[..], Some(5)).unwrap(), index);
        assert!(matches!(
            VectorIndex::read_from(&bytes[..], Some(6)),
            Err(IndexError::CacheDimension { expected: 6, found: 5 })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            VectorIndex::read_from(&bad[..], None),
            Err(IndexError::BadMagic)
        ));
        assert!(matches!(
            VectorIndex::read_from(&bytes[..bytes.len() - 1], None),
            Err(IndexError::Corrupt(_))
        ));
    }

    #[test]
    fn cached_build_skips_unchanged_chunks() {
        let m = MockBackend::new(1, 8);
        let chunk = |id: &str, content: &str| Chunk {
            chunk_id: id.into(),
            parent_doc: "d".into(),
            title: "T".into(),
            content: content.into(),
            ordinal: 0,
        };
        let chunks = vec![chunk("a", "alpha beta"), chunk("b", "gamma delta")];
        let (index, stats) = build_index_cached(&chunks, &m, &EmbeddingCache::default()).unwrap();
        assert_eq!(stats, BuildStats { embedded: 2, reused: 0 });
        let mut cache = EmbeddingCache::default();
        for (i, c) in chunks.iter().enumerate() {
            cache.insert(c.chunk_id.clone(), c.content_hash(), index.vector(i).to_vec());
        }
        let changed = vec![chunks[0].clone(), chunk("b", "gamma epsilon")];
        let (again, stats) = build_index_cached(&changed, &m, &cache).unwrap();
        assert_eq!(stats, BuildStats { embedded: 1, reused: 1 });
        assert_eq!(again.vector(0), index.vector(0));
        assert_ne!(again.vector(1), index.vector(1));
    }

    proptest! {
        #[test]
        fn scores_non_increasing_and_round_trip_preserves_results(seed in 0u64..1000, k in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let index = random_index(&mut rng, 30, 6);
            let q: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let hits = index.search_vector(&q, k).unwrap();
            for w in hits.windows(2) {
                prop_assert!(w[0].score >= w[1].score);
                prop_assert_eq!(w[0].rank + 1, w[1].rank);
            }
            let mut bytes = Vec::new();
            index.write_to(&mut bytes).unwrap();
            let loaded = VectorIndex::read_from(&bytes[..], Some(6)).unwrap();
            prop_assert_eq!(loaded.search_vector(&q, k).unwrap(), hits);
        }
    }
}

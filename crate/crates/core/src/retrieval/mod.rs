//! External knowledge: corpus ingestion, chunking, the exact inner-product
//! index and source-context composition.

pub mod chunk;
pub mod context;
pub mod corpus;
pub mod index;
mod store;

pub use chunk::{
    chunk_document, chunk_hierarchical, chunk_textbook_style, Chunk, ChunkError, Chunked, Separator,
    DEFAULT_CHUNK_LIMIT, DEFAULT_SEPARATORS, HEADING_JOINER,
};
pub use context::{compose_source_context, DEFAULT_CONTEXT_BUDGET};
pub use corpus::{read_corpus, CorpusDocument, CorpusError, CorpusTag};
pub use index::{
    build_index, build_index_cached, search_top_k, BuildStats, EmbeddingCache, IndexError, RetrievalHit, VectorIndex,
    CACHE_MAGIC, DEFAULT_TOP_K,
};
pub use store::{ChunkRecord, IndexManifest, Retriever, StoreError, CHUNKS_FILE, MANIFEST_FILE, VECTORS_FILE};

//! Semantic side of routing: query transformation, BM25 scoring and
//! two-stage candidate retrieval.

pub mod bm25;
pub mod retrieval;
pub mod transform;

pub use bm25::{bm25_score, bm25_score_tokens, tokenize, Bm25Params, CorpusStats, EmptyCorpus};
pub use retrieval::{filter_servers, rank_tools, softmax, RetrievalError, SemanticCandidate, ServerHit};
pub use transform::{
    transform_query, PassThrough, PreprocessedQuery, QueryTransformer, RuleFile, RuleSpec,
    RuleTransformer, TransformError, WithFallback, GENERAL_PURPOSE,
};

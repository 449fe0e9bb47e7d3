//! Okapi BM25 over a small in-memory corpus.
//!
//! Tokens are lowercase runs of alphanumeric characters; there is no stemming
//! and no stop-word list. For a query `Q` and document `D`:
//!
//! ```text
//! score(D, Q) = sum over q in Q of
//!     idf(q) * tf(q, D) * (k1 + 1) / (tf(q, D) + k1 * (1 - b + b * |D| / avgdl))
//! idf(q) = ln(1 + (N - n(q) + 0.5) / (n(q) + 0.5))
//! ```
//!
//! Repeated query tokens each contribute.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.5, b: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("BM25 corpus is empty")]
pub struct EmptyCorpus;

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Document frequencies and length statistics of one collection.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    doc_count: usize,
    avg_len: f64,
    doc_freq: HashMap<String, usize>,
}

impl CorpusStats {
    pub fn from_tokenized<D: AsRef<[String]>>(docs: &[D]) -> Result<Self, EmptyCorpus> {
        if docs.is_empty() {
            return Err(EmptyCorpus);
        }
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut total_len = 0usize;
        for doc in docs {
            let doc = doc.as_ref();
            total_len += doc.len();
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *doc_freq.entry(term.to_string()).or_default() += 1;
            }
        }
        Ok(CorpusStats {
            doc_count: docs.len(),
            avg_len: total_len as f64 / docs.len() as f64,
            doc_freq,
        })
    }

    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> Result<Self, EmptyCorpus> {
        let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t.as_ref())).collect();
        Self::from_tokenized(&docs)
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_freq(term) as f64;
        (1.0 + (self.doc_count as f64 - n + 0.5) / (n + 0.5)).ln()
    }
}

/// Scores a tokenized document against a tokenized query.
pub fn bm25_score_tokens(
    doc: &[String],
    query: &[String],
    stats: &CorpusStats,
    params: Bm25Params,
) -> f64 {
    if doc.is_empty() || stats.avg_len == 0.0 {
        return 0.0;
    }
    let len_norm = 1.0 - params.b + params.b * doc.len() as f64 / stats.avg_len;
    query
        .iter()
        .map(|term| {
            let tf = doc.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                0.0
            } else {
                stats.idf(term) * tf * (params.k1 + 1.0) / (tf + params.k1 * len_norm)
            }
        })
        .sum()
}

pub fn bm25_score(doc: &str, query: &str, stats: &CorpusStats, params: Bm25Params) -> f64 {
    bm25_score_tokens(&tokenize(doc), &tokenize(query), stats, params)
}

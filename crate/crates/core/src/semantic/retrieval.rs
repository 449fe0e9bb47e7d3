//! Coarse-to-fine retrieval: rank servers by description, then rank the tools
//! of the surviving servers and normalize their scores with a softmax.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bm25::{bm25_score_tokens, tokenize, Bm25Params, CorpusStats};
use crate::pool::{ServerPool, ServerRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("server filter size {requested} outside 1..={available}")]
    ServerFilterOutOfRange { requested: usize, available: usize },
    #[error("tool filter size must be at least 1")]
    ZeroToolFilter,
    #[error("no candidate servers")]
    NoServers,
    #[error("candidate servers host no tools")]
    NoTools,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerHit<'a> {
    pub server: &'a ServerRecord,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticCandidate {
    pub tool_id: String,
    pub server_id: String,
    /// BM25 score of the tool description.
    pub raw_score: f64,
    /// Softmax of `raw_score` over the candidate set.
    pub normalized: f64,
}

/// Numerically stable softmax; empty input gives empty output.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let Some(max) = scores.iter().copied().reduce(f64::max) else {
        return Vec::new();
    };
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Top-`s` servers by BM25 of their description against `query`, ties
/// broken by ascending server id.
pub fn filter_servers<'a>(
    query: &str,
    pool: &'a ServerPool,
    s: usize,
    params: Bm25Params,
) -> Result<Vec<ServerHit<'a>>, RetrievalError> {
    if s == 0 || s > pool.len() {
        return Err(RetrievalError::ServerFilterOutOfRange {
            requested: s,
            available: pool.len(),
        });
    }
    let docs: Vec<Vec<String>> = pool
        .servers()
        .iter()
        .map(|srv| tokenize(&srv.description))
        .collect();
    let stats = CorpusStats::from_tokenized(&docs).map_err(|_| RetrievalError::NoServers)?;
    let q = tokenize(query);
    let mut hits: Vec<ServerHit<'a>> = pool
        .servers()
        .iter()
        .zip(&docs)
        .map(|(server, doc)| ServerHit {
            server,
            score: bm25_score_tokens(doc, &q, &stats, params),
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.server.server_id.cmp(&b.server.server_id))
    });
    hits.truncate(s);
    Ok(hits)
}

/// Top-`k` tools across `servers` by BM25 of the tool description, with `k`
/// clamped to the number of tools. Ties are broken by `(server_id,
/// tool_id)`. Scores are softmax-normalized over the returned set only.
pub fn rank_tools(
    query: &str,
    servers: &[&ServerRecord],
    k: usize,
    params: Bm25Params,
) -> Result<Vec<SemanticCandidate>, RetrievalError> {
    if servers.is_empty() {
        return Err(RetrievalError::NoServers);
    }
    if k == 0 {
        return Err(RetrievalError::ZeroToolFilter);
    }
    let tools: Vec<(&ServerRecord, &crate::pool::ToolRecord, Vec<String>)> = servers
        .iter()
        .flat_map(|srv| {
            srv.tools
                .iter()
                .map(move |t| (*srv, t, tokenize(&t.description)))
        })
        .collect();
    if tools.is_empty() {
        return Err(RetrievalError::NoTools);
    }
    let docs: Vec<&[String]> = tools.iter().map(|(_, _, d)| d.as_slice()).collect();
    let stats = CorpusStats::from_tokenized(&docs).map_err(|_| RetrievalError::NoTools)?;
    let q = tokenize(query);

    let mut scored: Vec<SemanticCandidate> = tools
        .iter()
        .map(|(srv, tool, doc)| SemanticCandidate {
            tool_id: tool.tool_id.clone(),
            server_id: srv.server_id.clone(),
            raw_score: bm25_score_tokens(doc, &q, &stats, params),
            normalized: 0.0,
        })
        .collect();
    scored.sort_by(candidate_order);
    scored.truncate(k.min(scored.len()));

    let raw: Vec<f64> = scored.iter().map(|c| c.raw_score).collect();
    for (c, p) in scored.iter_mut().zip(softmax(&raw)) {
        c.normalized = p;
    }
    Ok(scored)
}

fn candidate_order(a: &SemanticCandidate, b: &SemanticCandidate) -> Ordering {
    b.raw_score
        .total_cmp(&a.raw_score)
        .then_with(|| a.server_id.cmp(&b.server_id))
        .then_with(|| a.tool_id.cmp(&b.tool_id))
}

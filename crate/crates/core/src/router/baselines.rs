use std::sync::Arc;
use std::time::Instant;

use super::{
    preprocess, semantic_stage, Algorithm, RouteContext, Router, RoutingDecision, RoutingError,
    RoutingParams, ScoredCandidate, Selection,
};
use crate::pool::ServerPool;
use crate::semantic::{Bm25Params, PassThrough, QueryTransformer, RuleTransformer};

/// Highest raw BM25 score wins; ties by ascending `(server_id, tool_id)`.
pub fn select_rag(
    raw_query: &str,
    pool: &ServerPool,
    params: &RoutingParams,
    bm25: Bm25Params,
) -> Result<Selection, RoutingError> {
    params.validate()?;
    let candidates: Vec<ScoredCandidate> = semantic_stage(raw_query, pool, params, bm25)?
        .iter()
        .map(ScoredCandidate::semantic_only)
        .collect();
    let selected = (0..candidates.len())
        .min_by(|&a, &b| {
            let (x, y) = (&candidates[a], &candidates[b]);
            y.raw_score
                .total_cmp(&x.raw_score)
                .then_with(|| x.server_id.cmp(&y.server_id))
                .then_with(|| x.tool_id.cmp(&y.tool_id))
        })
        .ok_or(RoutingError::NoCandidates)?;
    Ok(Selection {
        candidates,
        selected,
    })
}

/// Highest normalized semantic score wins; ties by ascending
/// `(server_id, tool_id)`. Network state is never consulted.
pub fn select_prag(
    routed_query: &str,
    pool: &ServerPool,
    params: &RoutingParams,
    bm25: Bm25Params,
) -> Result<Selection, RoutingError> {
    params.validate()?;
    let candidates: Vec<ScoredCandidate> = semantic_stage(routed_query, pool, params, bm25)?
        .iter()
        .map(ScoredCandidate::semantic_only)
        .collect();
    let mut selected = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let best = &candidates[selected];
        let better = c.semantic > best.semantic
            || (c.semantic == best.semantic
                && (c.server_id.as_str(), c.tool_id.as_str())
                    < (best.server_id.as_str(), best.tool_id.as_str()));
        if better {
            selected = i;
        }
    }
    Ok(Selection {
        candidates,
        selected,
    })
}

/// Plain retrieval on the raw user query.
#[derive(Debug, Clone)]
pub struct RagRouter {
    pub params: RoutingParams,
    pub bm25: Bm25Params,
}

impl RagRouter {
    pub fn new(params: RoutingParams) -> Self {
        RagRouter {
            params,
            bm25: Bm25Params::default(),
        }
    }
}

impl Router for RagRouter {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Rag
    }

    fn route(&self, query: &str, ctx: &RouteContext<'_>) -> Result<RoutingDecision, RoutingError> {
        let start = Instant::now();
        let pre = PassThrough.transform(query)?;
        let selection = select_rag(&pre.canonical, ctx.pool, &self.params, self.bm25)?;
        Ok(selection.into_decision(Algorithm::Rag, pre.canonical, start, false, false))
    }
}

/// Retrieval on the predicted tool phrase, semantic score only.
#[derive(Clone)]
pub struct PragRouter {
    pub params: RoutingParams,
    pub bm25: Bm25Params,
    transformer: Arc<dyn QueryTransformer>,
    fallback: Option<Arc<dyn QueryTransformer>>,
}

impl PragRouter {
    pub fn new(params: RoutingParams) -> Self {
        PragRouter {
            params,
            bm25: Bm25Params::default(),
            transformer: Arc::new(RuleTransformer::builtin()),
            fallback: None,
        }
    }

    pub fn with_transformer(
        mut self,
        transformer: Arc<dyn QueryTransformer>,
        fallback: Option<Arc<dyn QueryTransformer>>,
    ) -> Self {
        self.transformer = transformer;
        self.fallback = fallback;
        self
    }

    /// Predicted tool phrase, and whether the fallback transformer produced
    /// it.
    pub(crate) fn routed_query(&self, query: &str) -> Result<(String, bool), RoutingError> {
        let (pre, fell_back) = preprocess(query, &*self.transformer, self.fallback.as_deref())?;
        Ok((pre.canonical, fell_back))
    }

    pub(crate) fn is_external(&self) -> bool {
        self.transformer.is_external()
    }
}

impl Router for PragRouter {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Prag
    }

    fn route(&self, query: &str, ctx: &RouteContext<'_>) -> Result<RoutingDecision, RoutingError> {
        let start = Instant::now();
        let (routed, fell_back) = self.routed_query(query)?;
        let selection = select_prag(&routed, ctx.pool, &self.params, self.bm25)?;
        Ok(selection.into_decision(Algorithm::Prag, routed, start, self.is_external(), fell_back))
    }
}

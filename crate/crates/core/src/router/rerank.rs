use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use super::{
    select_prag, Algorithm, PragRouter, RouteContext, Router, RoutingDecision, RoutingError,
    RoutingParams, Selection,
};
use crate::pool::ServerPool;
use crate::semantic::{tokenize, Bm25Params};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RerankError {
    #[error("reranker adapter failed: {0}")]
    Adapter(String),
    #[error("reranker returned index {0} outside the candidate list")]
    BadIndex(usize),
}

/// A candidate shown to a reranker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerankItem {
    pub tool_id: String,
    pub server_id: String,
    pub description: String,
}

/// Picks one candidate out of a semantically ranked list.
pub trait Reranker: Send + Sync {
    /// Returns the index of the chosen item.
    fn pick(&self, routed_query: &str, items: &[RerankItem]) -> Result<usize, RerankError>;

    fn is_external(&self) -> bool {
        false
    }
}

/// Offline reranker: the item whose description shares the most distinct
/// tokens with the query wins, earliest item on ties.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenOverlapReranker;

impl Reranker for TokenOverlapReranker {
    fn pick(&self, routed_query: &str, items: &[RerankItem]) -> Result<usize, RerankError> {
        let query: BTreeSet<String> = tokenize(routed_query).into_iter().collect();
        let mut best = (0, 0);
        for (i, item) in items.iter().enumerate() {
            let doc: BTreeSet<String> = tokenize(&item.description).into_iter().collect();
            let overlap = query.intersection(&doc).count();
            if overlap > best.1 {
                best = (i, overlap);
            }
        }
        Ok(best.0)
    }
}

/// Semantic-only candidates re-ordered by `reranker`. A single candidate is
/// returned without consulting it. If the reranker fails the semantic pick
/// stands and the returned flag is set.
pub fn select_rerank(
    routed_query: &str,
    pool: &ServerPool,
    params: &RoutingParams,
    bm25: Bm25Params,
    reranker: &dyn Reranker,
) -> Result<(Selection, bool), RoutingError> {
    let mut selection = select_prag(routed_query, pool, params, bm25)?;
    if selection.candidates.len() == 1 {
        return Ok((selection, false));
    }
    let items: Vec<RerankItem> = selection
        .candidates
        .iter()
        .map(|c| RerankItem {
            tool_id: c.tool_id.clone(),
            server_id: c.server_id.clone(),
            description: pool
                .get(&c.server_id)
                .and_then(|s| s.tool(&c.tool_id))
                .map(|t| t.description.clone())
                .unwrap_or_default(),
        })
        .collect();
    match reranker.pick(routed_query, &items) {
        Ok(i) if i < items.len() => {
            selection.selected = i;
            Ok((selection, false))
        }
        _ => Ok((selection, true)),
    }
}

/// Semantic retrieval on the predicted tool phrase followed by a reranking
/// step.
#[derive(Clone)]
pub struct RerankRouter {
    pub prag: PragRouter,
    reranker: Arc<dyn Reranker>,
}

impl RerankRouter {
    pub fn new(params: RoutingParams) -> Self {
        RerankRouter {
            prag: PragRouter::new(params),
            reranker: Arc::new(TokenOverlapReranker),
        }
    }

    pub fn with_prag(mut self, prag: PragRouter) -> Self {
        self.prag = prag;
        self
    }

    pub fn with_reranker(mut self, reranker: Arc<dyn Reranker>) -> Self {
        self.reranker = reranker;
        self
    }
}

impl Router for RerankRouter {
    fn algorithm(&self) -> Algorithm {
        Algorithm::RerankRag
    }

    fn route(&self, query: &str, ctx: &RouteContext<'_>) -> Result<RoutingDecision, RoutingError> {
        let start = Instant::now();
        let (routed, transform_fallback) = self.prag.routed_query(query)?;
        let (selection, rerank_fallback) = select_rerank(
            &routed,
            ctx.pool,
            &self.prag.params,
            self.prag.bm25,
            &*self.reranker,
        )?;
        Ok(selection.into_decision(
            Algorithm::RerankRag,
            routed,
            start,
            self.prag.is_external() || self.reranker.is_external(),
            transform_fallback || rerank_fallback,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::tests::server;

    fn item(desc: &str) -> RerankItem {
        RerankItem {
            tool_id: "t".into(),
            server_id: "s".into(),
            description: desc.into(),
        }
    }

    #[test]
    fn overlap_counts_distinct_tokens() {
        let items = [item("web web web"), item("a websearch tool"), item("websearch web")];
        assert_eq!(TokenOverlapReranker.pick("a websearch tool", &items), Ok(1));
        assert_eq!(TokenOverlapReranker.pick("nothing", &items), Ok(0));
    }

    struct Failing;
    impl Reranker for Failing {
        fn pick(&self, _: &str, _: &[RerankItem]) -> Result<usize, RerankError> {
            Err(RerankError::Adapter("timeout".into()))
        }
    }

    struct Last;
    impl Reranker for Last {
        fn pick(&self, _: &str, items: &[RerankItem]) -> Result<usize, RerankError> {
            Ok(items.len() - 1)
        }
    }

    struct OutOfRange;
    impl Reranker for OutOfRange {
        fn pick(&self, _: &str, items: &[RerankItem]) -> Result<usize, RerankError> {
            Ok(items.len())
        }
    }

    fn pool() -> ServerPool {
        ServerPool::new(vec![
            server("a", "websearch", "websearch", &[("q", "websearch websearch")]),
            server("b", "websearch", "websearch", &[("q", "a websearch tool")]),
        ])
        .unwrap()
    }

    fn params() -> RoutingParams {
        RoutingParams {
            filter_servers: 2,
            ..Default::default()
        }
    }

    #[test]
    fn reranker_overrides_semantic_pick() {
        let pool = pool();
        let prag = select_prag("a websearch tool", &pool, &params(), Bm25Params::default()).unwrap();
        let (sel, fell_back) = select_rerank(
            "a websearch tool",
            &pool,
            &params(),
            Bm25Params::default(),
            &Last,
        )
        .unwrap();
        assert!(!fell_back);
        assert_ne!(sel.selected, prag.selected);
        assert_eq!(sel.selected, sel.candidates.len() - 1);
        assert_eq!(sel.candidates, prag.candidates);
    }

    #[test]
    fn failures_fall_back_to_semantic_pick() {
        let pool = pool();
        let prag = select_prag("a websearch tool", &pool, &params(), Bm25Params::default()).unwrap();
        for r in [&Failing as &dyn Reranker, &OutOfRange] {
            let (sel, fell_back) =
                select_rerank("a websearch tool", &pool, &params(), Bm25Params::default(), r)
                    .unwrap();
            assert!(fell_back);
            assert_eq!(sel.selected, prag.selected);
        }
    }

    #[test]
    fn single_candidate_skips_reranker() {
        let pool = pool();
        let p = RoutingParams {
            filter_tools: 1,
            ..params()
        };
        let (sel, fell_back) =
            select_rerank("a websearch tool", &pool, &p, Bm25Params::default(), &Failing).unwrap();
        assert!(!fell_back);
        assert_eq!(sel.candidates.len(), 1);
    }
}

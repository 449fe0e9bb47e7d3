use std::sync::Arc;
use std::time::Instant;

use super::{
    joint_score, preprocess, selection_order, semantic_stage, Algorithm, RouteContext, Router,
    RoutingDecision, RoutingError, RoutingParams, ScoredCandidate, Selection,
};
use crate::network::{score_server_latency, ScoringParams};
use crate::semantic::{Bm25Params, QueryTransformer, RuleTransformer};

/// Scores every candidate tool by `alpha * C + beta * N` and picks the
/// maximum. `N` comes from each hosting server's latency history up to and
/// including tick `ctx.t`.
pub fn select_sonar(
    routed_query: &str,
    ctx: &RouteContext<'_>,
    params: &RoutingParams,
    scoring: &ScoringParams,
    bm25: Bm25Params,
) -> Result<Selection, RoutingError> {
    params.validate()?;
    let semantic = semantic_stage(routed_query, ctx.pool, params, bm25)?;

    // Each server is scored once even if it hosts several candidates.
    let mut network: Vec<(&str, f64)> = Vec::new();
    let mut candidates = Vec::with_capacity(semantic.len());
    for c in &semantic {
        let n = match network.iter().find(|(id, _)| *id == c.server_id) {
            Some(&(_, n)) => n,
            None => {
                let server = ctx
                    .pool
                    .get(&c.server_id)
                    .ok_or(RoutingError::NoCandidates)?;
                let history = ctx.env.series(&server.name)?.history_up_to(ctx.t)?;
                let n = score_server_latency(&history, scoring)?.final_score;
                network.push((&c.server_id, n));
                n
            }
        };
        candidates.push(ScoredCandidate {
            tool_id: c.tool_id.clone(),
            server_id: c.server_id.clone(),
            raw_score: c.raw_score,
            semantic: c.normalized,
            network: n,
            joint: joint_score(c.normalized, n, params.alpha, params.beta)?,
        });
    }

    let selected = (0..candidates.len())
        .min_by(|&a, &b| selection_order(&candidates[a], &candidates[b]))
        .ok_or(RoutingError::NoCandidates)?;
    Ok(Selection {
        candidates,
        selected,
    })
}

/// Network-aware router: tool prediction, two-stage semantic retrieval,
/// then joint semantic and network scoring.
#[derive(Clone)]
pub struct SonarRouter {
    pub params: RoutingParams,
    pub scoring: ScoringParams,
    pub bm25: Bm25Params,
    transformer: Arc<dyn QueryTransformer>,
    fallback: Option<Arc<dyn QueryTransformer>>,
}

impl SonarRouter {
    /// Router with the builtin rule-based tool prediction.
    pub fn new(params: RoutingParams, scoring: ScoringParams) -> Self {
        SonarRouter {
            params,
            scoring,
            bm25: Bm25Params::default(),
            transformer: Arc::new(RuleTransformer::builtin()),
            fallback: None,
        }
    }

    /// Replaces tool prediction. `fallback` is used when `transformer` fails.
    pub fn with_transformer(
        mut self,
        transformer: Arc<dyn QueryTransformer>,
        fallback: Option<Arc<dyn QueryTransformer>>,
    ) -> Self {
        self.transformer = transformer;
        self.fallback = fallback;
        self
    }
}

impl Router for SonarRouter {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Sonar
    }

    fn route(&self, query: &str, ctx: &RouteContext<'_>) -> Result<RoutingDecision, RoutingError> {
        let start = Instant::now();
        let (pre, fell_back) = preprocess(query, &*self.transformer, self.fallback.as_deref())?;
        let selection = select_sonar(&pre.canonical, ctx, &self.params, &self.scoring, self.bm25)?;
        Ok(selection.into_decision(
            Algorithm::Sonar,
            pre.canonical,
            start,
            self.transformer.is_external(),
            fell_back,
        ))
    }
}

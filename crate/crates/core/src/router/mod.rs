//! Tool routing: one [`Router`] interface, the network-aware SONAR router and
//! the semantic-only baselines.

mod baselines;
mod rerank;
mod sonar;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latency::{Environment, LatencyError};
use crate::network::ScoringError;
use crate::pool::ServerPool;
use crate::semantic::{
    filter_servers, rank_tools, Bm25Params, PreprocessedQuery, QueryTransformer, RetrievalError,
    SemanticCandidate, TransformError,
};

pub use baselines::{select_prag, select_rag, PragRouter, RagRouter};
pub use rerank::{select_rerank, RerankError, RerankItem, RerankRouter, Reranker, TokenOverlapReranker};
pub use sonar::{select_sonar, SonarRouter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sonar,
    Rag,
    Prag,
    RerankRag,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Sonar => "sonar",
            Algorithm::Rag => "rag",
            Algorithm::Prag => "prag",
            Algorithm::RerankRag => "rerank_rag",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = RoutingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sonar" => Ok(Algorithm::Sonar),
            "rag" => Ok(Algorithm::Rag),
            "prag" => Ok(Algorithm::Prag),
            "rerank_rag" | "rerankrag" | "rerank" => Ok(Algorithm::RerankRag),
            other => Err(RoutingError::InvalidParams(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutingParams {
    /// Weight of semantic relevance.
    pub alpha: f64,
    /// Weight of network quality; `alpha + beta = 1`.
    pub beta: f64,
    /// Server filter size S.
    pub filter_servers: usize,
    /// Tool filter size T.
    pub filter_tools: usize,
    pub algorithm: Algorithm,
}

impl Default for RoutingParams {
    fn default() -> Self {
        RoutingParams {
            alpha: 0.5,
            beta: 0.5,
            filter_servers: 5,
            filter_tools: 10,
            algorithm: Algorithm::Sonar,
        }
    }
}

impl RoutingParams {
    pub fn validate(&self) -> Result<(), RoutingError> {
        check_weights(self.alpha, self.beta)?;
        if self.filter_servers < 1 || self.filter_tools < 1 {
            return Err(RoutingError::InvalidParams(
                "filter sizes must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_weights(alpha: f64, beta: f64) -> Result<(), RoutingError> {
    if alpha < 0.0 || beta < 0.0 || !alpha.is_finite() || !beta.is_finite() {
        return Err(RoutingError::InvalidParams(format!(
            "alpha {alpha} and beta {beta} must be non-negative"
        )));
    }
    if (alpha + beta - 1.0).abs() > 1e-9 {
        return Err(RoutingError::InvalidParams(format!(
            "alpha + beta must equal 1, got {}",
            alpha + beta
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("invalid routing parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Latency(#[from] LatencyError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("no candidate tools after filtering")]
    NoCandidates,
}

/// `alpha * C + beta * N`.
pub fn joint_score(c: f64, n: f64, alpha: f64, beta: f64) -> Result<f64, RoutingError> {
    check_weights(alpha, beta)?;
    Ok(alpha * c + beta * n)
}

/// One scored candidate tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub tool_id: String,
    pub server_id: String,
    pub raw_score: f64,
    /// Semantic score C (softmax-normalized).
    pub semantic: f64,
    /// Network score N of the hosting server; 0 for semantic-only routers.
    pub network: f64,
    /// Joint score S.
    pub joint: f64,
}

impl ScoredCandidate {
    fn semantic_only(c: &SemanticCandidate) -> Self {
        ScoredCandidate {
            tool_id: c.tool_id.clone(),
            server_id: c.server_id.clone(),
            raw_score: c.raw_score,
            semantic: c.normalized,
            network: 0.0,
            joint: c.normalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub algorithm: Algorithm,
    /// The query text the semantic stage actually matched.
    pub routed_query: String,
    pub selected_server: String,
    pub selected_tool: String,
    pub candidates: Vec<ScoredCandidate>,
    /// Wall-clock time of the whole selection pipeline, in ms.
    pub selection_wall_time_ms: f64,
    /// True if an HTTP adapter took part in this decision.
    pub used_external_adapter: bool,
    /// True if an adapter failed and the decision fell back to the local
    /// pick.
    pub fallback: bool,
}

/// Simulation state a router may read when deciding.
#[derive(Debug, Clone, Copy)]
pub struct RouteContext<'a> {
    pub pool: &'a ServerPool,
    pub env: &'a Environment,
    pub t: usize,
}

/// A pluggable tool-routing algorithm.
pub trait Router: Send + Sync {
    fn algorithm(&self) -> Algorithm;

    fn route(&self, query: &str, ctx: &RouteContext<'_>) -> Result<RoutingDecision, RoutingError>;
}

/// Scored candidates and the index of the chosen one.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub candidates: Vec<ScoredCandidate>,
    pub selected: usize,
}

impl Selection {
    pub fn chosen(&self) -> &ScoredCandidate {
        &self.candidates[self.selected]
    }

    pub(crate) fn into_decision(
        self,
        algorithm: Algorithm,
        routed_query: String,
        start: Instant,
        used_external_adapter: bool,
        fallback: bool,
    ) -> RoutingDecision {
        let chosen = self.chosen();
        RoutingDecision {
            algorithm,
            routed_query,
            selected_server: chosen.server_id.clone(),
            selected_tool: chosen.tool_id.clone(),
            selection_wall_time_ms: start.elapsed().as_secs_f64() * 1000.0,
            candidates: self.candidates,
            used_external_adapter,
            fallback,
        }
    }
}

/// Runs `primary`, switching to `fallback` if it fails. The flag reports
/// whether the fallback was used.
pub(crate) fn preprocess(
    query: &str,
    primary: &dyn QueryTransformer,
    fallback: Option<&dyn QueryTransformer>,
) -> Result<(PreprocessedQuery, bool), RoutingError> {
    match (primary.transform(query), fallback) {
        (Ok(pre), _) => Ok((pre, false)),
        (Err(_), Some(fb)) => Ok((fb.transform(query)?, true)),
        (Err(e), None) => Err(e.into()),
    }
}

/// Server filter then tool ranking, shared by every router.
pub(crate) fn semantic_stage(
    routed_query: &str,
    pool: &ServerPool,
    params: &RoutingParams,
    bm25: Bm25Params,
) -> Result<Vec<SemanticCandidate>, RoutingError> {
    let hits = filter_servers(routed_query, pool, params.filter_servers, bm25)?;
    let servers: Vec<_> = hits.iter().map(|h| h.server).collect();
    let candidates = rank_tools(routed_query, &servers, params.filter_tools, bm25)?;
    if candidates.is_empty() {
        return Err(RoutingError::NoCandidates);
    }
    Ok(candidates)
}

/// Selection order: higher joint score, then higher semantic score, then
/// ascending server id, then ascending tool id.
pub(crate) fn selection_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.joint
        .total_cmp(&a.joint)
        .then_with(|| b.semantic.total_cmp(&a.semantic))
        .then_with(|| a.server_id.cmp(&b.server_id))
        .then_with(|| a.tool_id.cmp(&b.tool_id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_score_cases() {
        assert_eq!(joint_score(0.6, -1.0, 1.0, 0.0).unwrap(), 0.6);
        assert!((joint_score(0.6, 1.0, 0.5, 0.5).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(joint_score(1.0, -1.0, 0.5, 0.5).unwrap(), 0.0);
        assert!(joint_score(0.5, 0.5, 0.7, 0.7).is_err());
        assert!(joint_score(0.5, 0.5, 1.5, -0.5).is_err());
    }

    #[test]
    fn algorithm_names() {
        for a in [Algorithm::Sonar, Algorithm::Rag, Algorithm::Prag, Algorithm::RerankRag] {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.as_str()));
        }
        assert!("bogus".parse::<Algorithm>().is_err());
    }

    #[test]
    fn params_validation() {
        assert!(RoutingParams::default().validate().is_ok());
        let p = RoutingParams {
            alpha: 0.8,
            beta: 0.3,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = RoutingParams {
            filter_tools: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}

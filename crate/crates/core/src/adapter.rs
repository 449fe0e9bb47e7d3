//! Optional HTTP chat-completion adapter for tool prediction and reranking.
//!
//! Only the endpoint, model name and key come from the environment; nothing
//! that affects an experiment's outcome does.

use std::env;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use crate::router::{RerankError, RerankItem, Reranker};
use crate::semantic::{PreprocessedQuery, QueryTransformer, TransformError};

pub const ENV_ENDPOINT: &str = "NETMCP_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "NETMCP_LLM_MODEL";
pub const ENV_API_KEY: &str = "NETMCP_LLM_API_KEY";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("{ENV_ENDPOINT} and {ENV_MODEL} must be set")]
    NotConfigured,
    #[error("chat request failed: {0}")]
    Transport(String),
    #[error("unexpected chat response: {0}")]
    BadResponse(String),
}

/// Minimal client for an OpenAI-style `/chat/completions` endpoint.
#[derive(Debug, Clone)]
pub struct ChatClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl ChatClient {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        ChatClient {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            agent,
        }
    }

    pub fn from_env(timeout: Duration) -> Result<Self, AdapterError> {
        let endpoint = env::var(ENV_ENDPOINT).map_err(|_| AdapterError::NotConfigured)?;
        let model = env::var(ENV_MODEL).map_err(|_| AdapterError::NotConfigured)?;
        Ok(Self::new(endpoint, model, env::var(ENV_API_KEY).ok(), timeout))
    }

    /// Sends one system and one user message and returns the reply text.
    pub fn complete(&self, system: &str, user: &str) -> Result<String, AdapterError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let reply: Value = request
            .send_json(&body)
            .map_err(|e| AdapterError::Transport(e.to_string()))?
            .into_body()
            .read_json()
            .map_err(|e| AdapterError::BadResponse(e.to_string()))?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(|s| s.trim().to_string())
            .ok_or_else(|| AdapterError::BadResponse("missing choices[0].message.content".into()))
    }
}

const TRANSFORM_PROMPT: &str = "Rewrite the user's request as a short phrase naming the kind of \
tool that can answer it, for example \"a websearch tool\" or \"a code editing tool\". Reply with \
the phrase only.";

const RERANK_PROMPT: &str = "You pick the best tool for a request. Reply with the number of the \
best candidate only.";

/// Tool prediction through a chat model.
#[derive(Debug, Clone)]
pub struct ChatTransformer {
    pub client: ChatClient,
}

impl QueryTransformer for ChatTransformer {
    fn transform(&self, query: &str) -> Result<PreprocessedQuery, TransformError> {
        let reply = self
            .client
            .complete(TRANSFORM_PROMPT, query)
            .map_err(|e| TransformError::Adapter(e.to_string()))?;
        let canonical = reply.trim_matches(|c: char| c == '"' || c == '\'' || c.is_whitespace());
        if canonical.is_empty() {
            return Err(TransformError::Adapter("empty reply".into()));
        }
        Ok(PreprocessedQuery {
            original: query.to_string(),
            canonical: canonical.to_string(),
        })
    }

    fn is_external(&self) -> bool {
        true
    }
}

/// Reranking through a chat model.
#[derive(Debug, Clone)]
pub struct ChatReranker {
    pub client: ChatClient,
}

impl Reranker for ChatReranker {
    fn pick(&self, routed_query: &str, items: &[RerankItem]) -> Result<usize, RerankError> {
        let mut prompt = format!("Request: {routed_query}\nCandidates:\n");
        for (i, item) in items.iter().enumerate() {
            prompt.push_str(&format!(
                "{i}: {} on {}: {}\n",
                item.tool_id, item.server_id, item.description
            ));
        }
        let reply = self
            .client
            .complete(RERANK_PROMPT, &prompt)
            .map_err(|e| RerankError::Adapter(e.to_string()))?;
        let digits: String = reply
            .chars()
            .skip_while(|c| !c.is_ascii_digit())
            .take_while(char::is_ascii_digit)
            .collect();
        let index: usize = digits
            .parse()
            .map_err(|_| RerankError::Adapter(format!("no index in reply {reply:?}")))?;
        if index >= items.len() {
            return Err(RerankError::BadIndex(index));
        }
        Ok(index)
    }

    fn is_external(&self) -> bool {
        true
    }
}

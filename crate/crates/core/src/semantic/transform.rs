//! Tool prediction: rewriting a raw user query into a short tool-type phrase
//! such as `"a websearch tool"`.

use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreprocessedQuery {
    pub original: String,
    /// Never empty.
    pub canonical: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("query transformer adapter failed: {0}")]
    Adapter(String),
    #[error("query is empty")]
    EmptyQuery,
    #[error("invalid rule file: {0}")]
    Rules(String),
}

pub trait QueryTransformer: Send + Sync {
    fn transform(&self, query: &str) -> Result<PreprocessedQuery, TransformError>;

    /// True when `transform` leaves the process (HTTP adapter).
    fn is_external(&self) -> bool {
        false
    }
}

pub fn transform_query(
    query: &str,
    transformer: &dyn QueryTransformer,
) -> Result<PreprocessedQuery, TransformError> {
    transformer.transform(query)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    /// Case-insensitive regular expression; a plain word acts as a substring
    /// match.
    #[serde(rename = "match")]
    pub pattern: String,
    pub canonical: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFile {
    pub patterns: Vec<RuleSpec>,
    pub fallback: String,
}

pub const GENERAL_PURPOSE: &str = "a general purpose tool";

/// Keyword rules for the bundled dataset. Specific domains come first so that
/// a question word does not pull a shopping query into web search.
const BUILTIN_RULES: &[(&str, &str)] = &[
    (r"\b(amazon|buy|purchase|prices?|shopping|cheapest|deal)\b", "a product search tool"),
    (r"\b(linkedin|recruiters?|resume|job postings?|hiring)\b", "a professional network search tool"),
    (r"\b(github|repository|repo|pull request|commits?)\b", "a code repository tool"),
    (r"\b(refactor|debug|compile|source code|rename|lint)\b", "a code editing tool"),
    (r"\b(sql|database|tables?)\b", "a database query tool"),
    (r"\b(calendar|meetings?|appointments?)\b", "a calendar scheduling tool"),
    (r"\b(directions|navigate|driving|distance between)\b", "a maps and navigation tool"),
    (r"\b(email|inbox|mail)\b", "an email tool"),
    (r"\b(draw|images?|pictures?|illustrations?|logo)\b", "an image generation tool"),
    (r"\b(files?|folders?|directory)\b", "a file management tool"),
    (
        r"\b(who|what|when|where|which|why|how|search|find|look up|latest|news|founded|history|information|websearch)\b|\?",
        "a websearch tool",
    ),
];

/// Deterministic rule-based transformer. The first matching rule wins;
/// queries matching no rule map to the fallback phrase.
#[derive(Debug, Clone)]
pub struct RuleTransformer {
    rules: Vec<(Regex, String)>,
    fallback: String,
    rules_file: RuleFile,
}

impl RuleTransformer {
    pub fn from_rule_file(rules_file: RuleFile) -> Result<Self, TransformError> {
        if rules_file.fallback.trim().is_empty() {
            return Err(TransformError::Rules("fallback must be non-empty".into()));
        }
        let rules = rules_file
            .patterns
            .iter()
            .map(|r| {
                if r.canonical.trim().is_empty() {
                    return Err(TransformError::Rules(format!(
                        "rule {:?} has an empty canonical phrase",
                        r.pattern
                    )));
                }
                RegexBuilder::new(&r.pattern)
                    .case_insensitive(true)
                    .build()
                    .map(|re| (re, r.canonical.clone()))
                    .map_err(|e| TransformError::Rules(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(RuleTransformer {
            rules,
            fallback: rules_file.fallback.clone(),
            rules_file,
        })
    }

    pub fn builtin() -> Self {
        Self::from_rule_file(Self::builtin_rule_file()).expect("builtin rules compile")
    }

    pub fn builtin_rule_file() -> RuleFile {
        RuleFile {
            patterns: BUILTIN_RULES
                .iter()
                .map(|(p, c)| RuleSpec {
                    pattern: (*p).into(),
                    canonical: (*c).into(),
                })
                .collect(),
            fallback: GENERAL_PURPOSE.into(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TransformError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| TransformError::Rules(format!("{}: {e}", path.display())))?;
        let rules_file: RuleFile = serde_json::from_str(&text)
            .map_err(|e| TransformError::Rules(format!("{}: {e}", path.display())))?;
        Self::from_rule_file(rules_file)
    }

    pub fn rule_file(&self) -> &RuleFile {
        &self.rules_file
    }

    fn is_canonical(&self, text: &str) -> bool {
        text.eq_ignore_ascii_case(&self.fallback)
            || self.rules.iter().any(|(_, c)| text.eq_ignore_ascii_case(c))
    }

    fn rewrite(&self, query: &str) -> String {
        let trimmed = query.trim();
        if self.is_canonical(trimmed) {
            return trimmed.to_string();
        }
        self.rules
            .iter()
            .find(|(re, _)| re.is_match(trimmed))
            .map(|(_, canonical)| canonical.clone())
            .unwrap_or_else(|| self.fallback.clone())
    }
}

impl QueryTransformer for RuleTransformer {
    fn transform(&self, query: &str) -> Result<PreprocessedQuery, TransformError> {
        Ok(PreprocessedQuery {
            original: query.to_string(),
            canonical: self.rewrite(query),
        })
    }
}

/// Identity translation step used by the plain RAG baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassThrough;

impl QueryTransformer for PassThrough {
    fn transform(&self, query: &str) -> Result<PreprocessedQuery, TransformError> {
        let trimmed = query.trim();
        if trimmed.is_empty() {
            return Err(TransformError::EmptyQuery);
        }
        Ok(PreprocessedQuery {
            original: query.to_string(),
            canonical: trimmed.to_string(),
        })
    }
}

/// Tries `primary` and falls back to `fallback` on any error.
pub struct WithFallback<P, F> {
    pub primary: P,
    pub fallback: F,
}

impl<P: QueryTransformer, F: QueryTransformer> QueryTransformer for WithFallback<P, F> {
    fn transform(&self, query: &str) -> Result<PreprocessedQuery, TransformError> {
        self.primary
            .transform(query)
            .or_else(|_| self.fallback.transform(query))
    }

    fn is_external(&self) -> bool {
        self.primary.is_external()
    }
}

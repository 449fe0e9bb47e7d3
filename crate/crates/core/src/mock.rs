//! Mock-cluster expansion: many functionally identical virtual servers from
//! one template, each with its own description.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pool::ServerRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("mock cluster size must be at least 1, got {0}")]
pub struct ClusterSizeError(pub usize);

const OPENERS: &[&str] = &[
    "",
    "Provides",
    "Offers",
    "A hosted service for",
    "This server delivers",
    "Lightweight endpoint for",
    "Managed access to",
];

const CLOSERS: &[&str] = &[
    "",
    "Responses are returned as structured JSON.",
    "Suitable for agent workflows.",
    "Backed by a commercial index.",
    "Designed for low-touch integration.",
];

/// Word-level substitutions; the first entry of each row is the lookup key.
const SYNONYMS: &[&[&str]] = &[
    &["search", "search", "lookup", "query"],
    &["fast", "fast", "quick", "rapid", "speedy"],
    &["real", "real", "live"],
    &["information", "information", "facts", "content", "knowledge"],
    &["results", "results", "hits", "matches"],
    &["returns", "returns", "yields", "provides"],
    &["finds", "finds", "locates", "retrieves"],
    &["accurate", "accurate", "precise", "reliable"],
    &["pages", "pages", "documents", "sites"],
];

/// Deterministic stand-in for a language-model rewrite of `text`.
///
/// Draws an opener and a closer from a fixed phrase bank and swaps words
/// for synonyms with probability one half.
pub fn paraphrase(text: &str, rng: &mut ChaCha8Rng) -> String {
    let body: Vec<String> = text
        .split_whitespace()
        .map(|word| {
            let (core, trail) = split_trailing_punct(word);
            let lower = core.to_lowercase();
            match SYNONYMS.iter().find(|row| row[0] == lower) {
                Some(row) if rng.random_bool(0.5) => {
                    let pick = row[1..].choose(rng).copied().unwrap_or(row[0]);
                    format!("{}{trail}", match_case(core, pick))
                }
                _ => word.to_string(),
            }
        })
        .collect();
    let opener = OPENERS.choose(rng).copied().unwrap_or("");
    let closer = CLOSERS.choose(rng).copied().unwrap_or("");
    let mut body = body.join(" ");
    if !opener.is_empty() {
        body = format!("{opener} {}", lowercase_first(&body));
    }
    if !closer.is_empty() {
        if !body.ends_with('.') {
            body.push('.');
        }
        body = format!("{body} {closer}");
    }
    body
}

fn split_trailing_punct(word: &str) -> (&str, &str) {
    let end = word
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    word.split_at(end)
}

fn match_case(original: &str, replacement: &str) -> String {
    if original.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = replacement.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    } else {
        replacement.to_string()
    }
}

fn lowercase_first(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        // Keep acronyms like "MCP" intact.
        Some(first) if chars.clone().next().is_some_and(char::is_lowercase) => {
            first.to_lowercase().chain(chars).collect()
        }
        _ => text.to_string(),
    }
}

/// Clones `template` into `n` servers with ids `<id>-01`, `<id>-02`, ...
///
/// Server `k` takes `description_variants[k]` verbatim when present and a
/// [`paraphrase`] of the template description otherwise. Tools, capability
/// and expertise are copied unchanged.
pub fn mock_cluster(
    template: &ServerRecord,
    n: usize,
    description_variants: &[String],
    seed: u64,
) -> Result<Vec<ServerRecord>, ClusterSizeError> {
    if n < 1 {
        return Err(ClusterSizeError(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = HashSet::new();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut description = match description_variants.get(k) {
            Some(v) => v.clone(),
            None => {
                let mut attempt = paraphrase(&template.description, &mut rng);
                for _ in 0..8 {
                    if !used.contains(&attempt) {
                        break;
                    }
                    attempt = paraphrase(&template.description, &mut rng);
                }
                attempt
            }
        };
        if used.contains(&description) {
            description = format!("{description} (replica {})", k + 1);
        }
        used.insert(description.clone());
        let (server_id, name) = if n == 1 {
            (template.server_id.clone(), template.name.clone())
        } else {
            (
                format!("{}-{:02}", template.server_id, k + 1),
                format!("{}-{:02}", template.name, k + 1),
            )
        };
        out.push(ServerRecord {
            server_id,
            name,
            description,
            ..template.clone()
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::tests::server;
    use crate::pool::ServerPool;

    fn exa() -> ServerRecord {
        server(
            "exa",
            "websearch",
            "Exa websearch: fast real-time web search that returns accurate results from live pages.",
            &[("web_search_exa", "Search the web and return accurate results.")],
        )
    }

    #[test]
    fn cluster_of_twenty() {
        let cluster = mock_cluster(&exa(), 20, &[], 11).unwrap();
        assert_eq!(cluster.len(), 20);
        let descriptions: HashSet<_> = cluster.iter().map(|s| &s.description).collect();
        assert_eq!(descriptions.len(), 20);
        for s in &cluster {
            assert_eq!(s.tools, exa().tools);
            assert_eq!(s.capability, "websearch");
            assert_eq!(s.expertise, exa().expertise);
        }
        assert!(ServerPool::new(cluster).is_ok());
    }

    #[test]
    fn single_clone_uses_variant_verbatim() {
        let v = vec!["Variant text.".to_string()];
        let cluster = mock_cluster(&exa(), 1, &v, 0).unwrap();
        assert_eq!(cluster.len(), 1);
        assert_eq!(cluster[0].description, "Variant text.");
    }

    #[test]
    fn deterministic_and_rejects_zero() {
        assert_eq!(
            mock_cluster(&exa(), 7, &[], 3).unwrap(),
            mock_cluster(&exa(), 7, &[], 3).unwrap()
        );
        assert_eq!(mock_cluster(&exa(), 0, &[], 3), Err(ClusterSizeError(0)));
    }

    #[test]
    fn paraphrase_keeps_capability_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = paraphrase(&exa().description, &mut rng);
            assert!(p.to_lowercase().contains("websearch"), "{p}");
        }
    }
}

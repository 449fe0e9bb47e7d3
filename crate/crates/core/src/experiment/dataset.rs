//! Synthetic server pools and web-search query workloads.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ExperimentError;
use crate::mock::{mock_cluster, paraphrase};
use crate::pool::{ServerPool, ServerRecord, ToolRecord};
use crate::tasks::QueryTask;

pub const WEBSEARCH: &str = "websearch";

/// Names of the first five websearch servers, matching the hybrid scenario.
pub const WEBSEARCH_NAMES: [&str; 5] = [
    "High_Latency_Server",
    "Low_Latency_Server",
    "Intermittent_Outage_Server",
    "Fluctuate_Burst_Server",
    "High_Jitter_Server",
];

pub const DEFAULT_DATASET_SEED: u64 = 7;
pub const DEFAULT_QUERY_COUNT: usize = 240;

/// Server description, search tool description and expertise for each of
/// [`WEBSEARCH_NAMES`]. The outage server carries the closest match to
/// "a websearch tool".
const WEBSEARCH_VARIANTS: [(&str, &str, f64); 5] = [
    (
        "Websearch server that answers questions from a large web index.",
        "Websearch over a large index of web pages, returning titles and snippets.",
        0.55,
    ),
    (
        "Fast websearch gateway for looking up facts and current events.",
        "A websearch tool that looks up facts and recent events on the web.",
        0.62,
    ),
    (
        "A websearch tool server: neural websearch over the open web.",
        "A websearch tool: neural websearch over the open web with ranked results.",
        0.66,
    ),
    (
        "Websearch service for news, encyclopedic and general web content.",
        "Search tool for websearch queries about news and general knowledge.",
        0.58,
    ),
    (
        "Websearch endpoint with keyword and semantic retrieval of web pages.",
        "Keyword websearch of web pages with page summaries.",
        0.52,
    ),
];

const FETCH_TOOL: (&str, &str, &str) = (
    "fetch_page",
    "Fetch page",
    "Download the full text content of a given URL.",
);

/// `(server_id stem, capability, description, tool_id, tool description,
/// expertise)` for each distractor domain.
const DISTRACTOR_DOMAINS: [(&str, &str, &str, &str, &str, f64); 10] = [
    ("code-editor", "code_editing", "A code editing tool server for refactoring and debugging source code.", "edit_code", "Apply edits, renames and refactorings to source code files.", 0.45),
    ("product-search", "product_search", "A product search tool server for Amazon listings, prices and deals.", "search_products", "Find products on Amazon and compare their prices.", 0.4),
    ("professional-network", "professional_network", "A professional network search tool for LinkedIn profiles and job postings.", "search_profiles", "Look up LinkedIn profiles, recruiters and job postings.", 0.42),
    ("code-repository", "code_repository", "A code repository tool server for GitHub repositories, issues and pull requests.", "list_commits", "List commits, issues and pull requests of a GitHub repository.", 0.47),
    ("file-manager", "file_management", "A file management tool server for reading, moving and organizing files and folders.", "move_file", "Move, copy or rename files and folders on disk.", 0.38),
    ("database", "database", "A database query tool server that runs SQL against relational tables.", "run_sql", "Execute a SQL statement and return the resulting rows.", 0.44),
    ("calendar", "calendar", "A calendar scheduling tool server for meetings and appointments.", "create_event", "Create or update calendar meetings and appointments.", 0.36),
    ("maps", "maps", "A maps and navigation tool server for directions and travel times.", "get_directions", "Compute driving or walking directions between two places.", 0.41),
    ("email", "email", "An email tool server for reading the inbox and sending mail.", "send_email", "Compose and send an email message.", 0.39),
    ("image-generator", "image_generation", "An image generation tool server that draws pictures and illustrations.", "generate_image", "Generate an image from a text prompt.", 0.43),
];

fn websearch_template() -> ServerRecord {
    ServerRecord {
        server_id: "websearch".into(),
        name: "Websearch_Server".into(),
        description: "Websearch server backed by a neural web search engine.".into(),
        capability: WEBSEARCH.into(),
        expertise: 0.6,
        tools: vec![
            ToolRecord {
                tool_id: "web_search".into(),
                name: "Web search".into(),
                description: "Websearch over the open web with ranked results.".into(),
            },
            ToolRecord {
                tool_id: FETCH_TOOL.0.into(),
                name: FETCH_TOOL.1.into(),
                description: FETCH_TOOL.2.into(),
            },
        ],
    }
}

fn distractor_template(domain: usize) -> ServerRecord {
    let (id, capability, description, tool_id, tool_description, expertise) =
        DISTRACTOR_DOMAINS[domain];
    ServerRecord {
        server_id: id.into(),
        name: id.into(),
        description: description.into(),
        capability: capability.into(),
        expertise,
        tools: vec![ToolRecord {
            tool_id: tool_id.into(),
            name: tool_id.replace('_', " "),
            description: tool_description.into(),
        }],
    }
}

/// A pool of `n_capable` websearch servers followed by `n_distractor`
/// servers from unrelated domains.
///
/// Websearch servers are a mock cluster of one template. The first five are
/// named after [`WEBSEARCH_NAMES`] and take curated descriptions; further
/// ones get paraphrased descriptions. Each clone's search tool is reworded
/// the same way so that semantic scores differ between servers.
pub fn gen_dataset(n_capable: usize, n_distractor: usize, seed: u64) -> Result<ServerPool, ExperimentError> {
    if n_capable + n_distractor == 0 {
        return Err(ExperimentError::Config("dataset needs at least one server".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut servers = Vec::with_capacity(n_capable + n_distractor);

    if n_capable > 0 {
        let template = websearch_template();
        let variants: Vec<String> = WEBSEARCH_VARIANTS.iter().map(|v| v.0.to_string()).collect();
        let cluster = mock_cluster(&template, n_capable, &variants, seed)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        for (k, mut server) in cluster.into_iter().enumerate() {
            server.server_id = format!("websearch-{:02}", k + 1);
            match WEBSEARCH_VARIANTS.get(k) {
                Some(&(_, tool_description, expertise)) => {
                    server.name = WEBSEARCH_NAMES[k].into();
                    server.tools[0].description = tool_description.into();
                    server.expertise = expertise;
                }
                None => {
                    server.name = format!("Websearch_Server_{:02}", k + 1);
                    server.tools[0].description =
                        paraphrase(&template.tools[0].description, &mut rng);
                }
            }
            servers.push(server);
        }
    }

    let mut per_domain = [0usize; DISTRACTOR_DOMAINS.len()];
    for i in 0..n_distractor {
        per_domain[i % DISTRACTOR_DOMAINS.len()] += 1;
    }
    let mut distractors = Vec::with_capacity(n_distractor);
    for (domain, &count) in per_domain.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let template = distractor_template(domain);
        let cluster = mock_cluster(&template, count, std::slice::from_ref(&template.description), seed)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        // Interleave so that the first ten distractors cover ten domains.
        for (round, server) in cluster.into_iter().enumerate() {
            distractors.push((round * DISTRACTOR_DOMAINS.len() + domain, server));
        }
    }
    distractors.sort_by_key(|(order, _)| *order);
    for (i, (_, mut server)) in distractors.into_iter().enumerate() {
        server.server_id = format!("distractor-{:02}", i + 1);
        server.name = format!("Distractor_Server_{:02}", i + 1);
        servers.push(server);
    }
    ServerPool::new(servers).map_err(|e| ExperimentError::Config(e.to_string()))
}

/// The 15-server pool shipped with the crate.
pub fn default_pool() -> ServerPool {
    gen_dataset(5, 10, DEFAULT_DATASET_SEED).expect("default dataset is valid")
}

const QUESTION_TEMPLATES: [&str; 12] = [
    "Who founded {}?",
    "What is the history of {}?",
    "When was {} founded?",
    "Where is the headquarters of {}?",
    "What are the latest news about {}?",
    "Find information about {}.",
    "Search the web for recent reviews of {}.",
    "Which country is {} associated with?",
    "How did {} become famous?",
    "Look up the current CEO of {}.",
    "Why is {} considered important?",
    "What happened to {} last year?",
];

const SUBJECTS: [&str; 24] = [
    "the first luxury goods company",
    "the Hanseatic League",
    "the Eiffel Tower",
    "the Rosetta Stone",
    "the Green Bay Packers",
    "the Nobel Prize in Physics",
    "the International Space Station",
    "the Human Genome Project",
    "the Louvre Museum",
    "the Tour de France",
    "the Panama Canal",
    "the World Wide Web",
    "the Great Barrier Reef",
    "the Berlin Philharmonic",
    "the Olympic Games",
    "the Suez Canal",
    "the Hubble Space Telescope",
    "the Sydney Opera House",
    "the Red Cross",
    "the Silk Road",
    "the Wimbledon Championships",
    "the Mars rover Perseverance",
    "the Oxford English Dictionary",
    "the Trans-Siberian Railway",
];

/// Questions no keyword rule recognizes; they exercise the fallback phrase.
const UNMATCHED: [&str; 4] = [
    "电话是谁发明的",
    "東京タワーの高さ",
    "Kuka keksi puhelimen",
    "Qui a construit la tour Eiffel",
];

/// `n` web-search tasks. Every 40th task is a non-English question.
pub fn gen_queries(n: usize, seed: u64) -> Vec<QueryTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let query = if i % 40 == 39 {
                UNMATCHED[rng.random_range(0..UNMATCHED.len())].to_string()
            } else {
                let template = QUESTION_TEMPLATES.choose(&mut rng).expect("non-empty");
                let subject = SUBJECTS.choose(&mut rng).expect("non-empty");
                template.replacen("{}", subject, 1)
            };
            QueryTask {
                task_id: format!("q{:04}", i + 1),
                query,
                required_capability: WEBSEARCH.into(),
                ground_truth: None,
            }
        })
        .collect()
}

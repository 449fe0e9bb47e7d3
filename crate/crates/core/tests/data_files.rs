//! The shipped files under `data/` match the generators that produce them.
//! Set `NETMCP_BLESS=1` to rewrite them.

use std::path::{Path, PathBuf};

use netmcp::experiment::{
    gen_dataset, gen_queries, gen_scenario, ExperimentConfig, ScenarioKind, DEFAULT_DATASET_SEED,
    DEFAULT_QUERY_COUNT,
};
use netmcp::semantic::RuleTransformer;
use netmcp::tasks::write_queries;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn check(name: &str, expected: String) {
    let path = data_dir().join(name);
    if std::env::var_os("NETMCP_BLESS").is_some() {
        std::fs::write(&path, &expected).unwrap();
    }
    let actual = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(actual == expected, "{name} is stale; rerun with NETMCP_BLESS=1");
}

#[test]
fn pool_matches_generator() {
    let pool = gen_dataset(5, 10, DEFAULT_DATASET_SEED).unwrap();
    check("pool_15.json", pool.to_json_pretty());
}

#[test]
fn queries_match_generator() {
    let mut buf = Vec::new();
    write_queries(&gen_queries(DEFAULT_QUERY_COUNT, DEFAULT_DATASET_SEED), &mut buf).unwrap();
    check("queries.jsonl", String::from_utf8(buf).unwrap());
}

#[test]
fn scenarios_match_generator() {
    for kind in [ScenarioKind::Ideal, ScenarioKind::Hybrid, ScenarioKind::Fluctuating] {
        let mut text = serde_json::to_string_pretty(&gen_scenario(kind, None, 0).to_json()).unwrap();
        text.push('\n');
        check(&format!("{kind}_scenario.json"), text);
    }
}

#[test]
fn rules_match_builtin() {
    let mut text = serde_json::to_string_pretty(&RuleTransformer::builtin_rule_file()).unwrap();
    text.push('\n');
    check("transformer_rules.json", text);
    let loaded = RuleTransformer::load(data_dir().join("transformer_rules.json")).unwrap();
    assert_eq!(loaded.rule_file(), RuleTransformer::builtin().rule_file());
}

#[test]
fn example_config_loads() {
    let cfg = ExperimentConfig::load(data_dir().join("experiment.json")).unwrap();
    cfg.validate().unwrap();
    assert!(cfg.scenario.exists() && cfg.pool.exists() && cfg.queries.exists());
    assert!(cfg.rules.as_ref().is_some_and(|p| p.exists()));
}

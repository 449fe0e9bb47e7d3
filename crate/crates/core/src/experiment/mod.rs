//! End-to-end experiments: load inputs, generate the network, run the
//! workload through a router, evaluate, and write reports.

mod dataset;
mod scenarios;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use dataset::{
    default_pool, gen_dataset, gen_queries, DEFAULT_DATASET_SEED, DEFAULT_QUERY_COUNT, WEBSEARCH,
    WEBSEARCH_NAMES,
};
pub use scenarios::{
    fluctuating_profile, gen_scenario, hybrid_profiles, ideal_profile, ScenarioKind,
    DEFAULT_HORIZON,
};

use crate::adapter::{ChatClient, ChatReranker, ChatTransformer, DEFAULT_TIMEOUT};
use crate::agent::{run_workload, write_transcripts, TaskTranscript, DEFAULT_MAX_TURNS};
use crate::config::{load_scenario, ScenarioConfig};
use crate::executor::SimulatedExecutor;
use crate::latency::Environment;
use crate::metrics::{evaluate, render_report, MetricsReport, ReportFormat};
use crate::network::ScoringParams;
use crate::pool::{load_pool, ServerPool};
use crate::router::{
    Algorithm, PragRouter, RagRouter, RerankRouter, Router, RoutingParams, SonarRouter,
};
use crate::semantic::{Bm25Params, QueryTransformer, RuleTransformer};
use crate::tasks::{load_queries, uniform_schedule, QueryTask};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    /// Bad configuration or input files.
    #[error("{0}")]
    Config(String),
    /// Failure while running or writing results.
    #[error("{0}")]
    Runtime(String),
}

impl ExperimentError {
    /// Process exit code: 2 for configuration errors, 3 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Runtime(_) => 3,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Runtime(e.to_string())
}

/// Which tool-prediction and reranking backend to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdapterMode {
    /// Offline rule-based stubs.
    #[default]
    Stub,
    /// HTTP chat-completion adapter configured from the environment, with
    /// the stubs as fallback.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: PathBuf,
    pub pool: PathBuf,
    pub queries: PathBuf,
    /// Keyword rule file for tool prediction; the builtin rules when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub routing: RoutingParams,
    #[serde(default)]
    pub scoring: ScoringParams,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_turns")]
    pub max_turns: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    /// Optional JSON-Lines transcript dump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcripts: Option<PathBuf>,
    #[serde(default)]
    pub adapter: AdapterMode,
    /// Success additionally requires a Bernoulli(expertise) draw.
    #[serde(default)]
    pub stochastic_success: bool,
}

fn default_max_turns() -> u32 {
    DEFAULT_MAX_TURNS
}

impl ExperimentConfig {
    pub fn new(scenario: impl Into<PathBuf>, pool: impl Into<PathBuf>, queries: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            scenario: scenario.into(),
            pool: pool.into(),
            queries: queries.into(),
            rules: None,
            routing: RoutingParams::default(),
            scoring: ScoringParams::default(),
            bm25: Bm25Params::default(),
            seed: 0,
            max_turns: DEFAULT_MAX_TURNS,
            output: None,
            format: ReportFormat::Json,
            transcripts: None,
            adapter: AdapterMode::Stub,
            stochastic_success: false,
        }
    }

    /// Parses a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.scenario);
        resolve(&mut cfg.pool);
        resolve(&mut cfg.queries);
        for p in [&mut cfg.rules, &mut cfg.output, &mut cfg.transcripts]
            .into_iter()
            .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.routing.validate().map_err(config_err)?;
        self.scoring.validate().map_err(config_err)?;
        if self.max_turns == 0 {
            return Err(config_err("max_turns must be at least 1"));
        }
        Ok(())
    }

    /// The resolved configuration, embedded in every report.
    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Everything a run reads from disk.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub scenario: ScenarioConfig,
    pub pool: ServerPool,
    pub tasks: Vec<QueryTask>,
    pub rules: RuleTransformer,
}

impl Inputs {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let scenario = load_scenario(&cfg.scenario)
            .map_err(|e| config_err(format!("{}: {e}", cfg.scenario.display())))?;
        let pool = load_pool(&cfg.pool).map_err(config_err)?;
        let tasks = load_queries(&cfg.queries).map_err(config_err)?;
        let rules = match &cfg.rules {
            Some(p) => RuleTransformer::load(p).map_err(config_err)?,
            None => RuleTransformer::builtin(),
        };
        Ok(Inputs {
            scenario,
            pool,
            tasks,
            rules,
        })
    }
}

/// Builds the router named by `cfg.routing.algorithm`.
pub fn build_router(cfg: &ExperimentConfig, rules: &RuleTransformer) -> Result<Box<dyn Router>, ExperimentError> {
    let stub: Arc<dyn QueryTransformer> = Arc::new(rules.clone());
    let client = match cfg.adapter {
        AdapterMode::Stub => None,
        AdapterMode::Http => Some(ChatClient::from_env(DEFAULT_TIMEOUT).map_err(config_err)?),
    };
    let (transformer, fallback): (Arc<dyn QueryTransformer>, _) = match &client {
        Some(c) => (Arc::new(ChatTransformer { client: c.clone() }), Some(stub)),
        None => (stub, None),
    };
    let router: Box<dyn Router> = match cfg.routing.algorithm {
        Algorithm::Sonar => {
            let mut r = SonarRouter::new(cfg.routing, cfg.scoring).with_transformer(transformer, fallback);
            r.bm25 = cfg.bm25;
            Box::new(r)
        }
        Algorithm::Rag => {
            let mut r = RagRouter::new(cfg.routing);
            r.bm25 = cfg.bm25;
            Box::new(r)
        }
        Algorithm::Prag => {
            let mut r = PragRouter::new(cfg.routing).with_transformer(transformer, fallback);
            r.bm25 = cfg.bm25;
            Box::new(r)
        }
        Algorithm::RerankRag => {
            let mut prag = PragRouter::new(cfg.routing).with_transformer(transformer, fallback);
            prag.bm25 = cfg.bm25;
            let mut r = RerankRouter::new(cfg.routing).with_prag(prag);
            if let Some(c) = client {
                r = r.with_reranker(Arc::new(ChatReranker { client: c }));
            }
            Box::new(r)
        }
    };
    Ok(router)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub transcripts: Vec<TaskTranscript>,
}

/// Generates the environment from `cfg.seed`, runs every task on a uniform
/// schedule over the horizon and evaluates the transcripts.
pub fn run_inputs(inputs: &Inputs, cfg: &ExperimentConfig) -> Result<RunOutcome, ExperimentError> {
    cfg.validate()?;
    if cfg.routing.filter_servers > inputs.pool.len() {
        return Err(config_err(format!(
            "filter_servers {} exceeds the pool size {}",
            cfg.routing.filter_servers,
            inputs.pool.len()
        )));
    }
    let mut env = Environment::generate(&inputs.scenario, cfg.seed).map_err(config_err)?;
    env.ensure_covers(inputs.pool.servers().iter().map(|s| s.name.as_str()))
        .map_err(|e| config_err(format!("scenario does not cover the pool: {e}")))?;
    let router = build_router(cfg, &inputs.rules)?;
    let mut executor = if cfg.stochastic_success {
        SimulatedExecutor::with_stochastic_expertise(cfg.seed)
    } else {
        SimulatedExecutor::new()
    };
    let schedule = uniform_schedule(inputs.tasks.len(), env.ticks());
    let transcripts = run_workload(
        &inputs.tasks,
        &schedule,
        &*router,
        &mut executor,
        &inputs.pool,
        &mut env,
        cfg.max_turns,
    )
    .map_err(runtime_err)?;
    let report = evaluate(&transcripts, &inputs.pool, &inputs.tasks).map_err(runtime_err)?;
    Ok(RunOutcome {
        report,
        transcripts,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    std::fs::write(path, contents).map_err(|e| runtime_err(format!("{}: {e}", path.display())))
}

/// Loads inputs, runs, and writes the report and transcripts where
/// configured.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutcome, ExperimentError> {
    cfg.validate()?;
    let inputs = Inputs::load(cfg)?;
    let outcome = run_inputs(&inputs, cfg)?;
    if let Some(out) = &cfg.output {
        let text = render_report(&outcome.report, &cfg.echo(), cfg.format);
        write_file(out, text.as_bytes())?;
    }
    if let Some(path) = &cfg.transcripts {
        let mut buf = Vec::new();
        write_transcripts(&outcome.transcripts, &mut buf).map_err(runtime_err)?;
        write_file(path, &buf)?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub filter_servers: usize,
    pub filter_tools: usize,
    pub report: MetricsReport,
}

/// Runs the cartesian product of `alphas` and `(S, T)` filters with
/// `beta = 1 - alpha`. Every cell generates its own environment from the
/// same seed. Rows come back in `(alpha, filter)` input order.
pub fn run_sweep(
    inputs: &Inputs,
    cfg: &ExperimentConfig,
    alphas: &[f64],
    filters: &[(usize, usize)],
) -> Result<Vec<SweepRow>, ExperimentError> {
    if alphas.is_empty() {
        return Err(config_err("sweep needs at least one alpha"));
    }
    if filters.is_empty() {
        return Err(config_err("sweep needs at least one (S, T) filter"));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(config_err(format!("alpha {a} outside [0, 1]")));
    }
    let cells: Vec<(f64, (usize, usize))> = alphas
        .iter()
        .flat_map(|&a| filters.iter().map(move |&f| (a, f)))
        .collect();
    cells
        .par_iter()
        .map(|&(alpha, (s, t))| {
            let mut cell = cfg.clone();
            cell.routing.alpha = alpha;
            cell.routing.beta = 1.0 - alpha;
            cell.routing.filter_servers = s;
            cell.routing.filter_tools = t;
            let outcome = run_inputs(inputs, &cell)?;
            Ok(SweepRow {
                alpha,
                beta: cell.routing.beta,
                filter_servers: s,
                filter_tools: t,
                report: outcome.report,
            })
        })
        .collect()
}

fn r4(x: f64) -> String {
    let r = (x * 10_000.0).round() / 10_000.0;
    format!("{:.4}", if r == 0.0 { 0.0 } else { r })
}

/// Sweep matrix as CSV (wall time in the last column) or JSON.
pub fn render_sweep(rows: &[SweepRow], cfg: &ExperimentConfig, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("alpha,beta,filter_servers,filter_tools,ssr,ee,al_ms,fr,task_count,sl_ms\n");
            for row in rows {
                let m = &row.report;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r4(row.alpha),
                    r4(row.beta),
                    row.filter_servers,
                    row.filter_tools,
                    r4(m.ssr),
                    r4(m.ee),
                    r4(m.al_ms),
                    r4(m.fr),
                    m.task_count,
                    r4(m.sl_ms)
                );
            }
            out
        }
        ReportFormat::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let m = crate::metrics::report_json(&row.report, &Value::Null);
                    json!({
                        "alpha": row.alpha,
                        "beta": row.beta,
                        "filter_servers": row.filter_servers,
                        "filter_tools": row.filter_tools,
                        "metrics": m["metrics"],
                        "wall_time": m["wall_time"],
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&json!({"config_echo": cfg.echo(), "rows": rows}))
                .expect("sweep serializes");
            s.push('\n');
            s
        }
    }
}

/// Loads inputs once, runs the sweep and writes the matrix if configured.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    alphas: &[f64],
    filters: &[(usize, usize)],
) -> Result<Vec<SweepRow>, ExperimentError> {
    let inputs = Inputs::load(cfg)?;
    let rows = run_sweep(&inputs, cfg, alphas, filters)?;
    if let Some(out) = &cfg.output {
        write_file(out, render_sweep(&rows, cfg, cfg.format).as_bytes())?;
    }
    Ok(rows)
}

/// Writes `contents` to `path`, refusing to replace an existing file unless
/// `force` is set.
pub fn write_new_file(path: &Path, contents: &str, force: bool) -> Result<(), ExperimentError> {
    if path.exists() && !force {
        return Err(config_err(format!(
            "{} already exists (use --force to overwrite)",
            path.display()
        )));
    }
    write_file(path, contents.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::write_queries;

    /// Writes the default pool, `n` queries and a scenario into `dir`.
    fn setup(dir: &Path, kind: ScenarioKind, n: usize) -> ExperimentConfig {
        let pool = default_pool();
        std::fs::write(dir.join("pool.json"), pool.to_json_pretty()).unwrap();
        let mut q = Vec::new();
        write_queries(&gen_queries(n, 1), &mut q).unwrap();
        std::fs::write(dir.join("queries.jsonl"), q).unwrap();
        let scenario = gen_scenario(kind, Some(&pool), 1);
        std::fs::write(dir.join("scenario.json"), scenario.to_json().to_string()).unwrap();
        ExperimentConfig::new(dir.join("scenario.json"), dir.join("pool.json"), dir.join("queries.jsonl"))
    }

    #[test]
    fn config_paths_resolve_against_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("exp.json"),
            r#"{"scenario": "s.json", "pool": "/abs/p.json", "queries": "q.jsonl",
                "routing": {"alpha": 0.7, "beta": 0.3}, "seed": 4}"#,
        )
        .unwrap();
        let cfg = ExperimentConfig::load(dir.path().join("exp.json")).unwrap();
        assert_eq!(cfg.scenario, dir.path().join("s.json"));
        assert_eq!(cfg.pool, PathBuf::from("/abs/p.json"));
        assert_eq!(cfg.routing.alpha, 0.7);
        assert_eq!(cfg.routing.filter_servers, 5);
        assert_eq!(cfg.max_turns, DEFAULT_MAX_TURNS);

        std::fs::write(dir.path().join("bad.json"), r#"{"scenario": "s", "pool": "p", "queries": "q", "sede": 1}"#).unwrap();
        assert!(matches!(
            ExperimentConfig::load(dir.path().join("bad.json")),
            Err(ExperimentError::Config(_))
        ));
    }

    #[test]
    fn ideal_run_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = setup(dir.path(), ScenarioKind::Ideal, 40);
        cfg.output = Some(dir.path().join("report.json"));
        cfg.transcripts = Some(dir.path().join("t.jsonl"));
        let out = cmd_run(&cfg).unwrap();
        assert_eq!(out.report.task_count, 40);
        assert_eq!(out.report.fr, 0.0);
        assert!(out.report.ssr >= 0.95);
        let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(report["config_echo"]["routing"]["algorithm"], "sonar");
        let lines = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
        assert_eq!(lines.lines().count(), 40);
    }

    #[test]
    fn every_algorithm_runs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = setup(dir.path(), ScenarioKind::Hybrid, 20);
        let inputs = Inputs::load(&cfg).unwrap();
        for algorithm in [Algorithm::Sonar, Algorithm::Rag, Algorithm::Prag, Algorithm::RerankRag] {
            let mut c = cfg.clone();
            c.routing.algorithm = algorithm;
            let out = run_inputs(&inputs, &c).unwrap();
            assert_eq!(out.transcripts[0].turns[0].decision.as_ref().unwrap().algorithm, algorithm);
        }
    }

    #[test]
    fn missing_inputs_are_config_errors() {
        let cfg = ExperimentConfig::new("/no/such/scenario.json", "/no/pool.json", "/no/q.jsonl");
        let err = cmd_run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/no/such/scenario.json"));
    }

    #[test]
    fn uncovered_pool_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = setup(dir.path(), ScenarioKind::Ideal, 5);
        let mut inputs = Inputs::load(&cfg).unwrap();
        inputs.scenario.profiles.remove("Low_Latency_Server");
        assert!(matches!(run_inputs(&inputs, &cfg), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn sweep_rows_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = setup(dir.path(), ScenarioKind::Fluctuating, 20);
        let inputs = Inputs::load(&cfg).unwrap();
        let rows = run_sweep(&inputs, &cfg, &[1.0, 0.5], &[(5, 10), (3, 4)]).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.alpha, r.filter_servers)).collect();
        assert_eq!(keys, [(1.0, 5), (1.0, 3), (0.5, 5), (0.5, 3)]);
        assert!(run_sweep(&inputs, &cfg, &[], &[(5, 10)]).is_err());
        assert!(run_sweep(&inputs, &cfg, &[1.5], &[(5, 10)]).is_err());

        // alpha = 1 behaves like the semantic-only baseline.
        let mut prag = cfg.clone();
        prag.routing.algorithm = Algorithm::Prag;
        let base = run_inputs(&inputs, &prag).unwrap().report;
        assert_eq!(rows[0].report.per_task, base.per_task);

        let csv = render_sweep(&rows, &cfg, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("alpha,beta,filter_servers"));
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        write_new_file(&p, "a", false).unwrap();
        assert!(write_new_file(&p, "b", false).is_err());
        write_new_file(&p, "b", true).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b");
    }
}

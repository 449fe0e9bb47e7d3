use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netmcp::experiment::{
    cmd_run, cmd_sweep, gen_dataset, gen_queries, gen_scenario, render_sweep, write_new_file, ExperimentConfig,
    ExperimentError, ScenarioKind, DEFAULT_DATASET_SEED, DEFAULT_QUERY_COUNT,
};
use netmcp::metrics::{render_report, ReportFormat};
use netmcp::router::Algorithm;
use netmcp::tasks::write_queries;
use netmcp::{load_pool, ServerPool};

#[derive(Debug, Parser)]
#[command(name = "netmcp", version, about = "Network-aware tool routing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a latency scenario (ideal, hybrid or fluctuating).
    GenScenario {
        kind: ScenarioKind,
        #[arg(long)]
        out: PathBuf,
        /// Pool whose server names key the scenario; the default 15-server
        /// pool otherwise.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        force: bool,
    },
    /// Write a mock server pool and optionally a query workload.
    GenDataset {
        n_capable: usize,
        n_distractor: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write a JSON-Lines workload here.
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_QUERY_COUNT)]
        query_count: usize,
        #[arg(long, default_value_t = DEFAULT_DATASET_SEED)]
        seed: u64,
        #[arg(long)]
        force: bool,
    },
    /// Route, execute and evaluate one workload.
    Run(RunArgs),
    /// Run the cartesian product of alphas and (S, T) filters.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated alpha values; beta = 1 - alpha.
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// Comma-separated S:T pairs.
        #[arg(long, value_delimiter = ',', value_parser = parse_filter)]
        filters: Vec<(usize, usize)>,
    },
}

/// Config file plus overriding flags.
#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config file (JSON).
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    filter_servers: Option<usize>,
    #[arg(long)]
    filter_tools: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_turns: Option<u32>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<ReportFormat>,
    /// JSON-Lines transcript dump.
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

fn parse_filter(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected S:T, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl RunArgs {
    fn resolve(self) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let missing = |name: &str| config_err(format!("--{name} is required without a config file"));
                ExperimentConfig::new(
                    self.scenario.clone().ok_or_else(|| missing("scenario"))?,
                    self.pool.clone().ok_or_else(|| missing("pool"))?,
                    self.queries.clone().ok_or_else(|| missing("queries"))?,
                )
            }
        };
        if let Some(p) = self.scenario {
            cfg.scenario = p;
        }
        if let Some(p) = self.pool {
            cfg.pool = p;
        }
        if let Some(p) = self.queries {
            cfg.queries = p;
        }
        if let Some(a) = self.algorithm {
            cfg.routing.algorithm = a;
        }
        // A lone alpha or beta implies its complement.
        match (self.alpha, self.beta) {
            (Some(a), Some(b)) => (cfg.routing.alpha, cfg.routing.beta) = (a, b),
            (Some(a), None) => (cfg.routing.alpha, cfg.routing.beta) = (a, 1.0 - a),
            (None, Some(b)) => (cfg.routing.alpha, cfg.routing.beta) = (1.0 - b, b),
            (None, None) => {}
        }
        if let Some(s) = self.filter_servers {
            cfg.routing.filter_servers = s;
        }
        if let Some(t) = self.filter_tools {
            cfg.routing.filter_tools = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.max_turns {
            cfg.max_turns = m;
        }
        if let Some(p) = self.out {
            cfg.output = Some(p);
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(p) = self.transcripts {
            cfg.transcripts = Some(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::GenScenario { kind, out, pool, seed, force } => {
            let pool: Option<ServerPool> = match pool {
                Some(p) => Some(load_pool(&p).map_err(|e| config_err(format!("{}: {e}", p.display())))?),
                None => None,
            };
            let scenario = gen_scenario(kind, pool.as_ref(), seed);
            let mut text = serde_json_pretty(&scenario.to_json());
            text.push('\n');
            write_new_file(&out, &text, force)?;
            eprintln!("wrote {} ({} servers)", out.display(), scenario.profiles.len());
        }
        Command::GenDataset { n_capable, n_distractor, out, queries, query_count, seed, force } => {
            let pool = gen_dataset(n_capable, n_distractor, seed)?;
            if let Some(q) = &queries {
                if q.exists() && !force {
                    return Err(config_err(format!("{} already exists (use --force to overwrite)", q.display())));
                }
            }
            write_new_file(&out, &pool.to_json_pretty(), force)?;
            eprintln!("wrote {} ({} servers)", out.display(), pool.len());
            if let Some(q) = queries {
                let mut buf = Vec::new();
                write_queries(&gen_queries(query_count, seed), &mut buf)
                    .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
                let text = String::from_utf8(buf).expect("queries are UTF-8");
                write_new_file(&q, &text, force)?;
                eprintln!("wrote {} ({query_count} queries)", q.display());
            }
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let outcome = cmd_run(&cfg)?;
            let r = &outcome.report;
            match &cfg.output {
                Some(out) => eprintln!("wrote {}", out.display()),
                None => print!("{}", render_report(r, &cfg.echo(), cfg.format)),
            }
            eprintln!(
                "{}: ssr={:.4} ee={:.4} al_ms={:.2} fr={:.4} tasks={}",
                cfg.routing.algorithm, r.ssr, r.ee, r.al_ms, r.fr, r.task_count
            );
        }
        Command::Sweep { run, alphas, filters } => {
            let cfg = run.resolve()?;
            let filters = if filters.is_empty() {
                vec![(cfg.routing.filter_servers, cfg.routing.filter_tools)]
            } else {
                filters
            };
            let rows = cmd_sweep(&cfg, &alphas, &filters)?;
            match &cfg.output {
                Some(out) => eprintln!("wrote {} ({} rows)", out.display(), rows.len()),
                None => print!("{}", render_sweep(&rows, &cfg, cfg.format)),
            }
        }
    }
    Ok(())
}

fn serde_json_pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("scenario serializes")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

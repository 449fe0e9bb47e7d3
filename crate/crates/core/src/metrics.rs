//! Workload metrics and report files.
//!
//! Selection metrics (SSR, EE) look at the first turn only. Latency metrics
//! (AL, FR) look at every executed turn of tasks whose first pick had the
//! required capability, so an outage hit still counts when a retry recovers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::agent::TaskTranscript;
use crate::executor::OUTAGE_LATENCY_MS;
use crate::pool::ServerPool;
use crate::tasks::QueryTask;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no transcripts to evaluate")]
    Empty,
    #[error("transcript for unknown task {0:?}")]
    UnknownTask(String),
    #[error("transcript references unknown server {0:?}")]
    UnknownServer(String),
    #[error("unknown report format {0:?} (expected json or csv)")]
    UnknownFormat(String),
    #[error("writing report: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(MetricsError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub tick: usize,
    pub required_capability: String,
    pub first_server: Option<String>,
    pub first_tool: Option<String>,
    pub capability_match: bool,
    pub expertise: f64,
    pub turns: usize,
    pub final_success: bool,
    pub outage_turns: usize,
    pub mean_latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ssr: f64,
    pub ee: f64,
    pub al_ms: f64,
    pub sl_ms: f64,
    pub fr: f64,
    pub task_count: usize,
    /// Sorted by task id.
    pub per_task: Vec<TaskRecord>,
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn evaluate(
    transcripts: &[TaskTranscript],
    pool: &ServerPool,
    tasks: &[QueryTask],
) -> Result<MetricsReport, MetricsError> {
    if transcripts.is_empty() {
        return Err(MetricsError::Empty);
    }
    let by_id: BTreeMap<&str, &QueryTask> = tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();

    let mut per_task = Vec::with_capacity(transcripts.len());
    let (mut matched, mut expertise_sum) = (0usize, 0.0);
    let (mut latency_sum, mut latency_turns, mut outage_turns_total) = (0.0, 0usize, 0usize);
    let (mut selection_sum, mut decisions) = (0.0, 0usize);

    for tr in transcripts {
        let task = by_id
            .get(tr.task_id.as_str())
            .ok_or_else(|| MetricsError::UnknownTask(tr.task_id.clone()))?;
        for d in tr.turns.iter().filter_map(|t| t.decision.as_ref()) {
            if pool.get(&d.selected_server).is_none() {
                return Err(MetricsError::UnknownServer(d.selected_server.clone()));
            }
            selection_sum += d.selection_wall_time_ms;
            decisions += 1;
        }

        let first = tr.first_decision();
        let first_server = first.and_then(|d| pool.get(&d.selected_server));
        let capability_match =
            first_server.is_some_and(|s| s.capability == task.required_capability);
        let expertise = first_server.map_or(0.0, |s| s.expertise);
        if capability_match {
            matched += 1;
        }
        expertise_sum += expertise;

        let latencies: Vec<f64> = tr.executed().map(|r| r.observed_latency).collect();
        let outage_turns = latencies.iter().filter(|&&l| l >= OUTAGE_LATENCY_MS).count();
        if capability_match {
            latency_sum += latencies.iter().sum::<f64>();
            latency_turns += latencies.len();
            outage_turns_total += outage_turns;
        }

        per_task.push(TaskRecord {
            task_id: tr.task_id.clone(),
            tick: tr.tick,
            required_capability: task.required_capability.clone(),
            first_server: first.map(|d| d.selected_server.clone()),
            first_tool: first.map(|d| d.selected_tool.clone()),
            capability_match,
            expertise,
            turns: tr.turns.len(),
            final_success: tr.final_success,
            outage_turns,
            mean_latency_ms: (!latencies.is_empty())
                .then(|| latencies.iter().sum::<f64>() / latencies.len() as f64),
        });
    }
    per_task.sort_by(|a, b| a.task_id.cmp(&b.task_id));

    let n = transcripts.len();
    Ok(MetricsReport {
        ssr: mean(matched as f64, n),
        ee: mean(expertise_sum, n),
        al_ms: mean(latency_sum, latency_turns),
        sl_ms: mean(selection_sum, decisions),
        fr: mean(outage_turns_total as f64, latency_turns),
        task_count: n,
        per_task,
    })
}

fn round4(x: f64) -> f64 {
    let r = (x * 10_000.0).round() / 10_000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn fixed4(x: f64) -> String {
    format!("{:.4}", round4(x))
}

/// JSON document with sorted keys and values rounded to 4 decimals. The
/// selection wall time sits in its own `wall_time` section since it is the
/// only value that differs between identical runs.
pub fn report_json(report: &MetricsReport, config_echo: &Value) -> Value {
    let per_task: Vec<Value> = report
        .per_task
        .iter()
        .map(|r| {
            json!({
                "task_id": r.task_id,
                "tick": r.tick,
                "required_capability": r.required_capability,
                "first_server": r.first_server,
                "first_tool": r.first_tool,
                "capability_match": r.capability_match,
                "expertise": round4(r.expertise),
                "turns": r.turns,
                "final_success": r.final_success,
                "outage_turns": r.outage_turns,
                "mean_latency_ms": r.mean_latency_ms.map(round4),
            })
        })
        .collect();
    json!({
        "config_echo": config_echo,
        "metrics": {
            "ssr": round4(report.ssr),
            "ee": round4(report.ee),
            "al_ms": round4(report.al_ms),
            "fr": round4(report.fr),
            "task_count": report.task_count,
        },
        "metrics_percent": {
            "ssr": round4(report.ssr * 100.0),
            "ee": round4(report.ee * 100.0),
            "fr": round4(report.fr * 100.0),
        },
        "per_task": per_task,
        "wall_time": {
            "sl_ms": round4(report.sl_ms),
        },
    })
}

/// CSV: a `metric,value` block, a blank line, the per-task block, a blank
/// line and finally the wall-time block.
pub fn report_csv(report: &MetricsReport) -> String {
    let mut out = String::from("metric,value\n");
    for (name, v) in [
        ("ssr", report.ssr),
        ("ee", report.ee),
        ("al_ms", report.al_ms),
        ("fr", report.fr),
    ] {
        let _ = writeln!(out, "{name},{}", fixed4(v));
    }
    let _ = writeln!(out, "task_count,{}", report.task_count);
    for (name, v) in [("ssr", report.ssr), ("ee", report.ee), ("fr", report.fr)] {
        let _ = writeln!(out, "{name}_percent,{}", fixed4(v * 100.0));
    }
    out.push_str(
        "\ntask_id,tick,required_capability,first_server,first_tool,capability_match,\
         expertise,turns,final_success,outage_turns,mean_latency_ms\n",
    );
    for r in &report.per_task {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.task_id),
            r.tick,
            csv_field(&r.required_capability),
            csv_field(r.first_server.as_deref().unwrap_or("")),
            csv_field(r.first_tool.as_deref().unwrap_or("")),
            r.capability_match,
            fixed4(r.expertise),
            r.turns,
            r.final_success,
            r.outage_turns,
            r.mean_latency_ms.map(fixed4).unwrap_or_default(),
        );
    }
    let _ = write!(out, "\nwall_time,value\nsl_ms,{}\n", fixed4(report.sl_ms));
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_report(report: &MetricsReport, config_echo: &Value, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report_json(report, config_echo))
                .expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => report_csv(report),
    }
}

pub fn write_report(
    report: &MetricsReport,
    config_echo: &Value,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(), MetricsError> {
    let path = path.as_ref();
    std::fs::write(path, render_report(report, config_echo, format))
        .map_err(|e| MetricsError::Io(format!("{}: {e}", path.display())))
}

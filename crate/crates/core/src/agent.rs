//! The per-task agent loop: route, execute, retry on failure.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{ExecutionResult, Executor};
use crate::latency::Environment;
use crate::pool::ServerPool;
use crate::router::{RouteContext, Router, RoutingDecision};
use crate::tasks::QueryTask;

pub const DEFAULT_MAX_TURNS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("max_turns must be at least 1")]
    ZeroTurns,
    #[error("schedule has {schedule} entries for {tasks} tasks")]
    ScheduleLength { schedule: usize, tasks: usize },
    #[error("task {task_id:?} scheduled at tick {tick}, horizon has {ticks} ticks")]
    TickOutOfRange {
        task_id: String,
        tick: usize,
        ticks: usize,
    },
}

/// Why a turn did not succeed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnFailure {
    Routing,
    Execution,
    Outage,
    CapabilityMismatch,
    /// Right capability, no outage, but the call still failed.
    Unsuccessful,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// 1-based.
    pub turn: u32,
    pub decision: Option<RoutingDecision>,
    pub result: Option<ExecutionResult>,
    pub failure: Option<TurnFailure>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTranscript {
    pub task_id: String,
    pub tick: usize,
    pub query: String,
    pub required_capability: String,
    pub turns: Vec<Turn>,
    pub final_success: bool,
}

impl TaskTranscript {
    /// The first turn that produced a routing decision.
    pub fn first_decision(&self) -> Option<&RoutingDecision> {
        self.turns.first().and_then(|t| t.decision.as_ref())
    }

    /// Turns in which a tool was actually called.
    pub fn executed(&self) -> impl Iterator<Item = &ExecutionResult> {
        self.turns.iter().filter_map(|t| t.result.as_ref())
    }
}

fn failed_turn(turn: u32, decision: Option<RoutingDecision>, failure: TurnFailure, detail: String) -> Turn {
    Turn {
        turn,
        decision,
        result: None,
        failure: Some(failure),
        detail: Some(detail),
    }
}

/// Runs one task at tick `t` for at most `max_turns` turns, stopping at the
/// first success. Routing and execution errors become failed turns.
pub fn run_task(
    task: &QueryTask,
    t: usize,
    router: &dyn Router,
    executor: &mut dyn Executor,
    pool: &ServerPool,
    env: &mut Environment,
    max_turns: u32,
) -> Result<TaskTranscript, AgentError> {
    if max_turns == 0 {
        return Err(AgentError::ZeroTurns);
    }
    let mut turns = Vec::new();
    let mut final_success = false;
    for k in 1..=max_turns {
        let ctx = RouteContext {
            pool,
            env: &*env,
            t,
        };
        let decision = match router.route(&task.query, &ctx) {
            Ok(d) => d,
            Err(e) => {
                turns.push(failed_turn(k, None, TurnFailure::Routing, e.to_string()));
                continue;
            }
        };
        let target = pool
            .get(&decision.selected_server)
            .and_then(|s| s.tool(&decision.selected_tool).map(|tool| (s, tool)));
        let Some((server, tool)) = target else {
            let detail = format!(
                "router chose unknown tool {}/{}",
                decision.selected_server, decision.selected_tool
            );
            turns.push(failed_turn(k, Some(decision), TurnFailure::Execution, detail));
            continue;
        };
        match executor.execute(server, tool, &task.required_capability, t, env) {
            Ok(mut result) => {
                result.turn_count = k;
                let failure = if result.success {
                    None
                } else if result.failed_by_outage {
                    Some(TurnFailure::Outage)
                } else if server.capability != task.required_capability {
                    Some(TurnFailure::CapabilityMismatch)
                } else {
                    Some(TurnFailure::Unsuccessful)
                };
                let success = result.success;
                turns.push(Turn {
                    turn: k,
                    decision: Some(decision),
                    result: Some(result),
                    failure,
                    detail: None,
                });
                if success {
                    final_success = true;
                    break;
                }
            }
            Err(e) => {
                turns.push(failed_turn(k, Some(decision), TurnFailure::Execution, e.to_string()));
            }
        }
    }
    Ok(TaskTranscript {
        task_id: task.task_id.clone(),
        tick: t,
        query: task.query.clone(),
        required_capability: task.required_capability.clone(),
        turns,
        final_success,
    })
}

/// Runs every task sequentially in `(tick, task_id)` order, sharing one
/// environment so observations made by earlier tasks are visible to later
/// ones. Transcripts come back in execution order.
pub fn run_workload(
    tasks: &[QueryTask],
    schedule: &[usize],
    router: &dyn Router,
    executor: &mut dyn Executor,
    pool: &ServerPool,
    env: &mut Environment,
    max_turns: u32,
) -> Result<Vec<TaskTranscript>, AgentError> {
    if max_turns == 0 {
        return Err(AgentError::ZeroTurns);
    }
    if schedule.len() != tasks.len() {
        return Err(AgentError::ScheduleLength {
            schedule: schedule.len(),
            tasks: tasks.len(),
        });
    }
    let ticks = env.ticks();
    if let Some((task, &tick)) = tasks.iter().zip(schedule).find(|(_, &t)| t >= ticks) {
        return Err(AgentError::TickOutOfRange {
            task_id: task.task_id.clone(),
            tick,
            ticks,
        });
    }
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by(|&a, &b| {
        schedule[a]
            .cmp(&schedule[b])
            .then_with(|| tasks[a].task_id.cmp(&tasks[b].task_id))
    });
    order
        .into_iter()
        .map(|i| run_task(&tasks[i], schedule[i], router, executor, pool, env, max_turns))
        .collect()
}

/// One JSON object per line.
pub fn write_transcripts<W: Write>(transcripts: &[TaskTranscript], mut out: W) -> io::Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

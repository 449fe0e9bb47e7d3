//! Simulation-mode tool execution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latency::{Environment, LatencyError};
use crate::pool::{ServerRecord, ToolRecord};

/// Observed latency at or above which a call counts as hitting an outage.
pub const OUTAGE_LATENCY_MS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub success: bool,
    pub observed_latency: f64,
    pub failed_by_outage: bool,
    /// 1-based turn of the task this execution belongs to.
    pub turn_count: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("tool {tool:?} is not hosted by server {server:?}")]
    UnknownTool { server: String, tool: String },
    #[error(transparent)]
    Latency(#[from] LatencyError),
    #[error("executor failure: {0}")]
    Adapter(String),
}

/// Calls a tool on a server at simulation tick `t`.
pub trait Executor {
    fn execute(
        &mut self,
        server: &ServerRecord,
        tool: &ToolRecord,
        required_capability: &str,
        t: usize,
        env: &mut Environment,
    ) -> Result<ExecutionResult, ExecError>;
}

/// Runs a simulated call: the observed latency is the server's series value
/// at `t`, the call succeeds iff the capability matches and the server is
/// not in outage, and the latency is recorded back into the series.
pub fn simulate_execution(
    server: &ServerRecord,
    tool: &ToolRecord,
    required_capability: &str,
    t: usize,
    env: &mut Environment,
) -> Result<ExecutionResult, ExecError> {
    if server.tool(&tool.tool_id).is_none() {
        return Err(ExecError::UnknownTool {
            server: server.server_id.clone(),
            tool: tool.tool_id.clone(),
        });
    }
    let series = env.series_mut(&server.name)?;
    let observed_latency = series.sample_at(t)?;
    series.record_observation(t, observed_latency)?;
    let failed_by_outage = observed_latency >= OUTAGE_LATENCY_MS;
    Ok(ExecutionResult {
        success: server.capability == required_capability && !failed_by_outage,
        observed_latency,
        failed_by_outage,
        turn_count: 1,
    })
}

/// Default executor. With `stochastic_expertise` set, an otherwise successful
/// call also needs a Bernoulli(expertise) draw to succeed.
#[derive(Debug, Clone, Default)]
pub struct SimulatedExecutor {
    stochastic_expertise: Option<ChaCha8Rng>,
}

impl SimulatedExecutor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stochastic_expertise(seed: u64) -> Self {
        SimulatedExecutor {
            stochastic_expertise: Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

impl Executor for SimulatedExecutor {
    fn execute(
        &mut self,
        server: &ServerRecord,
        tool: &ToolRecord,
        required_capability: &str,
        t: usize,
        env: &mut Environment,
    ) -> Result<ExecutionResult, ExecError> {
        let mut result = simulate_execution(server, tool, required_capability, t, env)?;
        if let Some(rng) = &mut self.stochastic_expertise {
            if result.success && !rng.random_bool(server.expertise.clamp(0.0, 1.0)) {
                result.success = false;
            }
        }
        Ok(result)
    }
}

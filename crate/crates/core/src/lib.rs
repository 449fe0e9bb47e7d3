//! Network-aware tool routing over simulated MCP servers.
//!
//! The crate generates per-server latency series from a scenario file,
//! routes natural-language queries to a tool with a semantic retriever that
//! can be combined with a network-quality score, executes the choice against
//! the simulated network and aggregates success and latency metrics.

pub mod adapter;
pub mod agent;
pub mod config;
pub mod duration;
pub mod executor;
pub mod experiment;
pub mod latency;
pub mod metrics;
pub mod mock;
pub mod network;
pub mod pool;
pub mod router;
pub mod semantic;
pub mod tasks;

pub use config::{load_scenario, ScenarioConfig};
pub use duration::DurationMs;
pub use latency::Environment;
pub use pool::{load_pool, ServerPool};
pub use router::{Algorithm, Router, RoutingDecision, RoutingParams};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/routing.md")]
    mod routing {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

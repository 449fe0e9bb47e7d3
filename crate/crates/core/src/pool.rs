//! Virtual MCP servers and the tools they host.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolRecord {
    pub tool_id: String,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerRecord {
    pub server_id: String,
    /// Also the key of the server's latency profile in a scenario file.
    pub name: String,
    pub description: String,
    /// Capability tag, e.g. `"websearch"`.
    pub capability: String,
    /// In `[0, 1]`; feeds the expected-expertise metric.
    pub expertise: f64,
    pub tools: Vec<ToolRecord>,
}

impl ServerRecord {
    pub fn tool(&self, tool_id: &str) -> Option<&ToolRecord> {
        self.tools.iter().find(|t| t.tool_id == tool_id)
    }

    pub fn validate(&self) -> Result<(), PoolError> {
        let id = &self.server_id;
        if id.is_empty() {
            return Err(PoolError::Invalid {
                server: id.clone(),
                message: "empty server_id".into(),
            });
        }
        if self.description.trim().is_empty() {
            return Err(PoolError::Invalid {
                server: id.clone(),
                message: "empty description".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.expertise) {
            return Err(PoolError::Invalid {
                server: id.clone(),
                message: format!("expertise {} outside [0, 1]", self.expertise),
            });
        }
        if self.tools.is_empty() {
            return Err(PoolError::EmptyTools(id.clone()));
        }
        let mut seen = HashSet::new();
        for tool in &self.tools {
            if !seen.insert(tool.tool_id.as_str()) {
                return Err(PoolError::DuplicateTool {
                    server: id.clone(),
                    tool: tool.tool_id.clone(),
                });
            }
            if tool.description.trim().is_empty() {
                return Err(PoolError::Invalid {
                    server: id.clone(),
                    message: format!("tool {} has an empty description", tool.tool_id),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed server dataset {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("server pool is empty")]
    Empty,
    #[error("duplicate server_id {0:?}")]
    DuplicateServer(String),
    #[error("duplicate server name {0:?}")]
    DuplicateName(String),
    #[error("server {0:?} has no tools")]
    EmptyTools(String),
    #[error("server {server:?} lists tool {tool:?} twice")]
    DuplicateTool { server: String, tool: String },
    #[error("server {server:?}: {message}")]
    Invalid { server: String, message: String },
}

/// A validated, non-empty set of servers in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerPool {
    servers: Vec<ServerRecord>,
}

impl ServerPool {
    pub fn new(servers: Vec<ServerRecord>) -> Result<Self, PoolError> {
        if servers.is_empty() {
            return Err(PoolError::Empty);
        }
        let mut ids = HashSet::new();
        let mut names = HashSet::new();
        for s in &servers {
            if !ids.insert(s.server_id.as_str()) {
                return Err(PoolError::DuplicateServer(s.server_id.clone()));
            }
            if !names.insert(s.name.as_str()) {
                return Err(PoolError::DuplicateName(s.name.clone()));
            }
            s.validate()?;
        }
        Ok(ServerPool { servers })
    }

    pub fn servers(&self) -> &[ServerRecord] {
        &self.servers
    }

    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    pub fn get(&self, server_id: &str) -> Option<&ServerRecord> {
        self.servers.iter().find(|s| s.server_id == server_id)
    }

    pub fn has_capability(&self, capability: &str) -> bool {
        self.servers.iter().any(|s| s.capability == capability)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.servers).expect("pool serializes")
    }
}

/// Reads a server dataset: a JSON array of server objects.
pub fn load_pool(path: impl AsRef<Path>) -> Result<ServerPool, PoolError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PoolError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let servers: Vec<ServerRecord> =
        serde_json::from_str(&text).map_err(|source| PoolError::Json {
            path: path.display().to_string(),
            source,
        })?;
    ServerPool::new(servers)
}

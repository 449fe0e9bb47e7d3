//! Query workloads (JSON-Lines) and their placement on the simulation clock.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTask {
    pub task_id: String,
    pub query: String,
    pub required_capability: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("query file {0} contains no tasks")]
    Empty(String),
    #[error("duplicate task_id {0:?}")]
    DuplicateTask(String),
}

/// Reads one task per non-blank line.
pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<QueryTask>, TaskError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| TaskError::Io {
        path: shown.clone(),
        source,
    })?;
    let mut tasks = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let task: QueryTask = serde_json::from_str(line).map_err(|source| TaskError::Json {
            path: shown.clone(),
            line: i + 1,
            source,
        })?;
        if !seen.insert(task.task_id.clone()) {
            return Err(TaskError::DuplicateTask(task.task_id));
        }
        tasks.push(task);
    }
    if tasks.is_empty() {
        return Err(TaskError::Empty(shown));
    }
    Ok(tasks)
}

pub fn write_queries<W: Write>(tasks: &[QueryTask], mut out: W) -> std::io::Result<()> {
    for task in tasks {
        serde_json::to_writer(&mut out, task)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Spreads `n_tasks` evenly over `ticks`: task `i` runs at
/// `floor(i * ticks / n_tasks)`.
pub fn uniform_schedule(n_tasks: usize, ticks: usize) -> Vec<usize> {
    (0..n_tasks)
        .map(|i| ((i as u128 * ticks as u128) / n_tasks as u128) as usize)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_stays_in_horizon() {
        let s = uniform_schedule(290, 1440);
        assert_eq!(s.len(), 290);
        assert_eq!(s[0], 0);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
        assert!(*s.last().unwrap() < 1440);
        assert_eq!(uniform_schedule(3, 2), vec![0, 0, 1]);
    }

    #[test]
    fn jsonl_round_trip() {
        let tasks = vec![
            QueryTask {
                task_id: "t1".into(),
                query: "Who won?".into(),
                required_capability: "websearch".into(),
                ground_truth: None,
            },
            QueryTask {
                task_id: "t2".into(),
                query: "Latest news".into(),
                required_capability: "websearch".into(),
                ground_truth: Some("x".into()),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        let mut buf = Vec::new();
        write_queries(&tasks, &mut buf).unwrap();
        buf.extend_from_slice(b"\n");
        std::fs::write(&path, &buf).unwrap();
        assert_eq!(load_queries(&path).unwrap(), tasks);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        std::fs::write(&path, "{\"task_id\": \"a\"}\n").unwrap();
        assert!(matches!(load_queries(&path), Err(TaskError::Json { line: 1, .. })));
        std::fs::write(&path, "\n\n").unwrap();
        assert!(matches!(load_queries(&path), Err(TaskError::Empty(_))));
        let line = r#"{"task_id":"a","query":"q","required_capability":"w"}"#;
        std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(load_queries(&path), Err(TaskError::DuplicateTask(_))));
    }
}

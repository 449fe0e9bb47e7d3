//! Scenario files: per-server latency profiles over a simulation horizon.
//!
//! The on-disk format is a JSON object with a top-level `"last_time"`
//! duration, an optional `"tick"` duration, and exactly one scenario object
//! mapping server names to profiles:
//!
//! ```json
//! {
//!   "last_time": "24h",
//!   "hybrid_scenario": {
//!     "High_Latency_Server": { "base_latency": "350ms", "std_dev": "20ms" }
//!   }
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::duration::{parse_duration, DurationMs};

/// Sampling interval used when a scenario file omits `"tick"`.
pub const DEFAULT_TICK: DurationMs = DurationMs::from_mins(1);

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicityConfig {
    pub amplitude: DurationMs,
    pub period: DurationMs,
    /// Radians.
    pub phase_shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Intermittent,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::Intermittent => "intermittent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureConfig {
    pub kind: FailureKind,
    /// Probability that one outage episode occurs within the horizon.
    pub probability: f64,
    pub duration_range: (DurationMs, DurationMs),
    pub severity_range: (DurationMs, DurationMs),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyProfileConfig {
    pub base_latency: DurationMs,
    pub std_dev: DurationMs,
    pub periodicity: Option<PeriodicityConfig>,
    pub failure: Option<FailureConfig>,
}

impl LatencyProfileConfig {
    pub fn steady(base_ms: u64, std_ms: u64) -> Self {
        LatencyProfileConfig {
            base_latency: DurationMs::from_ms(base_ms),
            std_dev: DurationMs::from_ms(std_ms),
            periodicity: None,
            failure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Key of the scenario object, e.g. `"hybrid_scenario"`.
    pub name: String,
    /// The `"last_time"` field.
    pub horizon: DurationMs,
    pub tick: DurationMs,
    pub profiles: BTreeMap<String, LatencyProfileConfig>,
}

impl ScenarioConfig {
    /// Number of samples per generated series.
    pub fn ticks(&self) -> usize {
        (self.horizon.as_ms() / self.tick.as_ms()) as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tick.is_zero() {
            return Err(ConfigError::invalid("tick", "tick must be > 0"));
        }
        if self.horizon < self.tick {
            return Err(ConfigError::invalid("last_time", "horizon must be >= tick"));
        }
        if self.profiles.is_empty() {
            return Err(ConfigError::invalid(&self.name, "profiles non-empty"));
        }
        for (server, profile) in &self.profiles {
            validate_profile(profile, &format!("{}.{}", self.name, server))?;
        }
        Ok(())
    }

    /// Serializes back to the scenario file schema with sorted keys.
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("last_time".into(), Value::String(self.horizon.to_string()));
        if self.tick != DEFAULT_TICK {
            root.insert("tick".into(), Value::String(self.tick.to_string()));
        }
        let profiles: Map<String, Value> = self
            .profiles
            .iter()
            .map(|(name, p)| (name.clone(), profile_to_json(p)))
            .collect();
        root.insert(self.name.clone(), Value::Object(profiles));
        Value::Object(root)
    }

    pub fn from_json(value: &Value) -> Result<Self, ConfigError> {
        let root = value
            .as_object()
            .ok_or_else(|| ConfigError::invalid("$", "expected a JSON object"))?;
        let horizon = duration_field(root, "last_time", "last_time")?
            .ok_or_else(|| ConfigError::invalid("last_time", "missing required field"))?;
        let tick = duration_field(root, "tick", "tick")?.unwrap_or(DEFAULT_TICK);

        let mut scenario = None;
        for (key, v) in root {
            if key == "last_time" || key == "tick" {
                continue;
            }
            let Some(obj) = v.as_object() else {
                return Err(ConfigError::invalid(key, "unexpected non-object field"));
            };
            if scenario.is_some() {
                return Err(ConfigError::invalid(key, "more than one scenario object"));
            }
            scenario = Some((key.clone(), obj));
        }
        let (name, obj) =
            scenario.ok_or_else(|| ConfigError::invalid("$", "missing scenario object"))?;

        let mut profiles = BTreeMap::new();
        for (server, v) in obj {
            let path = format!("{name}.{server}");
            profiles.insert(server.clone(), parse_profile(v, &path)?);
        }
        let config = ScenarioConfig {
            name,
            horizon,
            tick,
            profiles,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid value at {path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(path: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.to_string(),
            message: message.into(),
        }
    }

    /// JSON path of a validation failure, if this is one.
    pub fn json_path(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { path, .. } => Some(path),
            _ => None,
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text).map_err(|e| match e {
        ConfigError::Json { source, .. } => ConfigError::Json {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|source| ConfigError::Json {
        path: "<input>".into(),
        source,
    })?;
    ScenarioConfig::from_json(&value)
}

fn validate_profile(p: &LatencyProfileConfig, path: &str) -> Result<(), ConfigError> {
    if p.base_latency.is_zero() {
        return Err(ConfigError::invalid(
            &format!("{path}.base_latency"),
            "base_latency must be > 0",
        ));
    }
    if let Some(per) = &p.periodicity {
        if per.period.is_zero() {
            return Err(ConfigError::invalid(
                &format!("{path}.periodicity.period"),
                "period must be > 0",
            ));
        }
        if !per.phase_shift.is_finite() {
            return Err(ConfigError::invalid(
                &format!("{path}.periodicity.phase_shift"),
                "phase_shift must be finite",
            ));
        }
    }
    if let Some(f) = &p.failure {
        let fpath = format!("{path}.failure_config");
        if !(0.0..=1.0).contains(&f.probability) {
            return Err(ConfigError::invalid(
                &format!("{fpath}.probability"),
                format!("probability {} outside [0, 1]", f.probability),
            ));
        }
        if f.duration_range.0 > f.duration_range.1 {
            return Err(ConfigError::invalid(
                &format!("{fpath}.duration"),
                "min exceeds max",
            ));
        }
        if f.severity_range.0 > f.severity_range.1 {
            return Err(ConfigError::invalid(
                &format!("{fpath}.severity"),
                "min exceeds max",
            ));
        }
    }
    Ok(())
}

fn parse_profile(value: &Value, path: &str) -> Result<LatencyProfileConfig, ConfigError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ConfigError::invalid(path, "expected a profile object"))?;
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "base_latency" | "std_dev" | "periodicity" | "failure_config"
        ) {
            return Err(ConfigError::invalid(
                &format!("{path}.{key}"),
                "unknown profile field",
            ));
        }
    }
    let base_latency = duration_field(obj, "base_latency", &format!("{path}.base_latency"))?
        .ok_or_else(|| ConfigError::invalid(&format!("{path}.base_latency"), "missing"))?;
    let std_dev =
        duration_field(obj, "std_dev", &format!("{path}.std_dev"))?.unwrap_or(DurationMs::ZERO);

    let periodicity = match obj.get("periodicity") {
        None | Some(Value::Null) => None,
        Some(v) => Some(parse_periodicity(v, &format!("{path}.periodicity"))?),
    };
    let failure = match obj.get("failure_config") {
        None | Some(Value::Null) => None,
        Some(v) => Some(parse_failure(v, &format!("{path}.failure_config"))?),
    };
    Ok(LatencyProfileConfig {
        base_latency,
        std_dev,
        periodicity,
        failure,
    })
}

fn parse_periodicity(value: &Value, path: &str) -> Result<PeriodicityConfig, ConfigError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ConfigError::invalid(path, "expected an object"))?;
    let amplitude = duration_field(obj, "amplitude", &format!("{path}.amplitude"))?
        .ok_or_else(|| ConfigError::invalid(&format!("{path}.amplitude"), "missing"))?;
    let period = duration_field(obj, "period", &format!("{path}.period"))?
        .ok_or_else(|| ConfigError::invalid(&format!("{path}.period"), "missing"))?;
    let phase_shift = match obj.get("phase_shift") {
        None => 0.0,
        Some(v) => v.as_f64().ok_or_else(|| {
            ConfigError::invalid(&format!("{path}.phase_shift"), "expected a number")
        })?,
    };
    Ok(PeriodicityConfig {
        amplitude,
        period,
        phase_shift,
    })
}

fn parse_failure(value: &Value, path: &str) -> Result<FailureConfig, ConfigError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ConfigError::invalid(path, "expected an object"))?;
    let kind = match obj.get("type").and_then(Value::as_str) {
        Some("intermittent") => FailureKind::Intermittent,
        Some(other) => {
            return Err(ConfigError::invalid(
                &format!("{path}.type"),
                format!("unknown failure type {other:?}"),
            ))
        }
        None => return Err(ConfigError::invalid(&format!("{path}.type"), "missing")),
    };
    let probability = obj
        .get("probability")
        .and_then(Value::as_f64)
        .ok_or_else(|| ConfigError::invalid(&format!("{path}.probability"), "expected a number"))?;
    let duration_range = range_field(obj, "duration", &format!("{path}.duration"))?;
    let severity_range = range_field(obj, "severity", &format!("{path}.severity"))?;
    Ok(FailureConfig {
        kind,
        probability,
        duration_range,
        severity_range,
    })
}

fn duration_value(value: &Value, path: &str) -> Result<DurationMs, ConfigError> {
    match value {
        Value::String(s) => parse_duration(s).map_err(|e| ConfigError::invalid(path, e.to_string())),
        Value::Number(n) => match n.as_f64() {
            Some(ms) if ms >= 0.0 && ms.is_finite() => Ok(DurationMs::from_ms(ms.trunc() as u64)),
            _ => Err(ConfigError::invalid(path, format!("invalid duration {n}"))),
        },
        _ => Err(ConfigError::invalid(path, "expected a duration string")),
    }
}

fn duration_field(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<Option<DurationMs>, ConfigError> {
    obj.get(key).map(|v| duration_value(v, path)).transpose()
}

fn range_field(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<(DurationMs, DurationMs), ConfigError> {
    let arr = obj
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| ConfigError::invalid(path, "expected a [min, max] array"))?;
    if arr.len() != 2 {
        return Err(ConfigError::invalid(path, "expected exactly two elements"));
    }
    Ok((
        duration_value(&arr[0], &format!("{path}[0]"))?,
        duration_value(&arr[1], &format!("{path}[1]"))?,
    ))
}

fn profile_to_json(p: &LatencyProfileConfig) -> Value {
    let mut obj = Map::new();
    obj.insert("base_latency".into(), Value::String(p.base_latency.to_string()));
    obj.insert("std_dev".into(), Value::String(p.std_dev.to_string()));
    if let Some(per) = &p.periodicity {
        let mut po = Map::new();
        po.insert("amplitude".into(), Value::String(per.amplitude.to_string()));
        po.insert("period".into(), Value::String(per.period.to_string()));
        po.insert("phase_shift".into(), serde_json::json!(per.phase_shift));
        obj.insert("periodicity".into(), Value::Object(po));
    }
    if let Some(f) = &p.failure {
        obj.insert(
            "failure_config".into(),
            serde_json::json!({
                "type": f.kind.as_str(),
                "probability": f.probability,
                "duration": [f.duration_range.0.to_string(), f.duration_range.1.to_string()],
                "severity": [f.severity_range.0.to_string(), f.severity_range.1.to_string()],
            }),
        );
    }
    Value::Object(obj)
}

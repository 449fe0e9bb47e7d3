//! Predefined network scenarios: ideal, hybrid and fluctuating.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{default_pool, WEBSEARCH, WEBSEARCH_NAMES};
use super::ExperimentError;
use crate::config::{
    FailureConfig, FailureKind, LatencyProfileConfig, PeriodicityConfig, ScenarioConfig,
    DEFAULT_TICK,
};
use crate::duration::DurationMs;
use crate::pool::ServerPool;

pub const DEFAULT_HORIZON: DurationMs = DurationMs::from_hours(24);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Ideal,
    Hybrid,
    Fluctuating,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Ideal => "ideal",
            ScenarioKind::Hybrid => "hybrid",
            ScenarioKind::Fluctuating => "fluctuating",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(ScenarioKind::Ideal),
            "hybrid" => Ok(ScenarioKind::Hybrid),
            "fluctuating" => Ok(ScenarioKind::Fluctuating),
            other => Err(ExperimentError::Config(format!(
                "unknown scenario kind {other:?} (expected ideal, hybrid or fluctuating)"
            ))),
        }
    }
}

/// Stable low-latency link.
pub fn ideal_profile() -> LatencyProfileConfig {
    LatencyProfileConfig::steady(30, 5)
}

/// The five heterogeneous websearch profiles, in the order of
/// [`WEBSEARCH_NAMES`].
///
/// The burst server's period is six hours: with one-minute ticks, a
/// sub-second period would only ever be sampled at the same few phases.
pub fn hybrid_profiles() -> [LatencyProfileConfig; 5] {
    [
        LatencyProfileConfig::steady(350, 20),
        LatencyProfileConfig::steady(30, 5),
        LatencyProfileConfig {
            failure: Some(FailureConfig {
                kind: FailureKind::Intermittent,
                probability: 0.5,
                duration_range: (DurationMs::from_mins(30), DurationMs::from_mins(100)),
                severity_range: (DurationMs::from_ms(1000), DurationMs::from_ms(1000)),
            }),
            ..LatencyProfileConfig::steady(30, 5)
        },
        LatencyProfileConfig {
            periodicity: Some(PeriodicityConfig {
                amplitude: DurationMs::from_ms(200),
                period: DurationMs::from_hours(6),
                phase_shift: 0.0,
            }),
            ..LatencyProfileConfig::steady(150, 20)
        },
        LatencyProfileConfig::steady(100, 70),
    ]
}

/// Sinusoidal profile used by the fluctuating scenario.
pub fn fluctuating_profile(phase_shift: f64) -> LatencyProfileConfig {
    LatencyProfileConfig {
        periodicity: Some(PeriodicityConfig {
            amplitude: DurationMs::from_ms(120),
            period: DurationMs::from_hours(6),
            phase_shift,
        }),
        ..LatencyProfileConfig::steady(150, 20)
    }
}

/// Builds a scenario keyed by the server names of `pool` (the default
/// dataset when `None`).
///
/// Websearch servers get the kind's special profiles: servers named after
/// [`WEBSEARCH_NAMES`] get the matching one, other websearch servers cycle
/// through them in pool order. Everything else gets the ideal profile. In
/// the fluctuating scenario the five phase offsets are evenly spaced and
/// rotated by a seed-dependent angle.
pub fn gen_scenario(kind: ScenarioKind, pool: Option<&ServerPool>, seed: u64) -> ScenarioConfig {
    let owned;
    let pool = match pool {
        Some(p) => p,
        None => {
            owned = default_pool();
            &owned
        }
    };
    let rotation = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..TAU / 5.0);
    let special: Vec<LatencyProfileConfig> = match kind {
        ScenarioKind::Ideal => Vec::new(),
        ScenarioKind::Hybrid => hybrid_profiles().to_vec(),
        ScenarioKind::Fluctuating => (0..5)
            .map(|k| fluctuating_profile(rotation + TAU * k as f64 / 5.0))
            .collect(),
    };

    let mut profiles = BTreeMap::new();
    let mut next_unnamed = 0;
    for server in pool.servers() {
        let profile = if special.is_empty() || server.capability != WEBSEARCH {
            ideal_profile()
        } else if let Some(i) = WEBSEARCH_NAMES.iter().position(|n| *n == server.name) {
            special[i].clone()
        } else {
            next_unnamed += 1;
            special[(next_unnamed - 1) % special.len()].clone()
        };
        profiles.insert(server.name.clone(), profile);
    }
    ScenarioConfig {
        name: format!("{kind}_scenario"),
        horizon: DEFAULT_HORIZON,
        tick: DEFAULT_TICK,
        profiles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::Environment;

    #[test]
    fn hybrid_matches_reference_profiles() {
        let s = gen_scenario(ScenarioKind::Hybrid, None, 0);
        assert_eq!(s.profiles.len(), 15);
        let high = &s.profiles["High_Latency_Server"];
        assert_eq!(high.base_latency, DurationMs::from_ms(350));
        assert_eq!(high.std_dev, DurationMs::from_ms(20));
        let outage = s.profiles["Intermittent_Outage_Server"].failure.as_ref().unwrap();
        assert_eq!(outage.probability, 0.5);
        assert_eq!(outage.severity_range.0, DurationMs::from_ms(1000));
        assert_eq!(s.profiles["Distractor_Server_01"], ideal_profile());
        s.validate().unwrap();
    }

    #[test]
    fn ideal_is_uniform() {
        let s = gen_scenario(ScenarioKind::Ideal, None, 3);
        assert!(s.profiles.values().all(|p| *p == ideal_profile()));
    }

    #[test]
    fn fluctuating_phases_are_distinct() {
        let s = gen_scenario(ScenarioKind::Fluctuating, None, 9);
        let mut phases: Vec<f64> = s
            .profiles
            .values()
            .filter_map(|p| p.periodicity.as_ref().map(|q| q.phase_shift))
            .collect();
        assert_eq!(phases.len(), 5);
        phases.sort_by(f64::total_cmp);
        assert!(phases.windows(2).all(|w| (w[1] - w[0] - TAU / 5.0).abs() < 1e-9));
    }

    #[test]
    fn deterministic_and_generatable() {
        for kind in [ScenarioKind::Ideal, ScenarioKind::Hybrid, ScenarioKind::Fluctuating] {
            let a = gen_scenario(kind, None, 11);
            assert_eq!(a.to_json().to_string(), gen_scenario(kind, None, 11).to_json().to_string());
            let env = Environment::generate(&a, 1).unwrap();
            assert_eq!(env.ticks(), 1440);
            env.ensure_covers(default_pool().servers().iter().map(|s| s.name.as_str()))
                .unwrap();
        }
        assert!("windy".parse::<ScenarioKind>().is_err());
    }
}

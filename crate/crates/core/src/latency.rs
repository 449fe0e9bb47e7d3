//! Seeded latency time series and the per-server environment built from a
//! scenario.
//!
//! Every series is generated from a ChaCha8 stream (`rand_chacha`), seeded by
//! mixing the scenario seed with an FNV-1a hash of the server name. Gaussian
//! noise uses the Box–Muller cosine branch, one standard normal per tick:
//!
//! ```text
//! u1 = 1 - U[0,1)        (in (0, 1])
//! u2 = U[0,1)
//! z  = sqrt(-2 ln u1) * cos(2 pi u2)
//! ```
//!
//! Outage sampling uses a second stream derived from the same server seed, so
//! toggling a failure block never shifts the noise sequence.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{FailureConfig, LatencyProfileConfig, ScenarioConfig};
use crate::duration::DurationMs;

/// Lower clamp applied to every generated sample, in ms.
pub const LATENCY_FLOOR_MS: f64 = 1.0;

const OUTAGE_STREAM_SALT: u64 = 0x6f75_7461_6765_0001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatencyError {
    #[error("time index {index} out of range for series of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("observation at t={index} precedes an earlier observation at t={last}")]
    NonMonotone { index: usize, last: usize },
    #[error("horizon {horizon} cannot fit an outage of at least {min}")]
    OutageDoesNotFit { horizon: DurationMs, min: DurationMs },
    #[error("horizon {horizon} and tick {tick} do not yield any samples")]
    EmptyHorizon { horizon: DurationMs, tick: DurationMs },
    #[error("no latency series for server {0:?}")]
    UnknownServer(String),
    #[error("servers without a latency profile: {0:?}")]
    MissingProfiles(Vec<String>),
}

/// A window `[start, end)` of ticks during which latency is pinned to
/// `severity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageInterval {
    pub start: usize,
    pub end: usize,
    pub severity: f64,
}

impl OutageInterval {
    pub fn contains(&self, t: usize) -> bool {
        (self.start..self.end).contains(&t)
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Generated latency history of one server plus latencies observed by the
/// agent (feedforward recording).
#[derive(Debug, Clone, PartialEq)]
pub struct LatencySeries {
    server: String,
    tick: DurationMs,
    samples: Vec<f64>,
    outages: Vec<OutageInterval>,
    /// Strictly increasing in time index.
    observations: Vec<(usize, f64)>,
}

impl LatencySeries {
    pub fn from_samples(server: impl Into<String>, tick: DurationMs, samples: Vec<f64>) -> Self {
        LatencySeries {
            server: server.into(),
            tick,
            samples,
            outages: Vec::new(),
            observations: Vec::new(),
        }
    }

    pub fn server(&self) -> &str {
        &self.server
    }

    pub fn tick(&self) -> DurationMs {
        self.tick
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Generated samples, without observations merged in.
    pub fn generated(&self) -> &[f64] {
        &self.samples
    }

    pub fn outages(&self) -> &[OutageInterval] {
        &self.outages
    }

    pub fn observations(&self) -> &[(usize, f64)] {
        &self.observations
    }

    pub fn in_outage(&self, t: usize) -> bool {
        self.outages.iter().any(|o| o.contains(t))
    }

    fn check_index(&self, t: usize) -> Result<(), LatencyError> {
        if t < self.samples.len() {
            Ok(())
        } else {
            Err(LatencyError::IndexOutOfRange {
                index: t,
                len: self.samples.len(),
            })
        }
    }

    /// Latency at `t`; a recorded observation at `t` wins over the generated
    /// sample.
    pub fn sample_at(&self, t: usize) -> Result<f64, LatencyError> {
        self.check_index(t)?;
        Ok(match self.observations.binary_search_by_key(&t, |&(i, _)| i) {
            Ok(pos) => self.observations[pos].1,
            Err(_) => self.samples[t],
        })
    }

    /// `[l_0, ..., l_t]` with observations merged in.
    pub fn history_up_to(&self, t: usize) -> Result<Vec<f64>, LatencyError> {
        self.check_index(t)?;
        let mut history = self.samples[..=t].to_vec();
        for &(i, latency) in &self.observations {
            if i > t {
                break;
            }
            history[i] = latency;
        }
        Ok(history)
    }

    /// Records a latency observed at `t`. Indices must be non-decreasing
    /// across calls; a second record at the same index replaces the first.
    pub fn record_observation(&mut self, t: usize, latency: f64) -> Result<(), LatencyError> {
        self.check_index(t)?;
        match self.observations.last_mut() {
            Some((last, value)) if *last == t => *value = latency,
            Some(&mut (last, _)) if last > t => {
                return Err(LatencyError::NonMonotone { index: t, last })
            }
            _ => self.observations.push((t, latency)),
        }
        Ok(())
    }

    /// Writes `tick_index,latency_ms` rows (observations merged).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "tick_index,latency_ms")?;
        if self.samples.is_empty() {
            return Ok(());
        }
        let history = self
            .history_up_to(self.samples.len() - 1)
            .expect("non-empty series");
        for (t, latency) in history.iter().enumerate() {
            writeln!(out, "{t},{latency:.4}")?;
        }
        Ok(())
    }
}

/// 64-bit FNV-1a.
pub fn stable_name_hash(name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for one server's series; independent of every other server name.
pub fn server_seed(scenario_seed: u64, server: &str) -> u64 {
    splitmix64(scenario_seed ^ stable_name_hash(server))
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Draws the outage episodes for one horizon.
///
/// One Bernoulli(`probability`) draw decides whether an episode happens. If
/// it does, its duration and severity are uniform over their ranges (integer
/// milliseconds) and the start tick is uniform over all positions where the
/// episode fits.
pub fn sample_outage_intervals(
    config: &FailureConfig,
    horizon: DurationMs,
    tick: DurationMs,
    seed: u64,
) -> Result<Vec<OutageInterval>, LatencyError> {
    let n = tick_count(horizon, tick)?;
    if horizon < config.duration_range.0 {
        return Err(LatencyError::OutageDoesNotFit {
            horizon,
            min: config.duration_range.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.random::<f64>() >= config.probability {
        return Ok(Vec::new());
    }
    let (dmin, dmax) = config.duration_range;
    let duration = rng.random_range(dmin.as_ms()..=dmax.as_ms());
    let (smin, smax) = config.severity_range;
    let severity = rng.random_range(smin.as_ms()..=smax.as_ms()) as f64;

    let ticks = duration.div_ceil(tick.as_ms()).clamp(1, n as u64) as usize;
    let start = rng.random_range(0..=n - ticks);
    Ok(vec![OutageInterval {
        start,
        end: start + ticks,
        severity: severity.max(LATENCY_FLOOR_MS),
    }])
}

fn tick_count(horizon: DurationMs, tick: DurationMs) -> Result<usize, LatencyError> {
    if tick.is_zero() || horizon < tick {
        return Err(LatencyError::EmptyHorizon { horizon, tick });
    }
    Ok((horizon.as_ms() / tick.as_ms()) as usize)
}

/// Generates `horizon / tick` samples of
/// `base + A sin(2 pi t tick / T + phase) + N(0, std^2)`, clamped to at
/// least 1 ms, with outage ticks overridden by their severity.
pub fn generate_series(
    server: &str,
    config: &LatencyProfileConfig,
    horizon: DurationMs,
    tick: DurationMs,
    seed: u64,
) -> Result<LatencySeries, LatencyError> {
    let n = tick_count(horizon, tick)?;
    let outages = match &config.failure {
        Some(f) => sample_outage_intervals(f, horizon, tick, seed ^ OUTAGE_STREAM_SALT)?,
        None => Vec::new(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = config.base_latency.as_f64();
    let std = config.std_dev.as_f64();
    let mut samples = Vec::with_capacity(n);
    for t in 0..n {
        let noise = std * standard_normal(&mut rng);
        let periodic = match &config.periodicity {
            Some(p) => {
                let period = p.period.as_ms();
                let offset = (t as u64 * tick.as_ms()) % period;
                p.amplitude.as_f64() * (TAU * offset as f64 / period as f64 + p.phase_shift).sin()
            }
            None => 0.0,
        };
        samples.push((base + periodic + noise).max(LATENCY_FLOOR_MS));
    }
    for outage in &outages {
        for sample in &mut samples[outage.start..outage.end] {
            *sample = outage.severity;
        }
    }
    Ok(LatencySeries {
        server: server.to_string(),
        tick,
        samples,
        outages,
        observations: Vec::new(),
    })
}

/// Latency series for every server of a scenario, keyed by server name.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    tick: DurationMs,
    ticks: usize,
    series: BTreeMap<String, LatencySeries>,
}

impl Environment {
    pub fn generate(scenario: &ScenarioConfig, seed: u64) -> Result<Self, LatencyError> {
        let ticks = tick_count(scenario.horizon, scenario.tick)?;
        let series = scenario
            .profiles
            .iter()
            .map(|(name, profile)| {
                let s = generate_series(
                    name,
                    profile,
                    scenario.horizon,
                    scenario.tick,
                    server_seed(seed, name),
                )?;
                Ok((name.clone(), s))
            })
            .collect::<Result<_, LatencyError>>()?;
        Ok(Environment {
            tick: scenario.tick,
            ticks,
            series,
        })
    }

    /// Builds an environment from prepared series; all must share one length.
    pub fn from_series(series: impl IntoIterator<Item = LatencySeries>) -> Self {
        let series: BTreeMap<_, _> = series
            .into_iter()
            .map(|s| (s.server.clone(), s))
            .collect();
        let first = series.values().next();
        let tick = first.map(|s| s.tick).unwrap_or(DurationMs::from_ms(1));
        let ticks = first.map(|s| s.len()).unwrap_or(0);
        assert!(
            series.values().all(|s| s.len() == ticks),
            "series lengths differ"
        );
        Environment {
            tick,
            ticks,
            series,
        }
    }

    /// Fails if any of `servers` has no series.
    pub fn ensure_covers<'a>(
        &self,
        servers: impl IntoIterator<Item = &'a str>,
    ) -> Result<(), LatencyError> {
        let missing: Vec<String> = servers
            .into_iter()
            .filter(|s| !self.series.contains_key(*s))
            .map(str::to_string)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(LatencyError::MissingProfiles(missing))
        }
    }

    pub fn tick(&self) -> DurationMs {
        self.tick
    }

    /// Length of every series.
    pub fn ticks(&self) -> usize {
        self.ticks
    }

    pub fn series(&self, server: &str) -> Result<&LatencySeries, LatencyError> {
        self.series
            .get(server)
            .ok_or_else(|| LatencyError::UnknownServer(server.to_string()))
    }

    pub fn series_mut(&mut self, server: &str) -> Result<&mut LatencySeries, LatencyError> {
        self.series
            .get_mut(server)
            .ok_or_else(|| LatencyError::UnknownServer(server.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &LatencySeries)> {
        self.series.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{FailureKind, PeriodicityConfig};

    fn fig5_outage() -> FailureConfig {
        FailureConfig {
            kind: FailureKind::Intermittent,
            probability: 1.0,
            duration_range: (DurationMs::from_mins(30), DurationMs::from_mins(30)),
            severity_range: (DurationMs::from_ms(1000), DurationMs::from_ms(1000)),
        }
    }

    const DAY: DurationMs = DurationMs::from_hours(24);
    const MINUTE: DurationMs = DurationMs::from_mins(1);

    #[test]
    fn no_outage_when_probability_zero() {
        let cfg = FailureConfig {
            probability: 0.0,
            ..fig5_outage()
        };
        for seed in 0..50 {
            assert!(sample_outage_intervals(&cfg, DAY, MINUTE, seed)
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn certain_outage_has_configured_shape() {
        for seed in 0..50 {
            let got = sample_outage_intervals(&fig5_outage(), DAY, MINUTE, seed).unwrap();
            assert_eq!(got.len(), 1);
            assert_eq!(got[0].len(), 30);
            assert_eq!(got[0].severity, 1000.0);
            assert!(got[0].end <= 1440);
        }
    }

    #[test]
    fn outage_longer_than_horizon_is_an_error() {
        let cfg = FailureConfig {
            duration_range: (DurationMs::from_hours(2), DurationMs::from_hours(3)),
            ..fig5_outage()
        };
        assert!(matches!(
            sample_outage_intervals(&cfg, DurationMs::from_hours(1), MINUTE, 1),
            Err(LatencyError::OutageDoesNotFit { .. })
        ));
    }

    #[test]
    fn constant_profile() {
        let s = generate_series("a", &LatencyProfileConfig::steady(30, 0), DAY, MINUTE, 9).unwrap();
        assert_eq!(s.len(), 1440);
        assert!(s.generated().iter().all(|&v| v == 30.0));
        assert_eq!(s.sample_at(0).unwrap(), 30.0);
    }

    #[test]
    fn sinusoid_peak() {
        let cfg = LatencyProfileConfig {
            periodicity: Some(PeriodicityConfig {
                amplitude: DurationMs::from_ms(200),
                period: DurationMs::from_hours(4),
                phase_shift: 0.0,
            }),
            ..LatencyProfileConfig::steady(150, 0)
        };
        let s = generate_series("a", &cfg, DAY, MINUTE, 0).unwrap();
        assert_eq!(s.sample_at(60).unwrap(), 350.0);
        assert_eq!(s.sample_at(180).unwrap(), 1.0); // 150 - 200 clamps
    }

    #[test]
    fn outage_ticks_pinned_to_severity() {
        let cfg = LatencyProfileConfig {
            failure: Some(fig5_outage()),
            ..LatencyProfileConfig::steady(30, 5)
        };
        let s = generate_series("Intermittent_Outage_Server", &cfg, DAY, MINUTE, 3).unwrap();
        let o = s.outages()[0];
        assert!((o.start..o.end).all(|t| s.sample_at(t).unwrap() == 1000.0));
        assert!(s.in_outage(o.start) && !s.in_outage(o.end));
    }

    #[test]
    fn generation_is_deterministic_and_name_seeded() {
        let cfg = LatencyProfileConfig::steady(100, 70);
        let a = generate_series("x", &cfg, DAY, MINUTE, server_seed(5, "x")).unwrap();
        let b = generate_series("x", &cfg, DAY, MINUTE, server_seed(5, "x")).unwrap();
        let c = generate_series("y", &cfg, DAY, MINUTE, server_seed(5, "y")).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.generated(), c.generated());
    }

    #[test]
    fn golden_noise_values() {
        // Pins the ChaCha8 + Box-Muller stream; a change here changes every
        // generated scenario.
        let s = generate_series(
            "golden",
            &LatencyProfileConfig::steady(100, 10),
            DurationMs::from_mins(4),
            MINUTE,
            42,
        )
        .unwrap();
        let got: Vec<String> = s.generated().iter().map(|v| format!("{v:.6}")).collect();
        assert_eq!(got, GOLDEN);
    }

    const GOLDEN: [&str; 4] = ["114.402541", "92.643178", "104.852373", "102.849687"];

    #[test]
    fn observations_win_and_merge() {
        let mut s = LatencySeries::from_samples("a", MINUTE, vec![30.0; 12]);
        s.record_observation(5, 480.0).unwrap();
        assert_eq!(s.sample_at(5).unwrap(), 480.0);
        let h = s.history_up_to(9).unwrap();
        assert_eq!(h.len(), 10);
        assert_eq!(h[5], 480.0);
        assert_eq!(h[4], 30.0);

        s.record_observation(10, 2000.0).unwrap();
        s.record_observation(10, 2500.0).unwrap();
        assert_eq!(*s.history_up_to(10).unwrap().last().unwrap(), 2500.0);
        assert_eq!(
            s.record_observation(5, 1.0),
            Err(LatencyError::NonMonotone { index: 5, last: 10 })
        );
        assert!(matches!(
            s.sample_at(12),
            Err(LatencyError::IndexOutOfRange { index: 12, len: 12 })
        ));
        assert!(s.history_up_to(12).is_err());
        assert!(s.record_observation(12, 1.0).is_err());
    }

    #[test]
    fn csv_export() {
        let s = LatencySeries::from_samples("a", MINUTE, vec![30.0, 31.5]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tick_index,latency_ms\n0,30.0000\n1,31.5000\n"
        );
    }

    #[test]
    fn environment_reports_missing_profiles() {
        let env = Environment::from_series([LatencySeries::from_samples("a", MINUTE, vec![1.0])]);
        assert!(env.ensure_covers(["a"]).is_ok());
        assert_eq!(
            env.ensure_covers(["a", "b"]),
            Err(LatencyError::MissingProfiles(vec!["b".into()]))
        );
        assert!(env.series("zzz").is_err());
    }
}

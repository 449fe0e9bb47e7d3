//! Network score of a server from its latency history.
//!
//! The score starts from a base score of the EWMA-predicted latency and is
//! reduced multiplicatively by four penalties computed over the most recent
//! window of samples:
//!
//! ```text
//! N = base * (1 - w1 P_high) * (1 - w2 P_trend) * (1 - w3 P_outage) * (1 - w4 P_instability)
//! ```
//!
//! A server whose latest sample is at or above the offline threshold scores
//! exactly -1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("latency history is empty")]
    EmptyHistory,
    #[error("invalid scoring parameter {field}: {message}")]
    InvalidParam {
        field: &'static str,
        message: String,
    },
}

/// Penalty weights `(w1, w2, w3, w4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyWeights {
    pub high: f64,
    pub trend: f64,
    pub outage: f64,
    pub instability: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        PenaltyWeights {
            high: 0.5,
            trend: 0.2,
            outage: 0.8,
            instability: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    pub ewma_lambda: f64,
    /// Window length W for the trend, outage and instability penalties.
    pub window: usize,
    pub ideal_low_ms: f64,
    pub ideal_high_ms: f64,
    /// Decay constant of the base score above `ideal_high_ms`.
    pub decay_tau_ms: f64,
    /// Samples strictly above this count towards the outage-risk penalty.
    pub outage_threshold_ms: f64,
    /// A latest sample at or above this marks the server offline.
    pub offline_threshold_ms: f64,
    pub weights: PenaltyWeights,
    /// Coefficient of variation that saturates the instability penalty.
    pub cv_ref: f64,
}

impl Default for ScoringParams {
    fn default() -> Self {
        ScoringParams {
            ewma_lambda: 0.3,
            window: 10,
            ideal_low_ms: 20.0,
            ideal_high_ms: 50.0,
            decay_tau_ms: 300.0,
            outage_threshold_ms: 800.0,
            offline_threshold_ms: 1000.0,
            weights: PenaltyWeights::default(),
            cv_ref: 1.0,
        }
    }
}

impl ScoringParams {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |field, message: &str| {
            Err(ScoringError::InvalidParam {
                field,
                message: message.to_string(),
            })
        };
        if !(self.ewma_lambda > 0.0 && self.ewma_lambda <= 1.0) {
            return bad("ewma_lambda", "must be in (0, 1]");
        }
        if self.window < 2 {
            return bad("window", "must be at least 2");
        }
        if !(self.ideal_low_ms < self.ideal_high_ms) {
            return bad("ideal_low_ms", "must be below ideal_high_ms");
        }
        if !(self.outage_threshold_ms < self.offline_threshold_ms) {
            return bad("outage_threshold_ms", "must be below offline_threshold_ms");
        }
        if !(self.offline_threshold_ms > self.ideal_high_ms) {
            return bad("offline_threshold_ms", "must exceed ideal_high_ms");
        }
        if !(self.decay_tau_ms > 0.0) {
            return bad("decay_tau_ms", "must be positive");
        }
        if !(self.cv_ref > 0.0) {
            return bad("cv_ref", "must be positive");
        }
        let w = self.weights;
        for (field, v) in [
            ("weights.high", w.high),
            ("weights.trend", w.trend),
            ("weights.outage", w.outage),
            ("weights.instability", w.instability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(field, "must be in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkScoreBreakdown {
    pub predicted_latency: f64,
    pub base_score: f64,
    pub p_high: f64,
    pub p_trend: f64,
    pub p_outage: f64,
    pub p_instability: f64,
    /// -1 when offline, otherwise in `[0, 1]`.
    pub final_score: f64,
    pub offline: bool,
}

/// EWMA seeded with the first sample: `e_k = lambda l_k + (1 - lambda) e_{k-1}`.
pub fn ewma_predict(history: &[f64], lambda: f64) -> Result<f64, ScoringError> {
    let (&first, rest) = history.split_first().ok_or(ScoringError::EmptyHistory)?;
    Ok(rest
        .iter()
        .fold(first, |acc, &l| lambda * l + (1.0 - lambda) * acc))
}

/// 1 inside the ideal range (and below it), exponential decay above it.
pub fn base_score(predicted: f64, params: &ScoringParams) -> f64 {
    if predicted <= params.ideal_high_ms {
        1.0
    } else {
        (-(predicted - params.ideal_high_ms) / params.decay_tau_ms).exp()
    }
}

/// Relative excess of the predicted latency over the ideal ceiling, scaled
/// so that the offline threshold saturates the penalty.
pub fn penalty_high(predicted: f64, params: &ScoringParams) -> f64 {
    ((predicted - params.ideal_high_ms) / (params.offline_threshold_ms - params.ideal_high_ms))
        .clamp(0.0, 1.0)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Least-squares slope (ms per tick) projected over the window length and
/// taken relative to the window mean. Falling latency is not penalized.
pub fn penalty_trend(window: &[f64], _params: &ScoringParams) -> f64 {
    let n = window.len();
    if n < 2 {
        return 0.0;
    }
    let x_mean = (n - 1) as f64 / 2.0;
    let y_mean = mean(window);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in window.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let rise = slope * n as f64;
    (rise / y_mean.max(1.0)).clamp(0.0, 1.0)
}

/// Fraction of the window strictly above the outage threshold.
pub fn penalty_outage(window: &[f64], params: &ScoringParams) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    let above = window
        .iter()
        .filter(|&&l| l > params.outage_threshold_ms)
        .count();
    above as f64 / window.len() as f64
}

/// Coefficient of variation (population std over mean) relative to `cv_ref`.
pub fn penalty_instability(window: &[f64], params: &ScoringParams) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    let m = mean(window);
    let var = window.iter().map(|l| (l - m).powi(2)).sum::<f64>() / window.len() as f64;
    let cv = var.sqrt() / m.max(1.0);
    (cv / params.cv_ref).clamp(0.0, 1.0)
}

/// Multiplies the base score by the four penalty factors.
pub fn combine(base: f64, penalties: [f64; 4], weights: &PenaltyWeights) -> f64 {
    let [high, trend, outage, instability] = penalties;
    base * (1.0 - weights.high * high)
        * (1.0 - weights.trend * trend)
        * (1.0 - weights.outage * outage)
        * (1.0 - weights.instability * instability)
}

/// Scores the history `[l_0, ..., l_t]` of one server.
///
/// Window penalties use the last `min(window, len)` samples; the prediction
/// uses the whole history. Penalties are reported even for offline servers.
pub fn score_server_latency(
    history: &[f64],
    params: &ScoringParams,
) -> Result<NetworkScoreBreakdown, ScoringError> {
    let &latest = history.last().ok_or(ScoringError::EmptyHistory)?;
    let predicted = ewma_predict(history, params.ewma_lambda)?;
    let window = &history[history.len().saturating_sub(params.window)..];

    let base = base_score(predicted, params);
    let p_high = penalty_high(predicted, params);
    let p_trend = penalty_trend(window, params);
    let p_outage = penalty_outage(window, params);
    let p_instability = penalty_instability(window, params);
    let offline = latest >= params.offline_threshold_ms;
    let final_score = if offline {
        -1.0
    } else {
        combine(
            base,
            [p_high, p_trend, p_outage, p_instability],
            &params.weights,
        )
    };
    Ok(NetworkScoreBreakdown {
        predicted_latency: predicted,
        base_score: base,
        p_high,
        p_trend,
        p_outage,
        p_instability,
        final_score,
        offline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ScoringParams {
        ScoringParams::default()
    }

    #[test]
    fn ewma_cases() {
        assert_eq!(ewma_predict(&[7.0; 5], 0.3).unwrap(), 7.0);
        assert!((ewma_predict(&[0.0, 100.0], 0.3).unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(ewma_predict(&[42.0], 0.3).unwrap(), 42.0);
        assert_eq!(ewma_predict(&[], 0.3), Err(ScoringError::EmptyHistory));
    }

    #[test]
    fn base_score_cases() {
        assert_eq!(base_score(30.0, &p()), 1.0);
        assert_eq!(base_score(50.0, &p()), 1.0);
        assert_eq!(base_score(5.0, &p()), 1.0);
        assert!((base_score(350.0, &p()) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn high_penalty_cases() {
        assert_eq!(penalty_high(40.0, &p()), 0.0);
        assert!((penalty_high(1000.0, &p()) - 1.0).abs() < 1e-12);
        assert!((penalty_high(525.0, &p()) - 0.5).abs() < 1e-12);
        assert_eq!(penalty_high(5000.0, &p()), 1.0);
    }

    #[test]
    fn trend_penalty_cases() {
        assert_eq!(penalty_trend(&[80.0; 10], &p()), 0.0);
        let falling: Vec<f64> = (0..10).map(|i| 200.0 - 10.0 * i as f64).collect();
        assert_eq!(penalty_trend(&falling, &p()), 0.0);
        let rising: Vec<f64> = (0..10).map(|i| 100.0 + 10.0 * i as f64).collect();
        assert!((penalty_trend(&rising, &p()) - 100.0 / 145.0).abs() < 1e-12);
        assert_eq!(penalty_trend(&[5.0], &p()), 0.0);
    }

    #[test]
    fn outage_penalty_cases() {
        assert_eq!(penalty_outage(&[30.0; 10], &p()), 0.0);
        let mut half = vec![30.0; 5];
        half.extend([900.0; 5]);
        assert_eq!(penalty_outage(&half, &p()), 0.5);
        assert_eq!(penalty_outage(&[1000.0; 10], &p()), 1.0);
        // Strictly above.
        assert_eq!(penalty_outage(&[800.0; 10], &p()), 0.0);
    }

    #[test]
    fn instability_penalty_cases() {
        assert_eq!(penalty_instability(&[60.0; 10], &p()), 0.0);
        // mean 100, population std 70
        assert!((penalty_instability(&[30.0, 170.0], &p()) - 0.7).abs() < 1e-12);
        // CV 1.5
        assert_eq!(penalty_instability(&[0.0, 0.0, 0.0, 100.0], &p()), 1.0);
    }

    #[test]
    fn score_worked_examples() {
        let mut hist = vec![30.0; 9];
        hist.push(1000.0);
        let b = score_server_latency(&hist, &p()).unwrap();
        assert!(b.offline);
        assert_eq!(b.final_score, -1.0);
        assert!(b.p_outage > 0.0);

        let b = score_server_latency(&[30.0; 10], &p()).unwrap();
        assert_eq!(b.base_score, 1.0);
        assert_eq!([b.p_high, b.p_trend, b.p_outage, b.p_instability], [0.0; 4]);
        assert_eq!(b.final_score, 1.0);

        let b = score_server_latency(&[350.0; 10], &p()).unwrap();
        assert!((b.predicted_latency - 350.0).abs() < 1e-9);
        let expected = (-1.0f64).exp() * (1.0 - 0.5 * 300.0 / 950.0);
        assert!((b.final_score - expected).abs() < 1e-12);
        assert!((b.final_score - 0.3098).abs() < 1e-4);
        assert!(!b.offline);
    }

    #[test]
    fn short_history_uses_what_exists() {
        let b = score_server_latency(&[30.0, 40.0], &p()).unwrap();
        assert!(b.final_score > 0.0 && b.final_score < 1.0);
        assert_eq!(score_server_latency(&[], &p()), Err(ScoringError::EmptyHistory));
    }

    #[test]
    fn param_validation() {
        assert!(p().validate().is_ok());
        let mut bad = p();
        bad.weights.outage = 1.5;
        assert!(bad.validate().is_err());
        let mut bad = p();
        bad.window = 1;
        assert!(bad.validate().is_err());
        let mut bad = p();
        bad.outage_threshold_ms = 1200.0;
        assert!(bad.validate().is_err());
        let mut bad = p();
        bad.ewma_lambda = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn params_deserialize_partially() {
        let params: ScoringParams =
            serde_json::from_str(r#"{"ewma_lambda": 0.5, "weights": {"high": 1, "trend": 0, "outage": 1, "instability": 0}}"#)
                .unwrap();
        assert_eq!(params.ewma_lambda, 0.5);
        assert_eq!(params.window, 10);
        assert_eq!(params.weights.high, 1.0);
    }
}

//! Ljung–Box portmanteau test for serial correlation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxResult {
    /// `Q = n(n+2) Σ ρ_k²/(n−k)`.
    pub statistic: f64,
    /// Upper-tail probability of `Q` under the white-noise hypothesis.
    pub p_value: f64,
    pub lags: usize,
    pub df: usize,
}

/// Ljung–Box test over lags `1..=n_lags`.
pub fn ljung_box(series: &[f64], n_lags: usize) -> Result<LjungBoxResult> {
    let n = series.len();
    if n_lags == 0 || n <= n_lags {
        return Err(Error::InsufficientData(format!(
            "Ljung-Box with {n_lags} lags needs more than {n_lags} points, got {n}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 {
        return Err(Error::EstimatorInvalid("series has zero variance".into()));
    }
    let nf = n as f64;
    let statistic = nf
        * (nf + 2.0)
        * (1..=n_lags)
            .map(|k| {
                let rho = dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom;
                rho * rho / (nf - k as f64)
            })
            .sum::<f64>();
    let chi = ChiSquared::new(n_lags as f64).map_err(|e| Error::EstimatorInvalid(e.to_string()))?;
    Ok(LjungBoxResult {
        statistic,
        p_value: chi.sf(statistic),
        lags: n_lags,
        df: n_lags,
    })
}

/// Subtracts a centered moving average spanning `window` points (shrinking at
/// the ends), removing variations slower than the window.
pub fn detrend_moving(series: &[f64], window: usize) -> Vec<f64> {
    let n = series.len();
    let half = window.max(1) / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in series {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            series[i] - (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Ljung–Box test after removing drifts slower than `drift_time` seconds from
/// a series sampled every `t_cycle` seconds.
pub fn ljung_box_detrended(
    series: &[f64],
    n_lags: usize,
    t_cycle: f64,
    drift_time: f64,
) -> Result<LjungBoxResult> {
    let window = ((drift_time / t_cycle).round() as usize).max(3);
    ljung_box(&detrend_moving(series, window), n_lags)
}

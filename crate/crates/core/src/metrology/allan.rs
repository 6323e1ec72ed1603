//! Allan statistics of per-cycle fractional frequency estimates.

use super::variance_interval;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Fractional frequency estimates taken once per clock cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySeries {
    pub label: String,
    /// Cycle time `T_C`, s.
    pub t_cycle: f64,
    /// Fractional frequency `y_k` of cycle `k`.
    pub values: Vec<f64>,
    /// Cycles whose normalized signal left the invertible range of the
    /// phase estimator and was clamped.
    pub ambiguous_cycles: Vec<usize>,
}

impl FrequencySeries {
    pub fn new(label: impl Into<String>, t_cycle: f64, values: Vec<f64>) -> Self {
        FrequencySeries {
            label: label.into(),
            t_cycle,
            values,
            ambiguous_cycles: Vec::new(),
        }
    }

    /// Start time of every cycle, `k·T_C`.
    pub fn timestamps(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|k| k as f64 * self.t_cycle)
            .collect()
    }

    /// Element-wise difference `self - other`, labelled `label`.
    pub fn difference(&self, other: &FrequencySeries, label: impl Into<String>) -> Result<Self> {
        if self.t_cycle != other.t_cycle {
            return Err(Error::CycleTimeMismatch(self.t_cycle, other.t_cycle));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(FrequencySeries::new(label, self.t_cycle, values))
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        FrequencySeries {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Variant of the two-sample variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllanKind {
    #[default]
    Overlapping,
    Modified,
}

/// Allan deviation versus averaging time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllanSeries {
    /// Averaging times, s.
    pub taus: Vec<f64>,
    pub adev: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    /// Number of terms in each variance sum.
    pub n_samples: Vec<usize>,
    /// Equivalent degrees of freedom behind each confidence interval.
    pub edf: Vec<f64>,
    /// Set where a quadrature subtraction was negative beyond its confidence interval.
    pub flagged: Vec<bool>,
}

impl AllanSeries {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

/// Averaging factors `1, 2, 4, …` leaving at least three blocks of `len` values.
pub fn octave_factors(len: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |m| m.checked_mul(2))
        .take_while(|&m| len / m >= 3)
        .collect()
}

/// Equivalent degrees of freedom of the overlapping Allan variance for white
/// frequency noise, `n_phase` phase points and averaging factor `m`.
fn white_fm_edf(n_phase: usize, m: usize) -> f64 {
    let n = n_phase as f64;
    let m = m as f64;
    let edf =
        (3.0 * (n - 1.0) / (2.0 * m) - 2.0 * (n - 2.0) / n) * (4.0 * m * m) / (4.0 * m * m + 5.0);
    edf.max(1.0)
}

/// Overlapping Allan deviation at averaging times `factors[i]·T_C`.
pub fn allan_deviation(series: &FrequencySeries, factors: &[usize]) -> Result<AllanSeries> {
    allan_deviation_with(series, factors, AllanKind::Overlapping)
}

/// Allan deviation of the requested kind at averaging times `factors[i]·T_C`.
pub fn allan_deviation_with(
    series: &FrequencySeries,
    factors: &[usize],
    kind: AllanKind,
) -> Result<AllanSeries> {
    if !(series.t_cycle > 0.0) {
        return Err(invalid("t_cycle", "must be positive"));
    }
    if factors.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("taus", "must be strictly increasing"));
    }
    let y = &series.values;
    let len = y.len();
    // Phase (time-error) record in units of T_C, referenced to the first
    // value so that a constant series gives exact zeros.
    let y0 = y.first().copied().unwrap_or(0.0);
    let mut x = Vec::with_capacity(len + 1);
    x.push(0.0);
    for v in y {
        let last = *x.last().unwrap();
        x.push(last + (v - y0));
    }
    let mut out = AllanSeries {
        taus: Vec::new(),
        adev: Vec::new(),
        ci_lo: Vec::new(),
        ci_hi: Vec::new(),
        n_samples: Vec::new(),
        edf: Vec::new(),
        flagged: Vec::new(),
    };
    for &m in factors {
        if m == 0 || len / m < 3 {
            return Err(Error::InsufficientData(format!(
                "averaging factor {m} needs at least {} values, series has {len}",
                3 * m.max(1)
            )));
        }
        let second_diff = |i: usize| x[i + 2 * m] - 2.0 * x[i + m] + x[i];
        let (var, terms) = match kind {
            AllanKind::Overlapping => {
                let terms = len + 1 - 2 * m;
                let s: f64 = (0..terms).map(|i| second_diff(i).powi(2)).sum();
                (s / (2.0 * (m * m) as f64 * terms as f64), terms)
            }
            AllanKind::Modified => {
                let terms = len + 2 - 3 * m;
                let mut inner: f64 = (0..m).map(second_diff).sum();
                let mut s = inner * inner;
                for j in 1..terms {
                    inner += second_diff(j + m - 1) - second_diff(j - 1);
                    s += inner * inner;
                }
                (s / (2.0 * (m as f64).powi(4) * terms as f64), terms)
            }
        };
        let adev = var.sqrt();
        let edf = white_fm_edf(len + 1, m);
        let (lo, hi) = variance_interval(edf);
        out.taus.push(m as f64 * series.t_cycle);
        out.adev.push(adev);
        out.ci_lo.push(adev * lo.sqrt());
        out.ci_hi.push(adev * hi.sqrt());
        out.n_samples.push(terms);
        out.edf.push(edf);
        out.flagged.push(false);
    }
    Ok(out)
}

fn check_taus(a: &AllanSeries, b: &AllanSeries) -> Result<()> {
    if a.len() != b.len()
        || a.taus
            .iter()
            .zip(&b.taus)
            .any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(y.abs()))
    {
        return Err(Error::TauMismatch);
    }
    Ok(())
}

/// Removes a reference noise contribution in quadrature:
/// `√max(total² − (scale·reference)², 0)` at every averaging time.
///
/// Averaging times where even the upper confidence bound of `total` lies
/// below the lower bound of the scaled reference are flagged.
pub fn subtract_quadrature(
    total: &AllanSeries,
    reference: &AllanSeries,
    scale: f64,
) -> Result<AllanSeries> {
    check_taus(total, reference)?;
    let mut out = total.clone();
    for i in 0..total.len() {
        let r = scale.abs() * reference.adev[i];
        let r_lo = scale.abs() * reference.ci_lo[i];
        let r_hi = scale.abs() * reference.ci_hi[i];
        let diff = total.adev[i].powi(2) - r * r;
        let adev = diff.max(0.0).sqrt();
        let lo = (total.ci_lo[i].powi(2) - r_hi * r_hi).max(0.0).sqrt();
        let hi = (total.ci_hi[i].powi(2) - r_lo * r_lo).max(0.0).sqrt();
        out.adev[i] = adev;
        out.ci_lo[i] = lo.min(adev);
        out.ci_hi[i] = hi.max(adev);
        out.flagged[i] = total.flagged[i] || total.ci_hi[i] < r_lo;
    }
    Ok(out)
}

/// Adds a reference contribution in quadrature, the inverse of [`subtract_quadrature`].
pub fn add_quadrature(
    base: &AllanSeries,
    reference: &AllanSeries,
    scale: f64,
) -> Result<AllanSeries> {
    check_taus(base, reference)?;
    let mut out = base.clone();
    for i in 0..base.len() {
        let r = scale * reference.adev[i];
        out.adev[i] = base.adev[i].hypot(r);
        out.ci_lo[i] = base.ci_lo[i]
            .hypot(scale * reference.ci_lo[i])
            .min(out.adev[i]);
        out.ci_hi[i] = base.ci_hi[i]
            .hypot(scale * reference.ci_hi[i])
            .max(out.adev[i]);
    }
    Ok(out)
}

/// White-frequency-noise coefficient `a` of `σ(T) = a/√(T/s)`, from an
/// average of `adev²·τ` weighted by the degrees of freedom at each point.
pub fn white_fm_coefficient(allan: &AllanSeries) -> Result<f64> {
    if allan.is_empty() {
        return Err(Error::InsufficientData("empty Allan series".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..allan.len() {
        num += allan.edf[i] * allan.adev[i].powi(2) * allan.taus[i];
        den += allan.edf[i];
    }
    Ok((num / den).sqrt())
}

/// Least-squares slope of `ln(adev)` against `ln(tau)`.
pub fn loglog_slope(allan: &AllanSeries) -> Result<f64> {
    let pts: Vec<(f64, f64)> = allan
        .taus
        .iter()
        .zip(&allan.adev)
        .filter(|(_, &a)| a > 0.0)
        .map(|(&t, &a)| (t.ln(), a.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(
            "slope needs two positive points".into(),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

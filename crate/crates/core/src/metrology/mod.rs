//! Estimators and statistics for spin noise, contrast, clock stability and
//! local-oscillator noise.

mod allan;
mod whiteness;

pub use allan::{
    add_quadrature, allan_deviation, allan_deviation_with, loglog_slope, octave_factors,
    subtract_quadrature, white_fm_coefficient, AllanKind, AllanSeries, FrequencySeries,
};
pub use whiteness::{detrend_moving, ljung_box, ljung_box_detrended, LjungBoxResult};

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::FRAC_PI_2;

/// Two-sided coverage of reported confidence intervals (one standard deviation).
pub const CONFIDENCE: f64 = 0.682_689_492_137_086;

/// Arithmetic mean; zero for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Chi-square quantiles bracketing a variance estimate with `df` degrees of freedom,
/// returned as multipliers `(lo, hi)` of the estimate.
pub(crate) fn variance_interval(df: f64) -> (f64, f64) {
    let Ok(chi) = ChiSquared::new(df) else {
        return (0.0, f64::INFINITY);
    };
    let tail = (1.0 - CONFIDENCE) / 2.0;
    (df / chi.inverse_cdf(1.0 - tail), df / chi.inverse_cdf(tail))
}

/// Normalized spin noise with its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiSquared {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_samples: usize,
}

/// Spin-noise ratio `var(Sz)/(N/4)` of detected samples.
pub fn xi_squared(samples: &[f64], n_atoms: usize) -> Result<XiSquared> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "xi_squared needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if n_atoms == 0 {
        return Err(Error::InvalidAtomNumber(0));
    }
    let value = sample_variance(samples) / (n_atoms as f64 / 4.0);
    let (lo, hi) = variance_interval((samples.len() - 1) as f64);
    Ok(XiSquared {
        value,
        ci_lo: value * lo,
        ci_hi: value * hi,
        n_samples: samples.len(),
    })
}

/// Contrast `C = √(2·var)/S₀` from samples taken at uniformly random Ramsey phases.
///
/// The detection variance `σ_d²·N/4` is subtracted first (pass `sigma_d2 = 0`
/// to skip this). A debiased variance that is negative within three standard
/// errors is floored at zero; beyond that the samples are inconsistent with
/// the assumed detection noise.
pub fn contrast_from_variance(samples: &[f64], n_atoms: usize, sigma_d2: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(
            "contrast needs at least 2 samples".into(),
        ));
    }
    if n_atoms == 0 {
        return Err(Error::InvalidAtomNumber(0));
    }
    let s0 = n_atoms as f64 / 2.0;
    let detection = sigma_d2 * n_atoms as f64 / 4.0;
    let var = sample_variance(samples);
    let debiased = var - detection;
    if debiased < 0.0 {
        let tolerance = 3.0 * detection * (2.0 / (samples.len() - 1) as f64).sqrt();
        if -debiased > tolerance {
            return Err(Error::EstimatorInvalid(format!(
                "sample variance {var:.4} lies below the detection floor {detection:.4}"
            )));
        }
        return Ok(0.0);
    }
    Ok((2.0 * debiased).sqrt() / s0)
}

/// Wineland parameter `ξ_W² = ξ²/C²`.
pub fn wineland(xi2: f64, contrast: f64) -> Result<f64> {
    if !(contrast > 0.0 && contrast <= 1.0) {
        return Err(invalid("contrast", format!("{contrast} is outside (0, 1]")));
    }
    Ok(xi2 / (contrast * contrast))
}

/// Quantum-noise-limited fractional stability
/// `σ = (1/(ω₀τ_R))·√(T_C/T)·√(ξ_W²/N)` after averaging time `t_avg`.
pub fn sql_stability(
    omega0: f64,
    tau_r: f64,
    t_cycle: f64,
    n_atoms: usize,
    xi_w2: f64,
    t_avg: f64,
) -> Result<f64> {
    for (name, v) in [
        ("omega0", omega0),
        ("tau_r", tau_r),
        ("t_cycle", t_cycle),
        ("xi_w2", xi_w2),
        ("t_avg", t_avg),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be positive and finite"));
        }
    }
    if n_atoms == 0 {
        return Err(Error::InvalidAtomNumber(0));
    }
    Ok((t_cycle / t_avg).sqrt() * (xi_w2 / n_atoms as f64).sqrt() / (omega0 * tau_r))
}

/// Fractional stability at 1 s implied by white LO frequency noise of
/// per-cycle spread `delta_omega`: `(Δω/ω₀)·√(T_C / 1 s)`.
pub fn lo_stability(delta_omega: f64, omega0: f64, t_cycle: f64) -> f64 {
    delta_omega / omega0 * t_cycle.sqrt()
}

/// Ramsey time at which the LO phase spread reaches π/2, `τ_LO = (π/2)/Δω`.
pub fn lo_coherence_time(delta_omega: f64) -> Result<f64> {
    if !(delta_omega > 0.0) {
        return Err(invalid("delta_omega", "must be positive"));
    }
    Ok(FRAC_PI_2 / delta_omega)
}

/// Result of [`fit_lo_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoFit {
    /// Fitted LO angular-frequency spread, rad/s.
    pub delta_omega: f64,
    /// Fixed projection-noise intercept `ξ_W²/N`.
    pub offset: f64,
    /// Data minus model, one per Ramsey time.
    pub residuals: Vec<f64>,
}

/// Fits `(Δφ)² = (Δω)²·τ_R² + ξ_W²/N` with the intercept held fixed.
///
/// Each point is weighted by the inverse square of its value, the natural
/// choice for variance estimates whose errors are proportional to their size.
pub fn fit_lo_model(
    tau_r_list: &[f64],
    phase_var_list: &[f64],
    n_atoms: usize,
    xi_w2: f64,
) -> Result<LoFit> {
    if tau_r_list.len() != phase_var_list.len() {
        return Err(invalid("phase_var_list", "length differs from tau_r_list"));
    }
    if n_atoms == 0 {
        return Err(Error::InvalidAtomNumber(0));
    }
    let mut distinct: Vec<f64> = tau_r_list.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateDesign(
            "at least two distinct Ramsey times are required".into(),
        ));
    }
    let offset = xi_w2 / n_atoms as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &v) in tau_r_list.iter().zip(phase_var_list) {
        let w = 1.0 / v.abs().max(offset).powi(2);
        let t2 = t * t;
        num += w * t2 * (v - offset);
        den += w * t2 * t2;
    }
    let d2 = (num / den).max(0.0);
    let residuals = tau_r_list
        .iter()
        .zip(phase_var_list)
        .map(|(&t, &v)| v - offset - d2 * t * t)
        .collect();
    Ok(LoFit {
        delta_omega: d2.sqrt(),
        offset,
        residuals,
    })
}

/// Least-squares fit of `Sz = offset + A·cos(φ + φ₀)` to a Ramsey fringe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// `amplitude / S₀`.
    pub contrast: f64,
}

/// Fits a sinusoidal fringe to `(phase, Sz)` pairs.
pub fn fit_fringe(phases: &[f64], sz: &[f64], n_atoms: usize) -> Result<FringeFit> {
    if phases.len() != sz.len() {
        return Err(invalid("sz", "length differs from phases"));
    }
    if phases.len() < 3 {
        return Err(Error::InsufficientData(
            "a fringe fit needs 3 points".into(),
        ));
    }
    // Normal equations for the basis (1, cos φ, sin φ).
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&p, &y) in phases.iter().zip(sz) {
        let f = [1.0, p.cos(), p.sin()];
        for i in 0..3 {
            b[i] += f[i] * y;
            for j in 0..3 {
                a[i][j] += f[i] * f[j];
            }
        }
    }
    let x = solve3(a, b)
        .ok_or_else(|| Error::DegenerateDesign("fringe phases are degenerate".into()))?;
    // c·cos φ + s·sin φ = A·cos(φ + φ₀) with A cos φ₀ = c, -A sin φ₀ = s.
    let amplitude = x[1].hypot(x[2]);
    Ok(FringeFit {
        offset: x[0],
        amplitude,
        phase: (-x[2]).atan2(x[1]),
        contrast: amplitude / (n_atoms as f64 / 2.0),
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Exponential decay `y = A·exp(-x/τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub amplitude: f64,
    pub time_constant: f64,
}

/// Fits an exponential decay by linear regression of `ln y` on `x`.
pub fn fit_exponential_decay(x: &[f64], y: &[f64]) -> Result<ExponentialFit> {
    if x.len() != y.len() {
        return Err(invalid("y", "length differs from x"));
    }
    if y.iter().any(|&v| !(v > 0.0)) {
        return Err(invalid("y", "values must be positive"));
    }
    let mut distinct = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateDesign(
            "need two distinct abscissae".into(),
        ));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(x), mean(&ly));
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::EstimatorInvalid("data do not decay".into()));
    }
    Ok(ExponentialFit {
        amplitude: (my - slope * mx).exp(),
        time_constant: -1.0 / slope,
    })
}

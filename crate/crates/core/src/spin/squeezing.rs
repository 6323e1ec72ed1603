//! Optimal twisting strength and calibration of squeezed-state preparation.

use super::{css, golden_section, DickeState};
use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// Twisted coherent state along `+x`.
fn twisted(n_atoms: usize, shear: f64) -> Result<DickeState> {
    Ok(css(n_atoms, FRAC_PI_2, 0.0)?.oat_evolve(shear, 0.0))
}

/// Metrologically relevant squeezing `N·V_min / |⟨S⟩|²` of the twisted state,
/// or `+∞` where the mean spin vanishes.
fn ramsey_squeezing(n_atoms: usize, shear: f64) -> f64 {
    let Ok(state) = twisted(n_atoms, shear) else {
        return f64::INFINITY;
    };
    let m = state.moments();
    if m.contrast < 1e-4 {
        return f64::INFINITY;
    }
    let len2 = m.mean.iter().map(|x| x * x).sum::<f64>();
    match state.min_quadrature_variance() {
        Ok(v) => n_atoms as f64 * v / len2,
        _ => f64::INFINITY,
    }
}

/// Spin-noise ratio `V_min / (N/4)` of the twisted state.
fn noise_ratio(n_atoms: usize, shear: f64) -> f64 {
    twisted(n_atoms, shear)
        .and_then(|s| s.min_quadrature_variance())
        .map(|v| v / (n_atoms as f64 / 4.0))
        .unwrap_or(f64::INFINITY)
}

fn scan_limit(n_atoms: usize) -> f64 {
    (8.0 * (n_atoms as f64).powf(-2.0 / 3.0)).min(FRAC_PI_2)
}

fn scan_minimum(n_atoms: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let points = 400;
    let q_max = scan_limit(n_atoms);
    let step = q_max / points as f64;
    let (best, _) =
        (1..=points)
            .map(|i| (i, f(i as f64 * step)))
            .fold(
                (1, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let lo = (best as f64 - 1.0) * step;
    let hi = ((best as f64 + 1.0) * step).min(q_max);
    let (a, b) = golden_section(&f, lo, hi, 1e-10);
    let q = 0.5 * (a + b);
    (q, f(q))
}

/// Twisting strength minimizing the Ramsey squeezing parameter
/// `ξ_R² = N·V_min/|⟨S⟩|²` of a twisted equatorial coherent state.
///
/// Returns `(shear, ξ_R²)`. The parameter accounts for the shortening of the
/// mean spin, so for two atoms it approaches the pair limit `1/2`.
pub fn optimal_shear(n_atoms: usize) -> Result<(f64, f64)> {
    if n_atoms < 2 {
        return Err(Error::InvalidAtomNumber(n_atoms));
    }
    Ok(scan_minimum(n_atoms, |q| ramsey_squeezing(n_atoms, q)))
}

/// Result of [`calibrate_squeezing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingCalibration {
    /// Twisting strength `χτ`.
    pub shear: f64,
    /// Probability that each atom is depolarized during preparation.
    pub depolarization: f64,
    /// Spin-noise ratio of the pure twisted state.
    pub noise_ratio_pure: f64,
    /// Contrast of the pure twisted state.
    pub contrast_pure: f64,
}

impl SqueezingCalibration {
    /// Spin-noise ratio once depolarized atoms are replaced by random spins.
    pub fn noise_ratio(&self) -> f64 {
        net_noise_ratio(self.noise_ratio_pure, self.depolarization)
    }
}

/// Spin-noise ratio of a state whose atoms are each depolarized with probability `p`.
pub fn net_noise_ratio(pure: f64, p: f64) -> f64 {
    1.0 - (1.0 - p).powi(2) * (1.0 - pure)
}

/// Solves for the twisting strength and preparation depolarization that give
/// spin-noise ratio `target_ratio` and, if requested, final Ramsey contrast
/// `target_contrast`. `contrast_factor` is the contrast retained by the rest of
/// the sequence (transfer and dark-time losses).
///
/// Without a contrast target the depolarization is zero and the weakest
/// twisting reaching `target_ratio` is returned.
pub fn calibrate_squeezing(
    n_atoms: usize,
    target_ratio: f64,
    target_contrast: Option<f64>,
    contrast_factor: f64,
) -> Result<SqueezingCalibration> {
    if n_atoms < 2 {
        return Err(Error::InvalidAtomNumber(n_atoms));
    }
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(Error::Calibration(format!(
            "target noise ratio {target_ratio} must lie in (0, 1)"
        )));
    }
    let (q_best, ratio_best) = scan_minimum(n_atoms, |q| noise_ratio(n_atoms, q));
    if ratio_best > target_ratio {
        return Err(Error::Calibration(format!(
            "{n_atoms} atoms reach at best a noise ratio of {ratio_best:.4}, above the target {target_ratio:.4}"
        )));
    }
    // Weakest twisting that reaches the target.
    let q_lo = bisect(|q| noise_ratio(n_atoms, q) - target_ratio, 0.0, q_best);
    let build = |q: f64, p: f64| {
        let state = twisted(n_atoms, q)?;
        Ok::<_, Error>(SqueezingCalibration {
            shear: q,
            depolarization: p,
            noise_ratio_pure: noise_ratio(n_atoms, q),
            contrast_pure: state.moments().contrast,
        })
    };
    let Some(c_target) = target_contrast else {
        return build(q_lo, 0.0);
    };
    let depol = |q: f64| {
        let pure = noise_ratio(n_atoms, q).min(target_ratio);
        1.0 - ((1.0 - target_ratio) / (1.0 - pure)).sqrt()
    };
    let contrast = |q: f64| {
        let c = twisted(n_atoms, q)
            .map(|s| s.moments().contrast)
            .unwrap_or(0.0);
        (1.0 - depol(q)) * c * contrast_factor
    };
    let (c_hi, c_lo) = (contrast(q_lo), contrast(q_best));
    if c_target > c_hi || c_target < c_lo {
        return Err(Error::Calibration(format!(
            "contrast {c_target} is outside the reachable range [{c_lo:.4}, {c_hi:.4}]"
        )));
    }
    let q = bisect(|q| contrast(q) - c_target, q_lo, q_best);
    build(q, depol(q))
}

/// Depolarization giving contrast `target_contrast` for an unsqueezed state.
pub fn coherent_depolarization(target_contrast: f64, contrast_factor: f64) -> Result<f64> {
    if !(target_contrast > 0.0 && target_contrast <= contrast_factor) {
        return Err(Error::Calibration(format!(
            "contrast {target_contrast} is outside the reachable range (0, {contrast_factor:.4}]"
        )));
    }
    Ok(1.0 - target_contrast / contrast_factor)
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() < 1e-13 {
            break;
        }
        if (f(mid) > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

//! Wigner small-d matrices by three-term recursion.
//!
//! A row `d^j_{m',m}(β)` is generated from both ends of the `m` range toward
//! the classical turning region `m ≈ m' cos β`, so each half of the recursion
//! runs in its growing direction. A running logarithmic scale keeps the
//! iterates finite for `j` in the thousands, where the edge values underflow.

use num_complex::Complex64;
use statrs::function::factorial::ln_binomial;
use std::f64::consts::PI;

const RESCALE_ABOVE: f64 = 1e150;
const RESCALE_BY: f64 = 1e-150;
/// Columns whose probability weight falls below this are skipped when applying a rotation.
const NEGLIGIBLE_WEIGHT: f64 = 1e-32;

/// Ladder coefficients for spin `j = (n-1)/2`, indexed by `k = m + j`.
pub(crate) struct Ladder {
    /// `sqrt((j-m)(j+m+1))`
    pub up: Vec<f64>,
    /// `sqrt((j+m)(j-m+1))`
    pub down: Vec<f64>,
}

impl Ladder {
    pub fn new(n: usize) -> Self {
        let up = (0..n)
            .map(|k| (((n - 1 - k) * (k + 1)) as f64).sqrt())
            .collect();
        let down = (0..n).map(|k| ((k * (n - k)) as f64).sqrt()).collect();
        Ladder { up, down }
    }
}

fn signed_power_log(base: f64, exp: u64) -> (f64, f64) {
    if exp == 0 {
        return (0.0, 1.0);
    }
    let sign = if base < 0.0 && exp % 2 == 1 {
        -1.0
    } else {
        1.0
    };
    (exp as f64 * base.abs().ln(), sign)
}

/// Fills `out[k] = d^j_{m',m}(β)` for `m = k - j`, where `two_j = out.len() - 1`
/// and `m' = kp - j`. Requires `sin β ≠ 0`.
pub(crate) fn small_d_row(ladder: &Ladder, kp: usize, beta: f64, out: &mut [f64]) {
    let n = out.len();
    let two_j = (n - 1) as u64;
    let j = (n - 1) as f64 / 2.0;
    let mp = kp as f64 - j;
    let (sin_b, cos_b) = beta.sin_cos();
    let inv_sin = 1.0 / sin_b;
    let (s_half, c_half) = (beta / 2.0).sin_cos();
    let p = kp as u64; // j + m'
    let q = two_j - p; // j - m'

    // d_{m', j} = sqrt(C(2j, j+m')) c^{j+m'} s^{j-m'}
    let (lc, sc) = signed_power_log(c_half, p);
    let (ls, ss) = signed_power_log(s_half, q);
    let right_log = 0.5 * ln_binomial(two_j, p) + lc + ls;
    let right_sign = sc * ss;
    // d_{m', -j} = (-1)^{j+m'} sqrt(C(2j, j-m')) c^{j-m'} s^{j+m'}
    let (lc, sc) = signed_power_log(c_half, q);
    let (ls, ss) = signed_power_log(s_half, p);
    let left_log = 0.5 * ln_binomial(two_j, q) + lc + ls;
    let left_sign = sc * ss * if p % 2 == 1 { -1.0 } else { 1.0 };

    let coeff = |k: usize| -2.0 * (mp - (k as f64 - j) * cos_b) * inv_sin;
    let mid = (mp * cos_b + j).floor().clamp(0.0, (n - 1) as f64) as usize;

    // Forward from m = -j.
    let mut log_scale = left_log;
    let mut factor = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = left_sign;
    out[0] = cur * factor;
    for k in 0..mid {
        let next = (coeff(k) * cur - ladder.down[k] * prev) / ladder.up[k];
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            prev *= RESCALE_BY;
            log_scale -= RESCALE_BY.ln();
            factor = log_scale.exp();
        }
        out[k + 1] = cur * factor;
    }

    // Backward from m = +j.
    if mid + 1 < n {
        let mut log_scale = right_log;
        let mut factor = log_scale.exp();
        let mut prev = 0.0;
        let mut cur = right_sign;
        out[n - 1] = cur * factor;
        for k in ((mid + 2)..n).rev() {
            let next = (coeff(k) * cur - ladder.up[k] * prev) / ladder.down[k];
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE_ABOVE {
                cur *= RESCALE_BY;
                prev *= RESCALE_BY;
                log_scale -= RESCALE_BY.ln();
                factor = log_scale.exp();
            }
            out[k - 1] = cur * factor;
        }
    }
}

/// Returns `exp(-i β J_y) |ψ⟩` for amplitudes indexed by `k = m + j`.
pub(crate) fn apply_y_rotation(amps: &[Complex64], beta: f64) -> Vec<Complex64> {
    let n = amps.len();
    let half_odd = (n - 1) % 2 == 1;
    let turns = (beta / PI).round();
    if (beta - turns * PI).abs() < 1e-13 {
        let r = (turns as i64).rem_euclid(4);
        // A 2π rotation multiplies half-integer spins by -1.
        let global = if half_odd && r >= 2 { -1.0 } else { 1.0 };
        return if r % 2 == 0 {
            amps.iter().map(|c| c * global).collect()
        } else {
            // d_{m',m}(π) = (-1)^{j-m} δ_{m',-m}
            (0..n)
                .map(|kp| {
                    let sign = if kp % 2 == 1 { -global } else { global };
                    amps[n - 1 - kp] * sign
                })
                .collect()
        };
    }

    let ladder = Ladder::new(n);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut row = vec![0.0; n];
    for (k, &c) in amps.iter().enumerate() {
        if c.norm_sqr() < NEGLIGIBLE_WEIGHT {
            continue;
        }
        // Column m of d is row m with the parity sign (-1)^{m'-m}.
        small_d_row(&ladder, k, beta, &mut row);
        for (kp, (o, &d)) in out.iter_mut().zip(row.iter()).enumerate() {
            let signed = if (kp + k) % 2 == 1 { -d } else { d };
            *o += c * signed;
        }
    }
    out
}

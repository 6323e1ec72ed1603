//! Imperfection channels: local-oscillator noise, ensemble decoherence,
//! optical transfer failures, double-readout detection noise and the cavity
//! readout observable.
//!
//! Atoms leave the coherent register in two ways. Depolarized atoms become
//! random spins that each add a fair `±½` coin to the measured `Sz`. Atoms
//! that fail an optical transfer are left dark and add nothing.

use crate::constants::hz_to_rad;
use crate::error::{invalid, Result};
use crate::spin::DickeState;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

/// Strengths of the stochastic imperfections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-cycle standard deviation of the LO angular frequency, rad/s.
    pub delta_omega: f64,
    /// Ensemble coherence time, s.
    pub tau_ens: f64,
    /// Excited-state lifetime, s. Recorded for reference; the dark-time
    /// decoherence uses `tau_ens`.
    pub tau_e: f64,
    /// Probability that one atom is carried through one optical π pulse.
    pub transfer_efficiency: f64,
    /// Detection variance of the averaged readout in units of `N/4`.
    pub sigma_d2: f64,
    /// Deterministic LO frequency ramp, rad/s per cycle.
    pub drift: f64,
    /// Static LO frequency offset, rad/s.
    pub offset: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            delta_omega: hz_to_rad(78.0),
            tau_ens: 0.8,
            tau_e: 0.8,
            transfer_efficiency: 0.95,
            sigma_d2: 0.125,
            drift: 0.0,
            offset: 0.0,
        }
    }
}

impl NoiseConfig {
    /// All imperfections switched off.
    pub fn noiseless() -> Self {
        NoiseConfig {
            delta_omega: 0.0,
            tau_ens: f64::INFINITY,
            tau_e: f64::INFINITY,
            transfer_efficiency: 1.0,
            sigma_d2: 0.0,
            drift: 0.0,
            offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_omega >= 0.0 && self.delta_omega.is_finite()) {
            return Err(invalid("delta_omega", "must be finite and non-negative"));
        }
        if !(self.tau_ens > 0.0) {
            return Err(invalid("tau_ens", "must be positive"));
        }
        if !(self.tau_e > 0.0) {
            return Err(invalid("tau_e", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.transfer_efficiency) {
            return Err(invalid("transfer_efficiency", "must lie in [0, 1]"));
        }
        if !(self.sigma_d2 >= 0.0 && self.sigma_d2.is_finite()) {
            return Err(invalid("sigma_d2", "must be finite and non-negative"));
        }
        if !self.drift.is_finite() || !self.offset.is_finite() {
            return Err(invalid("drift", "drift and offset must be finite"));
        }
        Ok(())
    }
}

/// Atom-cavity coupling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    /// Effective single-atom cooperativity.
    pub eta: f64,
    /// Cavity linewidth, rad/s.
    pub kappa: f64,
    /// Atomic linewidth, rad/s.
    pub gamma: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams {
            eta: 3.12,
            kappa: hz_to_rad(520e3),
            gamma: hz_to_rad(184e3),
        }
    }
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta", self.eta),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Vacuum Rabi splitting `2g = √(n_up·η·κ·Γ)` of the cavity mode, rad/s.
pub fn rabi_splitting(n_up: f64, cav: &CavityParams) -> Result<f64> {
    if !(n_up >= 0.0) {
        return Err(invalid("n_up", "must be non-negative"));
    }
    Ok((n_up * cav.eta * cav.kappa * cav.gamma).sqrt())
}

/// LO angular-frequency offset during cycle `cycle_index`, rad/s.
///
/// White Gaussian noise of standard deviation `delta_omega` on top of the
/// static offset and the linear drift.
pub fn sample_lo_frequency<R: Rng + ?Sized>(
    cfg: &NoiseConfig,
    cycle_index: u64,
    rng: &mut R,
) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    cfg.offset + cfg.drift * cycle_index as f64 + cfg.delta_omega * z
}

/// Atom-LO phase accumulated over a Ramsey time `tau_r`, radians.
pub fn sample_lo_phase<R: Rng + ?Sized>(
    cfg: &NoiseConfig,
    tau_r: f64,
    cycle_index: u64,
    rng: &mut R,
) -> Result<f64> {
    if !(tau_r > 0.0) {
        return Err(invalid("tau_r", "must be positive"));
    }
    Ok(sample_lo_frequency(cfg, cycle_index, rng) * tau_r)
}

/// Atoms of one experimental cycle: a coherent register plus bookkeeping of
/// the atoms that left it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    /// Coherent atoms, or `None` once every atom has left.
    pub register: Option<DickeState>,
    /// Atom number at the start of the cycle.
    pub n_atoms: usize,
    pub n_depolarized: usize,
    pub n_transfer_failed: usize,
}

impl Ensemble {
    pub fn new(state: DickeState) -> Self {
        Ensemble {
            n_atoms: state.n_atoms(),
            register: Some(state),
            n_depolarized: 0,
            n_transfer_failed: 0,
        }
    }

    pub fn n_coherent(&self) -> usize {
        self.register.as_ref().map_or(0, DickeState::n_atoms)
    }

    /// Depolarizes each coherent atom independently with probability `p`.
    /// Returns the number of atoms that left the register.
    pub fn depolarize<R: Rng + ?Sized>(&mut self, p: f64, rng: &mut R) -> Result<usize> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("probability", "must lie in [0, 1]"));
        }
        let n = self.n_coherent();
        if n == 0 || p == 0.0 {
            return Ok(0);
        }
        let k = Binomial::new(n as u64, p)
            .map_err(|e| invalid("probability", e.to_string()))?
            .sample(rng) as usize;
        for _ in 0..k {
            let Some(state) = self.register.take() else {
                break;
            };
            let up = rng.random::<f64>() < state.up_probability();
            self.register = state.remove_atom(up);
        }
        self.n_depolarized += k;
        Ok(k)
    }

    /// `Sz` contributed by the depolarized atoms at readout: a sum of fair `±½` coins.
    pub fn sample_background<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.n_depolarized == 0 {
            return 0.0;
        }
        let ups = Binomial::new(self.n_depolarized as u64, 0.5)
            .expect("valid binomial")
            .sample(rng) as f64;
        ups - self.n_depolarized as f64 / 2.0
    }

    /// Projective readout of the register plus the depolarized background.
    pub fn sample_sz<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let coherent = self
            .register
            .as_ref()
            .map_or(0.0, |s| s.sample_projective(rng));
        coherent + self.sample_background(rng)
    }
}

/// Dark-time decoherence: every coherent atom depolarizes with probability
/// `1 - exp(-tau/tau_ens)`.
pub fn apply_decoherence<R: Rng + ?Sized>(
    ensemble: &mut Ensemble,
    tau: f64,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> Result<()> {
    if !(tau >= 0.0) {
        return Err(invalid("tau", "must be non-negative"));
    }
    if tau == 0.0 {
        return Ok(());
    }
    let p = -(-tau / cfg.tau_ens).exp_m1();
    ensemble.depolarize(p, rng).map(|_| ())
}

/// Optical π pulse with per-atom success probability `transfer_efficiency`.
///
/// Atoms of the transferred level fail independently. The branch with `k`
/// failures is sampled exactly and the register keeps the conditional state
/// of the remaining atoms.
pub fn apply_transfer<R: Rng + ?Sized>(ensemble: &mut Ensemble, cfg: &NoiseConfig, rng: &mut R) {
    let eta = cfg.transfer_efficiency;
    if eta >= 1.0 {
        return;
    }
    let Some(state) = ensemble.register.take() else {
        return;
    };
    let n = state.n_atoms();
    let n_up = (state.sample_projective(rng) + state.spin()).round() as u64;
    let k = if eta <= 0.0 {
        n_up
    } else {
        Binomial::new(n_up, 1.0 - eta)
            .expect("valid binomial")
            .sample(rng)
    } as usize;
    ensemble.n_transfer_failed += k;
    if k == 0 {
        ensemble.register = Some(state);
        return;
    }
    if k >= n {
        return;
    }
    // c'_{n-k} ∝ c_n √C(n,k) η^{(n-k)/2}
    let amps = state.amplitudes();
    let ln_eta = eta.ln();
    let logs: Vec<f64> = (k..=n)
        .map(|up| {
            let a = amps[up].norm();
            if a == 0.0 {
                f64::NEG_INFINITY
            } else {
                a.ln() + 0.5 * ln_binomial(up as u64, k as u64) + 0.5 * (up - k) as f64 * ln_eta
            }
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let new: Vec<_> = (k..=n)
        .zip(&logs)
        .map(|(up, &l)| {
            let c = amps[up];
            let a = c.norm();
            if a == 0.0 {
                c
            } else {
                c / a * (l - max).exp()
            }
        })
        .collect();
    ensemble.register = DickeState::from_amplitudes(new).ok();
}

/// Both raw readouts of one detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub first: f64,
    pub second: f64,
}

impl Detection {
    /// Average of the two readouts, the reported `Sz`.
    pub fn averaged(&self) -> f64 {
        0.5 * (self.first + self.second)
    }
}

/// Simulates the double readout of a true `Sz`.
///
/// Each readout carries a common-mode term of variance `σ_d²·N/8` and an
/// independent term of variance `σ_d²·N/4`. The averaged readout then has
/// excess variance `σ_d²·N/4`, and `2·var(second − first)/N` returns `σ_d²`.
pub fn detect<R: Rng + ?Sized>(
    sz_true: f64,
    n_atoms: usize,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> Detection {
    if cfg.sigma_d2 == 0.0 {
        return Detection {
            first: sz_true,
            second: sz_true,
        };
    }
    let unit = cfg.sigma_d2 * n_atoms as f64 / 4.0;
    let common = Normal::new(0.0, (unit / 2.0).sqrt())
        .expect("finite")
        .sample(rng);
    let own = Normal::new(0.0, unit.sqrt()).expect("finite");
    Detection {
        first: sz_true + common + own.sample(rng),
        second: sz_true + common + own.sample(rng),
    }
}

/// Detection resolution `2·var(second − first)/N` from repeated double readouts.
pub fn resolution_estimate(detections: &[Detection], n_atoms: usize) -> Result<f64> {
    if detections.len() < 2 {
        return Err(crate::Error::InsufficientData(
            "need at least two detections".into(),
        ));
    }
    let diffs: Vec<f64> = detections.iter().map(|d| d.second - d.first).collect();
    Ok(2.0 * crate::metrology::sample_variance(&diffs) / n_atoms as f64)
}

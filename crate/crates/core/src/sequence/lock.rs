use super::engine::{PhaseSource, Simulator};
use super::{ClockConfig, PulseSequence};
use crate::error::{invalid, Error, Result};
use crate::metrology::FrequencySeries;

/// Mid-fringe phase estimator `φ̂ = asin(2·Sz/(C·N))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimator {
    pub contrast: f64,
    pub n_atoms: usize,
}

impl PhaseEstimator {
    pub fn for_simulator(sim: &Simulator) -> Result<Self> {
        let contrast = sim.expected_contrast();
        if !(contrast > 0.0) {
            return Err(invalid("contrast", "expected Ramsey contrast vanishes"));
        }
        Ok(PhaseEstimator {
            contrast,
            n_atoms: sim.config().n_atoms,
        })
    }

    /// Returns the phase estimate and whether the signal had to be clamped.
    pub fn estimate(&self, sz: f64) -> (f64, bool) {
        let x = 2.0 * sz / (self.contrast * self.n_atoms as f64);
        if x.abs() >= 1.0 {
            (x.signum() * std::f64::consts::FRAC_PI_2, true)
        } else {
            (x.asin(), false)
        }
    }
}

fn dark_time(sim: &Simulator) -> Result<f64> {
    let tau = sim.sequence().dark_time();
    if tau > 0.0 {
        Ok(tau)
    } else {
        Err(Error::InvalidSequence(
            "a clock sequence needs a dark time".into(),
        ))
    }
}

fn check_cycles(n_cycles: usize) -> Result<()> {
    if n_cycles == 0 {
        return Err(invalid("n_cycles", "must be at least 1"));
    }
    Ok(())
}

/// Closed integrating servo.
///
/// Cycle `k` sees the LO offset plus the running correction `ω_k`, and the
/// series reports `y_k = ω_k/ω₀` before the update
/// `ω_{k+1} = ω_k − gain·φ̂_k/τ_R`. Cycles whose signal left the asin range
/// are listed in `ambiguous_cycles`.
pub fn run_locked_clock(
    cfg: &ClockConfig,
    seq: &PulseSequence,
    n_cycles: usize,
    gain: f64,
) -> Result<FrequencySeries> {
    if !(gain > 0.0 && gain <= 1.0) {
        return Err(invalid("gain", "must lie in (0, 1]"));
    }
    check_cycles(n_cycles)?;
    let sim = Simulator::new(cfg, seq)?;
    let est = PhaseEstimator::for_simulator(&sim)?;
    let tau = dark_time(&sim)?;

    let mut series = FrequencySeries::new("locked", cfg.t_cycle, Vec::with_capacity(n_cycles));
    let mut correction = 0.0;
    for k in 0..n_cycles as u64 {
        let phase = (sim.lo_frequency(k) + correction) * tau;
        let rec = sim.trial(k, PhaseSource::Override(phase))?;
        let (phi, clamped) = est.estimate(rec.sz_detected);
        if clamped {
            series.ambiguous_cycles.push(k as usize);
        }
        series.values.push(correction / cfg.omega0);
        correction -= gain * phi / tau;
    }
    Ok(series)
}

/// Open-loop per-cycle frequency estimates `y_k = φ̂_k/(ω₀·τ_R)`.
pub fn run_open_loop(
    cfg: &ClockConfig,
    seq: &PulseSequence,
    n_cycles: usize,
) -> Result<FrequencySeries> {
    check_cycles(n_cycles)?;
    let sim = Simulator::new(cfg, seq)?;
    open_loop(&sim, &sim, n_cycles, "open_loop")
}

fn open_loop(
    sim: &Simulator,
    lo: &Simulator,
    n_cycles: usize,
    label: &str,
) -> Result<FrequencySeries> {
    let est = PhaseEstimator::for_simulator(sim)?;
    let tau = dark_time(sim)?;
    let omega0 = sim.config().omega0;
    let mut series =
        FrequencySeries::new(label, sim.config().t_cycle, Vec::with_capacity(n_cycles));
    for k in 0..n_cycles as u64 {
        let rec = sim.trial(k, PhaseSource::Override(lo.lo_frequency(k) * tau))?;
        let (phi, clamped) = est.estimate(rec.sz_detected);
        if clamped {
            series.ambiguous_cycles.push(k as usize);
        }
        series.values.push(phi / (omega0 * tau));
    }
    Ok(series)
}

fn pair(
    cfg_a: &ClockConfig,
    seq_a: &PulseSequence,
    cfg_b: &ClockConfig,
    seq_b: &PulseSequence,
    n_cycles: usize,
) -> Result<(Simulator, Simulator)> {
    if cfg_a.t_cycle != cfg_b.t_cycle {
        return Err(Error::CycleTimeMismatch(cfg_a.t_cycle, cfg_b.t_cycle));
    }
    check_cycles(n_cycles)?;
    Ok((Simulator::new(cfg_a, seq_a)?, Simulator::new(cfg_b, seq_b)?))
}

/// Open-loop estimates of two clocks interrogating the same LO.
///
/// Both clocks see the LO realization of `cfg_a` (seed and noise settings),
/// each with its own dark time. Atomic noise follows each configuration's
/// own streams, so identical configurations give identical outcomes and a
/// different seed on `cfg_b` gives independent atomic noise.
pub fn run_self_comparison(
    cfg_a: &ClockConfig,
    seq_a: &PulseSequence,
    cfg_b: &ClockConfig,
    seq_b: &PulseSequence,
    n_cycles: usize,
) -> Result<(FrequencySeries, FrequencySeries)> {
    let (a, b) = pair(cfg_a, seq_a, cfg_b, seq_b, n_cycles)?;
    Ok((
        open_loop(&a, &a, n_cycles, "a")?,
        open_loop(&b, &a, n_cycles, "b")?,
    ))
}

/// Two integrating servos steering independent corrections against the LO of
/// `cfg_a`, interleaved cycle by cycle. The difference of the returned series
/// removes the common LO noise.
pub fn run_interleaved_lock(
    cfg_a: &ClockConfig,
    seq_a: &PulseSequence,
    cfg_b: &ClockConfig,
    seq_b: &PulseSequence,
    n_cycles: usize,
    gain: f64,
) -> Result<(FrequencySeries, FrequencySeries)> {
    if !(gain > 0.0 && gain <= 1.0) {
        return Err(invalid("gain", "must lie in (0, 1]"));
    }
    let (a, b) = pair(cfg_a, seq_a, cfg_b, seq_b, n_cycles)?;
    let clocks = [
        (&a, PhaseEstimator::for_simulator(&a)?, dark_time(&a)?),
        (&b, PhaseEstimator::for_simulator(&b)?, dark_time(&b)?),
    ];
    let mut out = [
        FrequencySeries::new("a", cfg_a.t_cycle, Vec::with_capacity(n_cycles)),
        FrequencySeries::new("b", cfg_b.t_cycle, Vec::with_capacity(n_cycles)),
    ];
    let mut corrections = [0.0; 2];
    for k in 0..n_cycles as u64 {
        let lo = a.lo_frequency(k);
        for (i, (sim, est, tau)) in clocks.iter().enumerate() {
            let rec = sim.trial(k, PhaseSource::Override((lo + corrections[i]) * tau))?;
            let (phi, clamped) = est.estimate(rec.sz_detected);
            if clamped {
                out[i].ambiguous_cycles.push(k as usize);
            }
            out[i].values.push(corrections[i] / sim.config().omega0);
            corrections[i] -= gain * phi / tau;
        }
    }
    let [sa, sb] = out;
    Ok((sa, sb))
}

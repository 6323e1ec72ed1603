use super::{ClockConfig, Pulse, PulseSequence};
use crate::error::{Error, Result};
use crate::noise::{apply_decoherence, apply_transfer, detect, sample_lo_frequency, Ensemble};
use crate::rng::{fnv1a, stream, Domain};
use crate::spin::{css, DickeState, Vec3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Outcome of one experimental cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cycle_index: u64,
    /// Projective `Sz` before detection noise, spin units.
    pub sz_true: f64,
    /// Average of the two noisy readouts, spin units.
    pub sz_detected: f64,
    pub readouts: [f64; 2],
    /// Total atom-LO phase applied during the dark time, rad.
    pub lo_phase: f64,
    pub n_coherent: usize,
    pub n_depolarized: usize,
    pub n_transfer_failed: usize,
}

/// Source of the dark-time phase of a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSource {
    /// Phase accumulated from the sampled LO frequency.
    Lo,
    /// Fixed total phase, with the LO ignored.
    Override(f64),
    /// Sampled LO phase plus a fixed offset (a Ramsey phase step).
    LoPlusOffset(f64),
}

/// How the Ramsey phase varies across a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSchedule {
    /// LO phase only.
    Sampled,
    /// LO phase plus an offset drawn uniformly from `[0, 2π)`.
    UniformRandom,
    /// LO phase plus `2π·i/n` for trial `i` of `n`.
    Swept,
}

/// Trials of one batch in cycle order together with their phase offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSet {
    pub schedule: PhaseSchedule,
    pub offsets: Vec<f64>,
    pub trials: Vec<TrialRecord>,
}

impl TrialSet {
    pub fn sz_detected(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.sz_detected).collect()
    }
}

/// A validated configuration and sequence with the deterministic prefix of
/// the sequence evaluated once.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: ClockConfig,
    sequence: PulseSequence,
    /// Steps in execution order, see [`execution_plan`].
    plan: Vec<Pulse>,
    fingerprint: u64,
    prefix: DickeState,
    prefix_len: usize,
    /// Fixed rotation axis of every tomography step, the ensemble-mean spin
    /// direction at that point of the noiseless sequence.
    axes: Vec<Option<Vec3>>,
    expected_contrast: f64,
}

fn apply_deterministic(state: &DickeState, step: &Pulse, axis: Option<Vec3>) -> Result<DickeState> {
    Ok(match *step {
        Pulse::RfRotation { axis, angle } => state.rotate(axis, angle),
        Pulse::EchoSqueeze { shear, linear } => state.echo_squeeze(shear, linear),
        Pulse::TomographyRotation { angle } => {
            if angle == 0.0 {
                state.clone()
            } else {
                state.rotate_about(axis.unwrap_or_else(|| state.moments().mean), angle)?
            }
        }
        _ => unreachable!("stochastic step handled by the trial loop"),
    })
}

/// Reorders runs of depolarization and collective rotations so that the
/// rotations come first. Depolarization commutes with collective rotations,
/// so outcome statistics are unchanged, and rotations right after the
/// preparation join the cached deterministic prefix.
fn execution_plan(steps: &[Pulse]) -> Vec<Pulse> {
    let commutes = |p: &Pulse| {
        matches!(
            p,
            Pulse::Depolarize { .. } | Pulse::RfRotation { .. } | Pulse::TomographyRotation { .. }
        )
    };
    let mut plan = Vec::with_capacity(steps.len());
    let mut i = 0;
    while i < steps.len() {
        if !commutes(&steps[i]) {
            plan.push(steps[i]);
            i += 1;
            continue;
        }
        let end = i + steps[i..].iter().take_while(|p| commutes(p)).count();
        let run = &steps[i..end];
        plan.extend(run.iter().filter(|p| p.is_deterministic()));
        plan.extend(run.iter().filter(|p| !p.is_deterministic()));
        i = end;
    }
    plan
}

impl Simulator {
    pub fn new(config: &ClockConfig, sequence: &PulseSequence) -> Result<Self> {
        config.validate()?;
        sequence.validate()?;
        let json = serde_json::to_vec(&(config, sequence))?;
        let fingerprint = fnv1a(&json);

        let plan = execution_plan(&sequence.steps);
        let prefix_len = plan.iter().take_while(|p| p.is_deterministic()).count();
        let mut prefix = css(config.n_atoms, 0.0, 0.0)?;
        let mut axes = vec![None; plan.len()];
        let mut reference = prefix.clone();
        for (i, step) in plan.iter().enumerate() {
            if let Pulse::TomographyRotation { .. } = step {
                axes[i] = Some(reference.moments().mean);
            }
            if step.is_deterministic() {
                reference = apply_deterministic(&reference, step, axes[i])?;
            }
            if i + 1 == prefix_len {
                prefix = reference.clone();
            }
        }

        let mut contrast = prefix.moments().contrast;
        let eta = config.noise.transfer_efficiency;
        for step in &plan[prefix_len..] {
            contrast *= match *step {
                Pulse::Depolarize { probability } => 1.0 - probability,
                Pulse::OpticalPi { .. } => eta.sqrt(),
                Pulse::DarkTime { tau } => (-tau / config.noise.tau_ens).exp(),
                _ => 1.0,
            };
        }

        Ok(Simulator {
            config: config.clone(),
            sequence: sequence.clone(),
            plan,
            fingerprint,
            prefix,
            prefix_len,
            axes,
            expected_contrast: contrast,
        })
    }

    pub fn config(&self) -> &ClockConfig {
        &self.config
    }

    pub fn sequence(&self) -> &PulseSequence {
        &self.sequence
    }

    /// Hash of the serialized configuration and sequence; keys the atom streams.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// State after the leading deterministic steps of the execution order.
    pub fn prepared_state(&self) -> &DickeState {
        &self.prefix
    }

    /// Mean Ramsey contrast expected at readout: prepared-state contrast times
    /// the mean survival factor of every later stochastic step.
    pub fn expected_contrast(&self) -> f64 {
        self.expected_contrast
    }

    /// LO angular-frequency offset of `cycle`, rad/s. Depends only on the seed
    /// and the noise settings, so configurations sharing a seed share the LO.
    pub fn lo_frequency(&self, cycle: u64) -> f64 {
        let mut rng = stream(self.config.seed, Domain::LocalOscillator, 0, cycle);
        sample_lo_frequency(&self.config.noise, cycle, &mut rng)
    }

    pub fn trial(&self, cycle: u64, phase: PhaseSource) -> Result<TrialRecord> {
        let noise = &self.config.noise;
        let mut rng = stream(self.config.seed, Domain::Atoms, self.fingerprint, cycle);
        let total_dark = self.sequence.dark_time();
        let total_phase = match phase {
            PhaseSource::Override(phi) => phi,
            PhaseSource::Lo => self.lo_frequency(cycle) * total_dark,
            PhaseSource::LoPlusOffset(offset) => self.lo_frequency(cycle) * total_dark + offset,
        };

        let mut ens = Ensemble::new(self.prefix.clone());
        let mut readout = None;
        for (i, step) in self.plan.iter().enumerate().skip(self.prefix_len) {
            match *step {
                Pulse::Depolarize { probability } => {
                    ens.depolarize(probability, &mut rng)?;
                }
                Pulse::OpticalPi { .. } => apply_transfer(&mut ens, noise, &mut rng),
                Pulse::DarkTime { tau } => {
                    if let Some(reg) = ens.register.as_mut() {
                        *reg = reg.rotate_z(total_phase * tau / total_dark);
                    }
                    apply_decoherence(&mut ens, tau, noise, &mut rng)?;
                }
                Pulse::Readout => {
                    let sz = ens.sample_sz(&mut rng);
                    readout = Some((sz, detect(sz, self.config.n_atoms, noise, &mut rng)));
                }
                ref det => {
                    if let Some(reg) = ens.register.as_ref() {
                        ens.register = Some(apply_deterministic(reg, det, self.axes[i])?);
                    }
                }
            }
        }
        let (sz_true, det) =
            readout.ok_or_else(|| Error::InvalidSequence("missing readout".into()))?;
        Ok(TrialRecord {
            cycle_index: cycle,
            sz_true,
            sz_detected: det.averaged(),
            readouts: [det.first, det.second],
            lo_phase: if total_dark > 0.0 { total_phase } else { 0.0 },
            n_coherent: ens.n_coherent(),
            n_depolarized: ens.n_depolarized,
            n_transfer_failed: ens.n_transfer_failed,
        })
    }

    /// Phase offset of trial `index` under `schedule`.
    pub fn schedule_offset(&self, schedule: PhaseSchedule, index: u64, n_trials: u64) -> f64 {
        match schedule {
            PhaseSchedule::Sampled => 0.0,
            PhaseSchedule::Swept => TAU * index as f64 / n_trials as f64,
            PhaseSchedule::UniformRandom => {
                let mut rng = stream(self.config.seed, Domain::Schedule, self.fingerprint, index);
                rng.random_range(0.0..TAU)
            }
        }
    }

    /// Runs `n_trials` cycles in parallel. Results are collected by index, so
    /// the output does not depend on the thread count.
    pub fn batch(&self, n_trials: usize, schedule: PhaseSchedule) -> Result<TrialSet> {
        if n_trials == 0 {
            return Err(crate::error::invalid("n_trials", "must be at least 1"));
        }
        let n = n_trials as u64;
        let offsets: Vec<f64> = (0..n)
            .map(|i| self.schedule_offset(schedule, i, n))
            .collect();
        let trials = offsets
            .par_iter()
            .enumerate()
            .map(|(i, &off)| {
                let src = match schedule {
                    PhaseSchedule::Sampled => PhaseSource::Lo,
                    _ => PhaseSource::LoPlusOffset(off),
                };
                self.trial(i as u64, src)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrialSet {
            schedule,
            offsets,
            trials,
        })
    }
}

/// Runs a single cycle. `lo_phase_override` replaces the sampled LO phase.
pub fn run_trial(
    cfg: &ClockConfig,
    seq: &PulseSequence,
    lo_phase_override: Option<f64>,
    cycle_index: u64,
) -> Result<TrialRecord> {
    let sim = Simulator::new(cfg, seq)?;
    sim.trial(
        cycle_index,
        lo_phase_override.map_or(PhaseSource::Lo, PhaseSource::Override),
    )
}

pub fn run_batch(
    cfg: &ClockConfig,
    seq: &PulseSequence,
    n_trials: usize,
    schedule: PhaseSchedule,
) -> Result<TrialSet> {
    Simulator::new(cfg, seq)?.batch(n_trials, schedule)
}

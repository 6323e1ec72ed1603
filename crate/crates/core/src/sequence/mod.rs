//! Clock pulse sequences and their Monte Carlo execution.

mod engine;
mod lock;
mod presets;

pub use engine::{
    run_batch, run_trial, PhaseSchedule, PhaseSource, Simulator, TrialRecord, TrialSet,
};
pub use lock::{
    run_interleaved_lock, run_locked_clock, run_open_loop, run_self_comparison, PhaseEstimator,
};
pub use presets::{
    build_preset, clock_sequence, survival_sequence, tomography_sequence, Preset, Settings,
    StateKind,
};

use crate::error::{invalid, Error, Result};
use crate::noise::NoiseConfig;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Which optical transition an optical π pulse drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Ground-manifold `|↑⟩` to the clock state.
    Up,
    /// Clock state back to the ground manifold.
    Down,
}

/// One primitive of a clock sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pulse {
    /// Rotation by `angle` about the equatorial axis at azimuth `axis`.
    RfRotation { axis: f64, angle: f64 },
    /// Spin-echo twisting with total shear `χτ` and linear term `βτ`.
    EchoSqueeze { shear: f64, linear: f64 },
    /// Each coherent atom is depolarized with `probability`.
    Depolarize { probability: f64 },
    /// Optical transfer between the ground and clock manifolds.
    OpticalPi { direction: Direction },
    /// Free evolution for `tau` seconds against the LO.
    DarkTime { tau: f64 },
    /// Rotation by `angle` about the current mean-spin direction.
    TomographyRotation { angle: f64 },
    /// Projective readout followed by detection noise.
    Readout,
}

impl Pulse {
    /// Whether the primitive acts on the state without randomness.
    pub fn is_deterministic(&self) -> bool {
        matches!(
            self,
            Pulse::RfRotation { .. } | Pulse::EchoSqueeze { .. } | Pulse::TomographyRotation { .. }
        )
    }
}

/// Ordered list of primitives ending in a single readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub steps: Vec<Pulse>,
}

impl PulseSequence {
    pub fn new(steps: Vec<Pulse>) -> Result<Self> {
        let seq = PulseSequence { steps };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        let readouts = self
            .steps
            .iter()
            .filter(|p| matches!(p, Pulse::Readout))
            .count();
        if readouts != 1 || !matches!(self.steps.last(), Some(Pulse::Readout)) {
            return Err(Error::InvalidSequence(
                "exactly one readout is required and it must be the last step".into(),
            ));
        }
        for p in &self.steps {
            match *p {
                Pulse::DarkTime { tau } if !(tau > 0.0 && tau.is_finite()) => {
                    return Err(Error::InvalidSequence(format!(
                        "dark time {tau} s must be positive"
                    )));
                }
                Pulse::Depolarize { probability } if !(0.0..=1.0).contains(&probability) => {
                    return Err(Error::InvalidSequence(format!(
                        "depolarization probability {probability} is outside [0, 1]"
                    )));
                }
                Pulse::RfRotation { axis, angle } if !(axis.is_finite() && angle.is_finite()) => {
                    return Err(Error::InvalidSequence(
                        "rotation parameters must be finite".into(),
                    ));
                }
                Pulse::EchoSqueeze { shear, linear }
                    if !(shear.is_finite() && linear.is_finite()) =>
                {
                    return Err(Error::InvalidSequence(
                        "twisting parameters must be finite".into(),
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Total dark time, s.
    pub fn dark_time(&self) -> f64 {
        self.steps
            .iter()
            .map(|p| {
                if let Pulse::DarkTime { tau } = p {
                    *tau
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Copy with every dark time replaced by `tau`.
    pub fn with_dark_time(&self, tau: f64) -> Result<Self> {
        let steps = self
            .steps
            .iter()
            .map(|&p| {
                if let Pulse::DarkTime { .. } = p {
                    Pulse::DarkTime { tau }
                } else {
                    p
                }
            })
            .collect();
        PulseSequence::new(steps)
    }

    /// Copy with every tomography rotation set to `angle`.
    pub fn with_tomography_angle(&self, angle: f64) -> Self {
        let steps = self
            .steps
            .iter()
            .map(|&p| {
                if let Pulse::TomographyRotation { .. } = p {
                    Pulse::TomographyRotation { angle }
                } else {
                    p
                }
            })
            .collect();
        PulseSequence { steps }
    }

    /// Copy with a π/2 pulse about `x` inserted before the readout, turning a
    /// population measurement into a Ramsey phase measurement.
    pub fn with_ramsey_readout(&self) -> Self {
        let mut steps = self.steps.clone();
        let at = steps.len().saturating_sub(1);
        steps.insert(
            at,
            Pulse::RfRotation {
                axis: 0.0,
                angle: FRAC_PI_2,
            },
        );
        PulseSequence { steps }
    }
}

/// How the ensemble is prepared before the clock interrogation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StatePrep {
    /// Coherent spin state; `depolarization` is the per-atom probability of
    /// scattering during preparation.
    Css { depolarization: f64 },
    /// Squeezed spin state from echo twisting with total `shear`.
    Sss {
        shear: f64,
        depolarization: f64,
        axis: SqueezeAxis,
    },
}

/// Orientation of the squeezed quadrature when the interrogation starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeAxis {
    /// Along the phase direction, read out by the final Ramsey pulse.
    Phase,
    /// Along `Sz`, read out directly.
    Population,
}

/// Full description of one clock configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    pub n_atoms: usize,
    /// Cycle time `T_C`, s.
    pub t_cycle: f64,
    /// Clock angular frequency, rad/s.
    pub omega0: f64,
    /// Ramsey dark time, s.
    pub tau_r: f64,
    pub state_prep: StatePrep,
    pub noise: NoiseConfig,
    pub seed: u64,
}

impl ClockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::InvalidAtomNumber(0));
        }
        if !(self.tau_r > 0.0) {
            return Err(invalid("tau_r", "must be positive"));
        }
        if !(self.t_cycle >= self.tau_r) || !self.t_cycle.is_finite() {
            return Err(invalid("t_cycle", "must be finite and at least tau_r"));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(invalid("omega0", "must be positive"));
        }
        let p = match self.state_prep {
            StatePrep::Css { depolarization } => depolarization,
            StatePrep::Sss {
                shear,
                depolarization,
                ..
            } => {
                if !shear.is_finite() {
                    return Err(invalid("shear", "must be finite"));
                }
                depolarization
            }
        };
        if !(0.0..1.0).contains(&p) {
            return Err(invalid("prep_depolarization", "must lie in [0, 1)"));
        }
        self.noise.validate()
    }
}

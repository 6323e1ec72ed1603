use super::{ClockConfig, Direction, Pulse, PulseSequence, SqueezeAxis, StatePrep};
use crate::constants::{from_db, CLOCK_OMEGA0};
use crate::error::{invalid, Error, Result};
use crate::noise::{CavityParams, NoiseConfig};
use crate::spin::{calibrate_squeezing, coherent_depolarization, css};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

/// Kind of state prepared before the interrogation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Css,
    Sss,
}

/// User-facing parameters from which a [`ClockConfig`] is resolved.
///
/// Unset squeezing parameters are calibrated so that the pure spin-noise
/// ratio reaches `target_xi2_db` and, when `target_contrast` is set, the
/// Ramsey contrast at readout reaches it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub n_atoms: usize,
    /// s
    pub t_cycle: f64,
    /// rad/s
    pub omega0: f64,
    /// s
    pub tau_r: f64,
    pub state: StateKind,
    /// Twisting strength `χτ`; calibrated when absent.
    pub shear: Option<f64>,
    /// Per-atom preparation depolarization; calibrated when absent.
    pub prep_depolarization: Option<f64>,
    pub squeeze_axis: SqueezeAxis,
    /// Intrinsic spin-noise ratio targeted by the calibration, dB.
    pub target_xi2_db: f64,
    /// Ramsey contrast at readout targeted by the calibration.
    pub target_contrast: Option<f64>,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub cavity: CavityParams,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n_atoms: 350,
            t_cycle: 4.0,
            omega0: CLOCK_OMEGA0,
            tau_r: 0.17e-3,
            state: StateKind::Sss,
            shear: None,
            prep_depolarization: None,
            squeeze_axis: SqueezeAxis::Phase,
            target_xi2_db: -9.0,
            target_contrast: Some(0.85),
            seed: 1,
            noise: NoiseConfig::default(),
            cavity: CavityParams::default(),
        }
    }
}

impl Settings {
    /// Contrast kept by two transfers and the dark time.
    pub fn contrast_factor(&self) -> f64 {
        self.noise.transfer_efficiency * (-self.tau_r / self.noise.tau_ens).exp()
    }

    pub fn resolve(&self) -> Result<ClockConfig> {
        self.noise.validate()?;
        self.cavity.validate()?;
        let factor = self.contrast_factor();
        let state_prep = match self.state {
            StateKind::Css => {
                let depolarization = match (self.prep_depolarization, self.target_contrast) {
                    (Some(p), _) => p,
                    (None, Some(c)) => coherent_depolarization(c, factor)?,
                    (None, None) => 0.0,
                };
                StatePrep::Css { depolarization }
            }
            StateKind::Sss => {
                let target = from_db(self.target_xi2_db);
                let (shear, depolarization) = match (self.shear, self.prep_depolarization) {
                    (Some(q), p) => (q, p.unwrap_or(0.0)),
                    (None, None) => {
                        let cal = calibrate_squeezing(
                            self.n_atoms,
                            target,
                            self.target_contrast,
                            factor,
                        )?;
                        (cal.shear, cal.depolarization)
                    }
                    (None, Some(p)) => {
                        if !(0.0..1.0).contains(&p) {
                            return Err(invalid("prep_depolarization", "must lie in [0, 1)"));
                        }
                        // Pure ratio that the given depolarization degrades to the target.
                        let pure = 1.0 - (1.0 - target) / (1.0 - p).powi(2);
                        if pure <= 0.0 {
                            return Err(Error::Calibration(format!(
                                "depolarization {p} leaves no room for a {} dB target",
                                self.target_xi2_db
                            )));
                        }
                        (
                            calibrate_squeezing(self.n_atoms, pure, None, factor)?.shear,
                            p,
                        )
                    }
                };
                StatePrep::Sss {
                    shear,
                    depolarization,
                    axis: self.squeeze_axis,
                }
            }
        };
        let cfg = ClockConfig {
            n_atoms: self.n_atoms,
            t_cycle: self.t_cycle,
            omega0: self.omega0,
            tau_r: self.tau_r,
            state_prep,
            noise: self.noise,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Named experiment layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Tomography,
    SurvivalCss,
    SurvivalSssZ,
    ClockC1,
    ClockR1,
    ClockR2,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Tomography,
        Preset::SurvivalCss,
        Preset::SurvivalSssZ,
        Preset::ClockC1,
        Preset::ClockR1,
        Preset::ClockR2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Tomography => "tomography",
            Preset::SurvivalCss => "survival_css",
            Preset::SurvivalSssZ => "survival_sss_z",
            Preset::ClockC1 => "clock_c1",
            Preset::ClockR1 => "clock_r1",
            Preset::ClockR2 => "clock_r2",
        }
    }

    /// One-line description of the reproduced measurement.
    pub fn description(self) -> &'static str {
        match self {
            Preset::Tomography => "squeezed-state quadrature noise vs tomography angle",
            Preset::SurvivalCss => "coherent-state spin noise and contrast vs dark time",
            Preset::SurvivalSssZ => {
                "squeezed-state spin noise vs dark time, squeezed axis along Sz"
            }
            Preset::ClockC1 => "coherent-state clock, 0.17 ms Ramsey time",
            Preset::ClockR1 => "squeezed clock, 0.17 ms Ramsey time",
            Preset::ClockR2 => "squeezed clock, 1.16 ms Ramsey time, LO noise reference",
        }
    }

    /// Default settings of the preset.
    pub fn settings(self) -> Settings {
        let base = Settings::default();
        match self {
            Preset::Tomography => base,
            Preset::SurvivalCss => Settings {
                state: StateKind::Css,
                target_contrast: Some(0.91),
                tau_r: 0.23e-3,
                ..base
            },
            Preset::SurvivalSssZ => Settings {
                squeeze_axis: SqueezeAxis::Population,
                tau_r: 0.23e-3,
                ..base
            },
            Preset::ClockC1 => Settings {
                n_atoms: 300,
                state: StateKind::Css,
                target_contrast: Some(0.91),
                ..base
            },
            Preset::ClockR1 => Settings {
                n_atoms: 300,
                ..base
            },
            Preset::ClockR2 => Settings {
                n_atoms: 300,
                tau_r: 1.16e-3,
                ..base
            },
        }
    }

    /// Resolves `settings` and builds the preset's sequence for it.
    pub fn build(self, settings: &Settings) -> Result<(ClockConfig, PulseSequence)> {
        let mut settings = settings.clone();
        if self == Preset::ClockR2
            && settings.shear.is_none()
            && settings.prep_depolarization.is_none()
        {
            // R2 interrogates the state prepared for R1, so calibrate at R1's dark time.
            let mut r1 = settings.clone();
            r1.tau_r = Preset::ClockR1.settings().tau_r;
            if let StatePrep::Sss {
                shear,
                depolarization,
                ..
            } = r1.resolve()?.state_prep
            {
                settings.shear = Some(shear);
                settings.prep_depolarization = Some(depolarization);
            }
        }
        let cfg = settings.resolve()?;
        let seq = match self {
            Preset::Tomography => tomography_sequence(&cfg)?,
            Preset::SurvivalCss | Preset::SurvivalSssZ => survival_sequence(&cfg)?,
            _ => clock_sequence(&cfg)?,
        };
        Ok((cfg, seq))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Configuration and sequence of a named preset with its default settings.
pub fn build_preset(name: &str) -> Result<(ClockConfig, PulseSequence)> {
    let preset: Preset = name.parse()?;
    preset.build(&preset.settings())
}

/// Ground-manifold preparation starting from all atoms up: a π/2 pulse to
/// `+x`, echo twisting, orientation of the squeezed quadrature, and
/// preparation depolarization.
fn preparation(cfg: &ClockConfig, orient: bool) -> Result<Vec<Pulse>> {
    let mut steps = vec![Pulse::RfRotation {
        axis: FRAC_PI_2,
        angle: FRAC_PI_2,
    }];
    let p = match cfg.state_prep {
        StatePrep::Css { depolarization } => depolarization,
        StatePrep::Sss {
            shear,
            depolarization,
            axis,
        } => {
            steps.push(Pulse::EchoSqueeze { shear, linear: 0.0 });
            if orient && shear != 0.0 {
                let state = css(cfg.n_atoms, 0.0, 0.0)?
                    .rotate(FRAC_PI_2, FRAC_PI_2)
                    .echo_squeeze(shear, 0.0);
                let (to_z, _) = state.tomography_minimum()?;
                let angle = match axis {
                    SqueezeAxis::Population => to_z,
                    SqueezeAxis::Phase => to_z - FRAC_PI_2,
                };
                steps.push(Pulse::RfRotation { axis: 0.0, angle });
            }
            depolarization
        }
    };
    if p > 0.0 {
        steps.push(Pulse::Depolarize { probability: p });
    }
    Ok(steps)
}

fn interrogation(cfg: &ClockConfig) -> [Pulse; 3] {
    [
        Pulse::OpticalPi {
            direction: Direction::Up,
        },
        Pulse::DarkTime { tau: cfg.tau_r },
        Pulse::OpticalPi {
            direction: Direction::Down,
        },
    ]
}

/// Preparation, then a tomography rotation about the mean spin and readout.
/// The rotation angle is the sweep hook set per measurement point.
pub fn tomography_sequence(cfg: &ClockConfig) -> Result<PulseSequence> {
    let mut steps = preparation(cfg, false)?;
    steps.push(Pulse::TomographyRotation { angle: 0.0 });
    steps.push(Pulse::Readout);
    PulseSequence::new(steps)
}

/// Interrogation with direct `Sz` readout, no final Ramsey pulse.
pub fn survival_sequence(cfg: &ClockConfig) -> Result<PulseSequence> {
    let mut steps = preparation(cfg, true)?;
    steps.extend(interrogation(cfg));
    steps.push(Pulse::Readout);
    PulseSequence::new(steps)
}

/// Ramsey clock: the final π/2 pulse maps the phase quadrature onto `Sz`,
/// giving `Sz = C·S₀·sin φ` around the mid-fringe operating point.
pub fn clock_sequence(cfg: &ClockConfig) -> Result<PulseSequence> {
    let mut steps = preparation(cfg, true)?;
    steps.extend(interrogation(cfg));
    steps.push(Pulse::RfRotation {
        axis: 0.0,
        angle: FRAC_PI_2,
    });
    steps.push(Pulse::Readout);
    PulseSequence::new(steps)
}

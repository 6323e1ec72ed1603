//! TOML configuration files.
//!
//! Three optional sections, every key optional:
//!
//! ```toml
//! [clock]
//! n_atoms = 350               # atoms
//! t_cycle = "4 s"             # time
//! omega0 = 3.2589e15          # angular frequency, rad/s
//! tau_r = "0.17 ms"           # time
//! state = "sss"               # "css" or "sss"
//! shear = 0.021               # χτ, calibrated when absent
//! prep_depolarization = 0.1   # probability, calibrated when absent
//! squeeze_axis = "phase"      # "phase" or "population"
//! target_xi2_db = -9.0        # dB
//! target_contrast = 0.85      # Ramsey contrast at readout
//! seed = 1
//!
//! [noise]
//! delta_omega = "78 Hz"       # angular frequency
//! tau_ens = "0.8 s"           # time
//! tau_e = "0.8 s"             # time
//! transfer_efficiency = 0.95
//! sigma_d2 = 0.125            # detection variance, units of N/4
//! drift = "0 Hz"              # angular frequency change per cycle
//! offset = "0 Hz"             # static angular frequency offset
//!
//! [cavity]
//! eta = 3.12                  # single-atom cooperativity
//! kappa = "520 kHz"           # angular frequency
//! gamma = "184 kHz"           # angular frequency
//! ```
//!
//! Plain numbers are SI (s, rad/s). Strings carry a unit: `s`, `ms`, `us`,
//! `ns` for times; `Hz`, `kHz`, `MHz` (converted to angular frequency with a
//! factor 2π) or `rad/s` for angular frequencies. Unknown keys are errors.

use crate::error::{Error, Result};
use crate::sequence::{Settings, SqueezeAxis, StateKind};
use serde::Deserialize;
use std::f64::consts::TAU;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Time,
    AngularFrequency,
}

/// A physical value: a bare SI number or a string with a unit.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    fn resolve(&self, key: &str, dim: Dimension) -> Result<f64> {
        let text = match self {
            Quantity::Number(v) => return Ok(*v),
            Quantity::Text(t) => t.trim(),
        };
        let split = text
            .find(|c: char| c.is_ascii_alphabetic() || c == 'µ')
            .ok_or_else(|| Error::Config(format!("`{key}`: missing unit in \"{text}\"")))?;
        let (num, unit) = text.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("`{key}`: cannot parse number in \"{text}\"")))?;
        let (factor, unit_dim) = match unit.trim() {
            "s" => (1.0, Dimension::Time),
            "ms" => (1e-3, Dimension::Time),
            "us" | "µs" => (1e-6, Dimension::Time),
            "ns" => (1e-9, Dimension::Time),
            "Hz" => (TAU, Dimension::AngularFrequency),
            "kHz" => (TAU * 1e3, Dimension::AngularFrequency),
            "MHz" => (TAU * 1e6, Dimension::AngularFrequency),
            "rad/s" => (1.0, Dimension::AngularFrequency),
            other => return Err(Error::Config(format!("`{key}`: unknown unit \"{other}\""))),
        };
        if unit_dim != dim {
            let expected = match dim {
                Dimension::Time => "a time",
                Dimension::AngularFrequency => "an angular frequency",
            };
            return Err(Error::Config(format!(
                "unit mismatch for `{key}`: expected {expected}, got \"{}\"",
                unit.trim()
            )));
        }
        Ok(value * factor)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClockSection {
    n_atoms: Option<usize>,
    t_cycle: Option<Quantity>,
    omega0: Option<Quantity>,
    tau_r: Option<Quantity>,
    state: Option<StateKind>,
    shear: Option<f64>,
    prep_depolarization: Option<f64>,
    squeeze_axis: Option<SqueezeAxis>,
    target_xi2_db: Option<f64>,
    target_contrast: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    delta_omega: Option<Quantity>,
    tau_ens: Option<Quantity>,
    tau_e: Option<Quantity>,
    transfer_efficiency: Option<f64>,
    sigma_d2: Option<f64>,
    drift: Option<Quantity>,
    offset: Option<Quantity>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CavitySection {
    eta: Option<f64>,
    kappa: Option<Quantity>,
    gamma: Option<Quantity>,
}

/// Parsed configuration file: a set of overrides on top of preset defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    clock: ClockSection,
    #[serde(default)]
    noise: NoiseSection,
    #[serde(default)]
    cavity: CavitySection,
}

fn set(target: &mut f64, q: &Option<Quantity>, key: &str, dim: Dimension) -> Result<()> {
    if let Some(q) = q {
        *target = q.resolve(key, dim)?;
    }
    Ok(())
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies the overrides to `base` and validates the result.
    pub fn apply(&self, base: &Settings) -> Result<Settings> {
        use Dimension::*;
        let mut s = base.clone();
        let c = &self.clock;
        if let Some(n) = c.n_atoms {
            s.n_atoms = n;
        }
        set(&mut s.t_cycle, &c.t_cycle, "t_cycle", Time)?;
        set(&mut s.omega0, &c.omega0, "omega0", AngularFrequency)?;
        set(&mut s.tau_r, &c.tau_r, "tau_r", Time)?;
        if let Some(v) = c.state {
            s.state = v;
        }
        if c.shear.is_some() {
            s.shear = c.shear;
        }
        if c.prep_depolarization.is_some() {
            s.prep_depolarization = c.prep_depolarization;
        }
        if let Some(v) = c.squeeze_axis {
            s.squeeze_axis = v;
        }
        if let Some(v) = c.target_xi2_db {
            s.target_xi2_db = v;
        }
        if c.target_contrast.is_some() {
            s.target_contrast = c.target_contrast;
        }
        if let Some(v) = c.seed {
            s.seed = v;
        }

        let n = &self.noise;
        set(
            &mut s.noise.delta_omega,
            &n.delta_omega,
            "delta_omega",
            AngularFrequency,
        )?;
        set(&mut s.noise.tau_ens, &n.tau_ens, "tau_ens", Time)?;
        set(&mut s.noise.tau_e, &n.tau_e, "tau_e", Time)?;
        if let Some(v) = n.transfer_efficiency {
            s.noise.transfer_efficiency = v;
        }
        if let Some(v) = n.sigma_d2 {
            s.noise.sigma_d2 = v;
        }
        set(&mut s.noise.drift, &n.drift, "drift", AngularFrequency)?;
        set(&mut s.noise.offset, &n.offset, "offset", AngularFrequency)?;

        let k = &self.cavity;
        if let Some(v) = k.eta {
            s.cavity.eta = v;
        }
        set(&mut s.cavity.kappa, &k.kappa, "kappa", AngularFrequency)?;
        set(&mut s.cavity.gamma, &k.gamma, "gamma", AngularFrequency)?;

        s.noise.validate()?;
        s.cavity.validate()?;
        Ok(s)
    }
}

/// Reads a configuration file and applies it to the global defaults.
pub fn parse_config(path: &Path) -> Result<Settings> {
    ConfigFile::load(path)?.apply(&Settings::default())
}

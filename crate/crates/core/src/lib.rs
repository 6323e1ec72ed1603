//! Simulation and analysis toolkit for an optical lattice clock operated with
//! spin-squeezed atomic ensembles.
//!
//! The crate is organized bottom-up:
//!
//! * [`spin`] holds exact collective-spin states and their dynamics,
//! * [`noise`] the imperfection channels acting on an ensemble,
//! * [`sequence`] clock pulse sequences, presets and Monte Carlo drivers,
//! * [`metrology`] estimators, Allan statistics and model fits,
//! * [`io`] configuration files, run orchestration and table output.

// Checks like `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod io;
pub mod metrology;
pub mod noise;
pub mod rng;
pub mod sequence;
pub mod spin;

pub use error::{Error, Result};
pub use metrology::{AllanSeries, FrequencySeries, LoFit};
pub use noise::{CavityParams, Ensemble, NoiseConfig};
pub use sequence::{ClockConfig, PulseSequence, TrialRecord, TrialSet};
pub use spin::{css, DickeState, GaussianSpin, SpinMoments};

//! Physical constants and the default experimental parameters.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wavelength of the ytterbium clock transition, m.
pub const CLOCK_WAVELENGTH: f64 = 578.0e-9;

/// Angular frequency of the clock transition, 2πc/λ in rad/s.
pub const CLOCK_OMEGA0: f64 = 2.0 * PI * SPEED_OF_LIGHT / CLOCK_WAVELENGTH;

/// Converts a cyclic frequency in Hz to an angular frequency in rad/s.
pub fn hz_to_rad(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Variance ratio expressed in decibels.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega0_value() {
        assert!((CLOCK_OMEGA0 - 3.258_912_746e15).abs() / CLOCK_OMEGA0 < 1e-7);
    }

    #[test]
    fn db_round_trip() {
        assert!((to_db(from_db(-4.4)) + 4.4).abs() < 1e-12);
        assert!((to_db(0.5) + 3.0103).abs() < 1e-4);
    }
}

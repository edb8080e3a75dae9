//! Unit system for rates and times.
//!
//! All internal computations use the natural decay rate of the 780 nm
//! transition of 87Rb, `GAMMA_780`, as the frequency unit: rates are
//! dimensionless multiples of `GAMMA_780`, times are multiples of
//! `1 / GAMMA_780`. SI inputs (rad/s and seconds) are converted on load.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Natural linewidth of the 87Rb D2 line, 2 pi x 6.063 MHz, in rad/s.
pub const GAMMA_780_RAD_PER_S: f64 = 2.0 * PI * 6.063e6;

/// Declared unit system of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// Rates in units of `GAMMA_780`, times in units of `1 / GAMMA_780`.
    #[default]
    Gamma,
    /// Rates in rad/s, times in seconds.
    Si,
}

impl UnitSystem {
    /// Convert an angular-frequency rate into Gamma units.
    pub fn rate_to_gamma(self, rate: f64) -> f64 {
        match self {
            UnitSystem::Gamma => rate,
            UnitSystem::Si => rate / GAMMA_780_RAD_PER_S,
        }
    }

    /// Convert a squared angular frequency (e.g. `4 g_p^2 N`) into Gamma units.
    pub fn rate_sq_to_gamma(self, rate_sq: f64) -> f64 {
        match self {
            UnitSystem::Gamma => rate_sq,
            UnitSystem::Si => rate_sq / (GAMMA_780_RAD_PER_S * GAMMA_780_RAD_PER_S),
        }
    }

    /// Convert a time into Gamma units.
    pub fn time_to_gamma(self, time: f64) -> f64 {
        match self {
            UnitSystem::Gamma => time,
            UnitSystem::Si => time * GAMMA_780_RAD_PER_S,
        }
    }

    /// Parse from the `EITSIM_UNITS` environment variable convention.
    pub fn from_label(label: &str) -> Option<Self> {
        match label.to_ascii_lowercase().as_str() {
            "gamma" => Some(UnitSystem::Gamma),
            "si" => Some(UnitSystem::Si),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn si_round_trip() {
        let rate_si = 2.0 * PI * 6.063e6; // exactly one Gamma
        assert!((UnitSystem::Si.rate_to_gamma(rate_si) - 1.0).abs() < 1e-12);
        assert!((UnitSystem::Si.time_to_gamma(1.0 / rate_si) - 1.0).abs() < 1e-12);
        assert_eq!(UnitSystem::Gamma.rate_to_gamma(3.5), 3.5);
    }

    #[test]
    fn label_parsing() {
        assert_eq!(UnitSystem::from_label("gamma"), Some(UnitSystem::Gamma));
        assert_eq!(UnitSystem::from_label("SI"), Some(UnitSystem::Si));
        assert_eq!(UnitSystem::from_label("hz"), None);
    }
}

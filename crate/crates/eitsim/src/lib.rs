//! Simulation of Lambda-type EIT quantum memories as analytically derived
//! lossy channels.
//!
//! The library covers the full chain from the coupling-field schedule to a
//! Bell test on the retrieved light:
//!
//! - [`polariton`]: dark-state-polariton attenuation factor and storage
//!   efficiency for one memory under an arbitrary coupling schedule, with an
//!   ODE integration of the polariton equation of motion as cross-check.
//! - [`fockspace`]: dense truncated multimode Fock registers, used as the
//!   brute-force oracle layer (single-photon wavepackets, coherent overlaps,
//!   displacement operators, the vacuum-projector expansion).
//! - [`memorychannel`]: storage and retrieval of N-qubit single-rail
//!   registers as quantum channels, with Uhlmann fidelity.
//! - [`bell`]: Clauser-Horne combination of the retrieved two-memory state
//!   under displaced-vacuum POVMs, its closed form, and the critical
//!   efficiency threshold.
//! - [`validate`]: cross-route validation suites behind the CLI `validate`
//!   experiment and the acceptance tests.
//!
//! Rates are expressed in units of the 87Rb D2 linewidth (`units::GAMMA_780_RAD_PER_S`),
//! times in its inverse; [`units::UnitSystem`] converts SI inputs.

pub mod bell;
pub mod error;
pub mod fockspace;
pub mod memorychannel;
pub mod numerics;
pub mod polariton;
pub mod units;
pub mod validate;

pub use error::{Error, Result};

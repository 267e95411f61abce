//! Wave transport on open metric graphs with Neumann vertex conditions.
//!
//! The crate covers graph construction ([`graph`], [`bonds`]), the two-port
//! scattering matrix and closed-graph spectrum ([`scattering`],
//! [`spectrum`], [`resonance`]), closed-form and alternative-formulation
//! cross-checks ([`oracles`]), level statistics ([`stats`]), pulse
//! propagation with path attribution ([`timedomain`]) and file formats
//! ([`io`]).

pub mod bonds;
pub mod graph;
pub mod io;
pub mod oracles;
pub mod resonance;
pub mod scattering;
pub mod spectrum;
pub mod stats;
pub mod timedomain;

pub use num_complex::Complex64;

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Absorption coefficient of the coaxial cables used for the reference
/// networks, m^(-1/2).
pub const CABLE_BETA: f64 = 0.009;

/// Frequency in Hz for wave number `k` in rad/m.
pub fn frequency_from_wavenumber(k: f64) -> f64 {
    k * SPEED_OF_LIGHT / std::f64::consts::TAU
}

/// Wave number in rad/m for frequency `nu` in Hz.
pub fn wavenumber_from_frequency(nu: f64) -> f64 {
    nu * std::f64::consts::TAU / SPEED_OF_LIGHT
}

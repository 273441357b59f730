//! Zitterbewegung of neutral relativistic spin-½ particles propagating along
//! static longitudinal magnetic/electric fields.
//!
//! The crate computes the spin-split Dirac spectrum and the characteristic
//! precession, Zitterbewegung and beat frequencies in closed form, evolves
//! wavepackets with a brute-force oracle next to the closed-form expectation
//! series, and checks the predicted tones by spectral analysis of the evolved
//! expectation values.
//!
//! Internally everything is in natural units (ħ = c = m = 1); see
//! [`config::ParticleConfig::scales`] for SI conversion.

pub mod algebra;
pub mod config;
pub mod dynamics;
pub mod io;
pub mod spectral;
pub mod spectrum;
pub mod verify;
pub mod wavepacket;

pub use algebra::{Branch, DiracOperatorSet, EigenSystem, Label, Spin};
pub use config::{ParticleConfig, UnitSystem};
pub use dynamics::{Observable, TimeGrid, TimeSeries};
pub use spectral::{PeakSet, Spectrum, Window};
pub use spectrum::{FrequencySet, Tone};
pub use wavepacket::Wavepacket;

//! Particle and field parameters.
//!
//! Everything downstream works in natural units (ħ = c = m = 1): momenta in
//! `mc`, energies in `mc²`, angular frequencies in `mc²/ħ`, times in `ħ/mc²`
//! and lengths in `ħ/mc`. A [`ParticleConfig`] built in SI units keeps its SI
//! inputs and exposes [`Scales`] for converting at the boundary.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// CODATA 2018 exact values.
pub const SPEED_OF_LIGHT_SI: f64 = 299_792_458.0;
pub const HBAR_SI: f64 = 1.054_571_817e-34;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("spin splitting |Δ| = {ratio} mc² must stay below mc² (field too strong)")]
    FieldTooStrong { ratio: f64 },
    #[error("stored Δ = {stored} disagrees with d·E − μ·B = {derived}")]
    InconsistentDelta { stored: f64, derived: f64 },
    #[error("unknown unit system '{0}' (expected natural or si)")]
    UnknownUnits(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// ħ = c = m = 1.
    #[default]
    Natural,
    Si,
}

impl fmt::Display for UnitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitSystem::Natural => f.write_str("natural"),
            UnitSystem::Si => f.write_str("si"),
        }
    }
}

impl FromStr for UnitSystem {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "natural" => Ok(UnitSystem::Natural),
            "si" => Ok(UnitSystem::Si),
            other => Err(ConfigError::UnknownUnits(other.to_string())),
        }
    }
}

/// Physical constants, dipole moments, applied longitudinal fields and the
/// resulting spin splitting `Δ = d·E − μ·B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub mass: f64,
    pub c: f64,
    pub hbar: f64,
    /// Magnetic dipole moment.
    pub mu: f64,
    /// Electric dipole moment.
    pub d: f64,
    pub b_field: f64,
    pub e_field: f64,
    /// Spin splitting energy.
    pub delta: f64,
    pub units: UnitSystem,
}

/// Natural-to-configured unit factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub energy: f64,
    pub momentum: f64,
    pub time: f64,
    pub length: f64,
    pub angular_frequency: f64,
    pub action: f64,
}

impl ParticleConfig {
    /// Natural units with the splitting given directly in units of `mc²`.
    pub fn natural(delta: f64) -> Result<Self, ConfigError> {
        let cfg = ParticleConfig {
            mass: 1.0,
            c: 1.0,
            hbar: 1.0,
            mu: 0.0,
            d: 0.0,
            b_field: 0.0,
            e_field: 0.0,
            delta,
            units: UnitSystem::Natural,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Splitting derived from dipole moments and fields.
    pub fn from_dipoles(
        units: UnitSystem,
        mass: f64,
        mu: f64,
        d: f64,
        b_field: f64,
        e_field: f64,
    ) -> Result<Self, ConfigError> {
        let (c, hbar) = match units {
            UnitSystem::Natural => (1.0, 1.0),
            UnitSystem::Si => (SPEED_OF_LIGHT_SI, HBAR_SI),
        };
        let cfg = ParticleConfig {
            mass,
            c,
            hbar,
            mu,
            d,
            b_field,
            e_field,
            delta: d * e_field - mu * b_field,
            units,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Splitting given directly as an energy in the chosen unit system.
    pub fn with_delta(units: UnitSystem, mass: f64, delta: f64) -> Result<Self, ConfigError> {
        let mut cfg = Self::from_dipoles(units, mass, 0.0, 0.0, 0.0, 0.0)?;
        cfg.delta = delta;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [("mass", self.mass), ("c", self.c), ("hbar", self.hbar)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::NonPositive { name, value });
            }
        }
        for (name, value) in [
            ("mu", self.mu),
            ("d", self.d),
            ("b_field", self.b_field),
            ("e_field", self.e_field),
            ("delta", self.delta),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::NotFinite { name, value });
            }
        }
        let has_dipoles = self.mu != 0.0 || self.d != 0.0;
        let has_fields = self.b_field != 0.0 || self.e_field != 0.0;
        if has_dipoles && has_fields {
            let derived = self.d * self.e_field - self.mu * self.b_field;
            let scale = (self.d * self.e_field)
                .abs()
                .max((self.mu * self.b_field).abs())
                .max(f64::MIN_POSITIVE);
            if (derived - self.delta).abs() > 1e-12 * scale {
                return Err(ConfigError::InconsistentDelta {
                    stored: self.delta,
                    derived,
                });
            }
        }
        let ratio = self.delta_natural();
        if ratio.abs() >= 1.0 {
            return Err(ConfigError::FieldTooStrong { ratio });
        }
        Ok(())
    }

    pub fn rest_energy(&self) -> f64 {
        self.mass * self.c * self.c
    }

    /// Δ in units of `mc²`.
    pub fn delta_natural(&self) -> f64 {
        self.delta / self.rest_energy()
    }

    pub fn scales(&self) -> Scales {
        let energy = self.rest_energy();
        Scales {
            energy,
            momentum: self.mass * self.c,
            time: self.hbar / energy,
            length: self.hbar / (self.mass * self.c),
            angular_frequency: energy / self.hbar,
            action: self.hbar,
        }
    }

    /// Same particle and units, different splitting (given in `mc²`).
    pub fn with_delta_natural(&self, delta: f64) -> Result<Self, ConfigError> {
        let mut cfg = *self;
        cfg.delta = delta * self.rest_energy();
        cfg.mu = 0.0;
        cfg.d = 0.0;
        cfg.b_field = 0.0;
        cfg.e_field = 0.0;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_config_carries_delta() {
        let cfg = ParticleConfig::natural(0.4).unwrap();
        assert_eq!(cfg.delta_natural(), 0.4);
        assert_eq!(cfg.scales().angular_frequency, 1.0);
    }

    #[test]
    fn rejects_strong_fields() {
        assert!(matches!(
            ParticleConfig::natural(1.0),
            Err(ConfigError::FieldTooStrong { .. })
        ));
        assert!(ParticleConfig::natural(-1.2).is_err());
        assert!(ParticleConfig::natural(0.999).is_ok());
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(ParticleConfig::with_delta(UnitSystem::Natural, 0.0, 0.1).is_err());
        assert!(ParticleConfig::with_delta(UnitSystem::Natural, f64::NAN, 0.1).is_err());
        assert!(ParticleConfig::natural(f64::INFINITY).is_err());
    }

    #[test]
    fn dipole_splitting() {
        let cfg = ParticleConfig::from_dipoles(UnitSystem::Natural, 1.0, -0.1, 0.2, 1.0, 1.0)
            .unwrap();
        assert!((cfg.delta - 0.3).abs() < 1e-15);
        let mut tampered = cfg;
        tampered.delta = 0.5;
        assert!(matches!(
            tampered.validate(),
            Err(ConfigError::InconsistentDelta { .. })
        ));
    }

    #[test]
    fn si_neutron_scales() {
        // neutron mass and moment in a 1 T field
        let cfg = ParticleConfig::from_dipoles(
            UnitSystem::Si,
            1.674_927_498e-27,
            -9.662_365_1e-27,
            0.0,
            1.0,
            0.0,
        )
        .unwrap();
        let s = cfg.scales();
        assert!((s.energy - 1.505_349_762e-10).abs() / s.energy < 1e-8);
        assert!(cfg.delta_natural() > 0.0 && cfg.delta_natural() < 1e-15);
        assert!((s.time * s.angular_frequency - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parses_units() {
        assert_eq!("SI".parse::<UnitSystem>().unwrap(), UnitSystem::Si);
        assert!("cgs".parse::<UnitSystem>().is_err());
    }
}

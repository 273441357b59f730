//! Closed-form frequency algebra: free-particle ZB, the four transition
//! frequencies of the split spectrum, beat frequencies, the forbidden
//! frequency `2mc²/ħ` and velocity sweeps. All values in natural units.

use crate::config::{ConfigError, ParticleConfig};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const FORBIDDEN_FREQUENCY: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("velocity {0} c is not below the speed of light")]
    Superluminal(f64),
}

/// A characteristic transition frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tone {
    #[serde(rename = "omega_L")]
    Larmor,
    #[serde(rename = "omega_zb1")]
    Zb1,
    #[serde(rename = "omega_zb2")]
    Zb2,
    #[serde(rename = "omega_zb3")]
    Zb3,
}

impl Tone {
    pub const ALL: [Tone; 4] = [Tone::Larmor, Tone::Zb1, Tone::Zb2, Tone::Zb3];

    pub fn name(self) -> &'static str {
        match self {
            Tone::Larmor => "omega_L",
            Tone::Zb1 => "omega_zb1",
            Tone::Zb2 => "omega_zb2",
            Tone::Zb3 => "omega_zb3",
        }
    }
}

impl fmt::Display for Tone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencySet {
    pub p: f64,
    pub delta: f64,
    #[serde(rename = "omega_L")]
    pub omega_l: f64,
    pub omega_zb1: f64,
    pub omega_zb2: f64,
    pub omega_zb3: f64,
    pub omega_sb: f64,
    pub omega_ob1: f64,
    pub omega_ob2: f64,
    pub omega_forbidden: f64,
}

impl FrequencySet {
    pub fn tone(&self, tone: Tone) -> f64 {
        match tone {
            Tone::Larmor => self.omega_l,
            Tone::Zb1 => self.omega_zb1,
            Tone::Zb2 => self.omega_zb2,
            Tone::Zb3 => self.omega_zb3,
        }
    }

    /// Every angular frequency multiplied by `factor` (momentum and Δ untouched).
    pub fn scaled(&self, factor: f64) -> FrequencySet {
        FrequencySet {
            omega_l: self.omega_l * factor,
            omega_zb1: self.omega_zb1 * factor,
            omega_zb2: self.omega_zb2 * factor,
            omega_zb3: self.omega_zb3 * factor,
            omega_sb: self.omega_sb * factor,
            omega_ob1: self.omega_ob1 * factor,
            omega_ob2: self.omega_ob2 * factor,
            omega_forbidden: self.omega_forbidden * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicsPoint {
    /// Velocity in units of c.
    pub v: f64,
    pub gamma: f64,
    /// Momentum in units of mc.
    pub p: f64,
}

pub fn free_zb_frequency(p: f64) -> f64 {
    2.0 * p.hypot(1.0)
}

/// Motional blue shift of the free ZB frequency relative to the rest frame.
pub fn blue_shift(p: f64) -> f64 {
    // 2(E − 1) = 2p²/(E + 1), free of cancellation at small p
    let e = p.hypot(1.0);
    2.0 * p * p / (e + 1.0)
}

/// Positive-branch energies `(E↑, E↓)` at momentum `p`.
pub fn split_energies(p: f64, delta: f64) -> (f64, f64) {
    (p.hypot(1.0 + delta), p.hypot(1.0 - delta))
}

pub fn frequency_set(p: f64, cfg: &ParticleConfig) -> Result<FrequencySet, SpectrumError> {
    cfg.validate()?;
    let delta = cfg.delta_natural();
    let (e_up, e_down) = split_energies(p, delta);
    // E↑ − E↓ = ((1+Δ)² − (1−Δ)²)/(E↑ + E↓)
    let omega_l = 4.0 * delta / (e_up + e_down);
    let omega_zb1 = 2.0 * e_up;
    let omega_zb2 = e_up + e_down;
    let omega_zb3 = 2.0 * e_down;
    Ok(FrequencySet {
        p,
        delta,
        omega_l,
        omega_zb1,
        omega_zb2,
        omega_zb3,
        omega_sb: omega_zb2 - omega_l,
        omega_ob1: omega_zb1 - omega_zb3,
        omega_ob2: omega_zb2 - omega_l,
        omega_forbidden: FORBIDDEN_FREQUENCY,
    })
}

/// `(ω₁ᶻᵇ(0), ω₃ᶻᵇ(0)) = (2 + 2Δ, 2 − 2Δ)`.
pub fn rest_frame_longitudinal(cfg: &ParticleConfig) -> Result<(f64, f64), SpectrumError> {
    cfg.validate()?;
    let delta = cfg.delta_natural();
    Ok((2.0 + 2.0 * delta, 2.0 - 2.0 * delta))
}

pub fn momentum_from_velocity(v: f64) -> Result<KinematicsPoint, SpectrumError> {
    if !v.is_finite() || v.abs() >= 1.0 {
        return Err(SpectrumError::Superluminal(v));
    }
    let gamma = 1.0 / ((1.0 - v) * (1.0 + v)).sqrt();
    Ok(KinematicsPoint { v, gamma, p: gamma * v })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub v: f64,
    pub p: f64,
    pub free_zb: f64,
    pub freqs: FrequencySet,
}

/// `v/c ∈ [0, 0.99]` in 100 points.
pub fn default_velocity_grid() -> Vec<f64> {
    (0..100).map(|k| 0.99 * k as f64 / 99.0).collect()
}

pub fn sweep(v_grid: &[f64], cfg: &ParticleConfig) -> Result<Vec<SweepRow>, SpectrumError> {
    v_grid
        .iter()
        .map(|&v| {
            let kin = momentum_from_velocity(v)?;
            Ok(SweepRow {
                v,
                p: kin.p,
                free_zb: free_zb_frequency(kin.p),
                freqs: frequency_set(kin.p, cfg)?,
            })
        })
        .collect()
}

//! Superpositions of labelled plane-wave eigenstates over a momentum grid.
//!
//! The momentum integral is a trapezoidal sum: a packet holds grid points
//! `p_k`, weights `w_k` and one amplitude `c_{l,p_k,s}` per label, normalized
//! so that `Σ_k w_k Σ_{l,s} |c|² = 1`. Position-space phases are never
//! materialized; every observable we report depends only on the amplitudes and
//! the mode energies.

use crate::algebra::{Label, Spinor};
use crate::config::ParticleConfig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Amplitudes in [`Label::ALL`] order: `(+↑, +↓, −↑, −↓)`.
pub type Mix = [Complex64; 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PacketError {
    #[error("momentum width must be positive and finite, got {0}")]
    Width(f64),
    #[error("a packet needs at least one mode")]
    NoModes,
    #[error("branch/spin mix is all zero")]
    ZeroMix,
    #[error("momentum grid is not strictly increasing")]
    Grid,
    #[error("quadrature weights must be positive")]
    Weights,
    #[error("grid, weight and coefficient arrays differ in length")]
    Length,
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("invalid packet document: {0}")]
    Json(String),
}

pub fn equal_mix() -> Mix {
    [Complex64::new(0.5, 0.0); 4]
}

/// Equal populations with phases `kπ/4`. A real equal mix cancels one of the
/// two tones in each transverse observable; these phases keep both.
pub fn four_way_mix() -> Mix {
    std::array::from_fn(|k| Complex64::from_polar(0.5, k as f64 * std::f64::consts::FRAC_PI_4))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wavepacket {
    grid: Vec<f64>,
    weights: Vec<f64>,
    coeffs: Vec<Mix>,
    cfg: ParticleConfig,
}

/// Instantaneous state of one plane-wave mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub p: f64,
    pub spinor: Spinor,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub normalization_residual: f64,
    pub grid_strictly_increasing: bool,
    pub weights_positive: bool,
    /// Population fractions per label, [`Label::ALL`] order.
    pub occupancy: [f64; 4],
    pub mean_momentum: f64,
}

fn mix_norm(mix: &Mix) -> f64 {
    mix.iter().map(|z| z.norm_sqr()).sum()
}

impl Wavepacket {
    /// Builds a packet from raw parts and normalizes it.
    pub fn from_parts(
        grid: Vec<f64>,
        weights: Vec<f64>,
        coeffs: Vec<Mix>,
        cfg: ParticleConfig,
    ) -> Result<Self, PacketError> {
        cfg.validate()?;
        if grid.is_empty() {
            return Err(PacketError::NoModes);
        }
        if grid.len() != weights.len() || grid.len() != coeffs.len() {
            return Err(PacketError::Length);
        }
        if grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) || grid.iter().any(|p| !p.is_finite()) {
            return Err(PacketError::Grid);
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(PacketError::Weights);
        }
        let total: f64 = weights.iter().zip(&coeffs).map(|(w, c)| w * mix_norm(c)).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(PacketError::ZeroMix);
        }
        let scale = 1.0 / total.sqrt();
        let coeffs = coeffs
            .into_iter()
            .map(|c| c.map(|z| z * scale))
            .collect();
        Ok(Wavepacket { grid, weights, coeffs, cfg })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coeffs(&self) -> &[Mix] {
        &self.coeffs
    }

    pub fn config(&self) -> &ParticleConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Iterates `(p_k, w_k, c_k)`.
    pub fn modes(&self) -> impl Iterator<Item = (f64, f64, &Mix)> + '_ {
        self.grid
            .iter()
            .zip(&self.weights)
            .zip(&self.coeffs)
            .map(|((&p, &w), c)| (p, w, c))
    }

    /// Multiplies every amplitude by `phase` (unit modulus).
    pub fn with_global_phase(&self, phase: Complex64) -> Wavepacket {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            for z in c.iter_mut() {
                *z *= phase;
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PacketDocument::from(self)).expect("packet serializes")
    }

    pub fn from_json(text: &str) -> Result<Wavepacket, PacketError> {
        let doc: PacketDocument =
            serde_json::from_str(text).map_err(|e| PacketError::Json(e.to_string()))?;
        doc.try_into()
    }
}

/// Gaussian envelope `exp(−(p−p0)²/(4σ²))` on a uniform grid spanning `p0 ± 5σ`.
pub fn gaussian_packet(
    p0: f64,
    sigma_p: f64,
    mix: Mix,
    n_modes: usize,
    cfg: &ParticleConfig,
) -> Result<Wavepacket, PacketError> {
    if !(sigma_p.is_finite() && sigma_p > 0.0) {
        return Err(PacketError::Width(sigma_p));
    }
    if n_modes == 0 {
        return Err(PacketError::NoModes);
    }
    if mix_norm(&mix) == 0.0 {
        return Err(PacketError::ZeroMix);
    }
    if n_modes == 1 {
        return single_mode(p0, mix, cfg);
    }
    let lo = p0 - 5.0 * sigma_p;
    let h = 10.0 * sigma_p / (n_modes - 1) as f64;
    let grid: Vec<f64> = (0..n_modes).map(|k| lo + h * k as f64).collect();
    let weights: Vec<f64> = (0..n_modes)
        .map(|k| if k == 0 || k == n_modes - 1 { 0.5 * h } else { h })
        .collect();
    let coeffs = grid
        .iter()
        .map(|p| {
            let env = (-(p - p0).powi(2) / (4.0 * sigma_p * sigma_p)).exp();
            mix.map(|z| z * env)
        })
        .collect();
    Wavepacket::from_parts(grid, weights, coeffs, *cfg)
}

pub fn single_mode(p: f64, mix: Mix, cfg: &ParticleConfig) -> Result<Wavepacket, PacketError> {
    if mix_norm(&mix) == 0.0 {
        return Err(PacketError::ZeroMix);
    }
    Wavepacket::from_parts(vec![p], vec![1.0], vec![mix], *cfg)
}

pub fn validate(wp: &Wavepacket) -> Diagnostics {
    let mut occupancy = [0.0; 4];
    let mut total = 0.0;
    let mut mean_p = 0.0;
    for (p, w, c) in wp.modes() {
        for label in Label::ALL {
            let n = w * c[label.index()].norm_sqr();
            occupancy[label.index()] += n;
            total += n;
            mean_p += n * p;
        }
    }
    Diagnostics {
        normalization_residual: (total - 1.0).abs(),
        grid_strictly_increasing: wp.grid.windows(2).all(|w| w[1] > w[0]),
        weights_positive: wp.weights.iter().all(|&w| w > 0.0),
        occupancy: occupancy.map(|o| o / total),
        mean_momentum: mean_p / total,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PacketDocument {
    config: ParticleConfig,
    labels: [String; 4],
    grid: Vec<f64>,
    weights: Vec<f64>,
    /// One row per grid point, four `[re, im]` pairs in label order.
    coeffs: Vec<[[f64; 2]; 4]>,
}

impl From<&Wavepacket> for PacketDocument {
    fn from(wp: &Wavepacket) -> Self {
        PacketDocument {
            config: wp.cfg,
            labels: Label::ALL.map(|l| l.to_string()),
            grid: wp.grid.clone(),
            weights: wp.weights.clone(),
            coeffs: wp
                .coeffs
                .iter()
                .map(|c| c.map(|z| [z.re, z.im]))
                .collect(),
        }
    }
}

impl TryFrom<PacketDocument> for Wavepacket {
    type Error = PacketError;

    fn try_from(doc: PacketDocument) -> Result<Self, Self::Error> {
        let expected = Label::ALL.map(|l| l.to_string());
        if doc.labels != expected {
            return Err(PacketError::Json(format!(
                "labels must be {expected:?}, got {:?}",
                doc.labels
            )));
        }
        let coeffs = doc
            .coeffs
            .into_iter()
            .map(|row| row.map(|[re, im]| Complex64::new(re, im)))
            .collect();
        Wavepacket::from_parts(doc.grid, doc.weights, coeffs, doc.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ParticleConfig {
        ParticleConfig::natural(0.4).unwrap()
    }

    #[test]
    fn single_mode_limit() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mix = [
            Complex64::new(r, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(r, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let wp = gaussian_packet(0.5, 1e-9, mix, 1, &cfg()).unwrap();
        assert_eq!(wp.grid(), &[0.5]);
        let d = validate(&wp);
        assert!((d.occupancy[0] - 0.5).abs() < 1e-15);
        assert!((d.occupancy[2] - 0.5).abs() < 1e-15);
        assert_eq!(d.occupancy[1], 0.0);
    }

    #[test]
    fn gaussian_mean_and_norm() {
        let wp = gaussian_packet(0.5, 0.05, equal_mix(), 64, &cfg()).unwrap();
        let d = validate(&wp);
        assert!(d.normalization_residual < 1e-10);
        assert!((d.mean_momentum - 0.5).abs() < 1e-6);
        assert!(d.grid_strictly_increasing && d.weights_positive);
        assert!((wp.grid()[0] - 0.25).abs() < 1e-14);
        assert!((wp.grid()[63] - 0.75).abs() < 1e-14);
        for o in d.occupancy {
            assert!((o - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = cfg();
        assert_eq!(gaussian_packet(0.5, 0.0, equal_mix(), 8, &c), Err(PacketError::Width(0.0)));
        assert_eq!(gaussian_packet(0.5, 0.1, equal_mix(), 0, &c), Err(PacketError::NoModes));
        let zero = [Complex64::new(0.0, 0.0); 4];
        assert_eq!(gaussian_packet(0.5, 0.1, zero, 8, &c), Err(PacketError::ZeroMix));
        assert_eq!(single_mode(0.5, zero, &c), Err(PacketError::ZeroMix));
        assert_eq!(
            Wavepacket::from_parts(vec![0.2, 0.1], vec![1.0, 1.0], vec![equal_mix(); 2], c),
            Err(PacketError::Grid)
        );
        assert_eq!(
            Wavepacket::from_parts(vec![0.1, 0.2], vec![1.0, -1.0], vec![equal_mix(); 2], c),
            Err(PacketError::Weights)
        );
    }

    #[test]
    fn json_round_trip() {
        let wp = gaussian_packet(0.5, 0.05, equal_mix(), 5, &cfg()).unwrap();
        let back = Wavepacket::from_json(&wp.to_json()).unwrap();
        assert_eq!(back.grid(), wp.grid());
        for (a, b) in back.coeffs().iter().zip(wp.coeffs()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() < 1e-15);
            }
        }
        assert!(Wavepacket::from_json("{\"grid\": []}").is_err());
    }
}

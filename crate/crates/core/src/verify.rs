//! End-to-end check: evolve a packet with the oracle, recover the tones of
//! every observable by spectral analysis and compare them, the beat envelope
//! and the closed-form series against the predictions.

use crate::config::{ConfigError, ParticleConfig};
use crate::dynamics::{
    closed_form_series, conservation_report, expectation_series, spin_x_constant, tone_amplitudes,
    ConservationReport, DynamicsError, Observable, TimeGrid, TimeSeries, ToneAmplitude,
};
use crate::spectral::{
    beat_envelope, extract_peaks, match_frequencies, periodogram, MatchReport, Window,
    DEFAULT_THRESHOLD,
};
use crate::spectrum::{frequency_set, FrequencySet, SpectrumError, Tone};
use crate::wavepacket::{four_way_mix, gaussian_packet, Mix, PacketError, Wavepacket};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{0}")]
    Settings(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub particle: ParticleConfig,
    pub p0: f64,
    pub sigma_p: f64,
    pub n_modes: usize,
    pub mix: Mix,
    pub samples: usize,
    /// Periods of the slowest resolvable expected tone per observable.
    pub periods: f64,
    /// Overrides `periods` when set (natural units).
    pub t_max: Option<f64>,
    pub tol_rel: f64,
    pub beat_tol: f64,
    pub series_tol: f64,
    pub conservation_tol: f64,
    pub threshold: f64,
    /// Spectral lines weaker than this amplitude count as round-off.
    pub amplitude_floor: f64,
    pub window: Window,
    pub observables: Vec<Observable>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            particle: ParticleConfig::natural(0.4).expect("valid default"),
            p0: 0.5,
            sigma_p: 0.05,
            n_modes: 1,
            mix: four_way_mix(),
            samples: 4096,
            periods: 20.0,
            t_max: None,
            tol_rel: 1e-3,
            beat_tol: 1e-2,
            series_tol: 1e-9,
            conservation_tol: 1e-10,
            threshold: DEFAULT_THRESHOLD,
            amplitude_floor: 1e-10,
            window: Window::Hann,
            observables: Observable::ALL.to_vec(),
        }
    }
}

impl VerifyConfig {
    pub fn packet(&self) -> Result<Wavepacket, VerifyError> {
        Ok(gaussian_packet(self.p0, self.sigma_p, self.mix, self.n_modes, &self.particle)?)
    }

    /// Sampling grid for one observable.
    pub fn grid_for(&self, observable: Observable, freqs: &FrequencySet) -> Result<TimeGrid, VerifyError> {
        if let Some(t_max) = self.t_max {
            return Ok(TimeGrid::spanning(t_max, self.samples)?);
        }
        let slowest = |tones: &[Tone]| {
            tones
                .iter()
                .map(|&t| freqs.tone(t))
                .filter(|&w| w > 1e-9)
                .reduce(f64::min)
        };
        let omega = slowest(observable.expected_tones())
            .or_else(|| slowest(&Tone::ALL))
            .ok_or_else(|| VerifyError::Settings("no positive reference frequency".into()))?;
        Ok(TimeGrid::periods(omega, self.periods, self.samples)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub particle: ParticleConfig,
    pub p0: f64,
    pub sigma_p: f64,
    pub n_modes: usize,
    pub mix: [[f64; 2]; 4],
    pub samples: usize,
    pub periods: f64,
    pub t_max: Option<f64>,
    pub tol_rel: f64,
    pub beat_tol: f64,
    pub series_tol: f64,
    pub conservation_tol: f64,
    pub threshold: f64,
    pub amplitude_floor: f64,
    pub window: Window,
}

impl From<&VerifyConfig> for Settings {
    fn from(c: &VerifyConfig) -> Self {
        Settings {
            particle: c.particle,
            p0: c.p0,
            sigma_p: c.sigma_p,
            n_modes: c.n_modes,
            mix: c.mix.map(|z| [z.re, z.im]),
            samples: c.samples,
            periods: c.periods,
            t_max: c.t_max,
            tol_rel: c.tol_rel,
            beat_tol: c.beat_tol,
            series_tol: c.series_tol,
            conservation_tol: c.conservation_tol,
            threshold: c.threshold,
            amplitude_floor: c.amplitude_floor,
            window: c.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeatCheck {
    pub expected: f64,
    pub measured: Option<f64>,
    pub rel_error: Option<f64>,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableCheck {
    pub observable: Observable,
    pub t_max: f64,
    pub samples: usize,
    pub resolution: Option<f64>,
    pub predicted: Vec<ToneAmplitude>,
    /// Tones strong enough that their absence is a failure.
    pub required: Vec<Tone>,
    pub tones: Option<MatchReport>,
    pub beat: Option<BeatCheck>,
    /// max |closed form − oracle| over the grid.
    pub closed_form_deviation: f64,
    /// max |x(t) − x(0)| for a quantity that must stay constant.
    pub constant_drift: Option<f64>,
    pub errors: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub settings: Settings,
    pub frequencies: FrequencySet,
    pub conservation: ConservationReport,
    pub conservation_passed: bool,
    pub observables: Vec<ObservableCheck>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Oracle series ready for spectral analysis; positions lose their drift.
pub fn analysis_series(series: &TimeSeries) -> TimeSeries {
    if series.observable.is_position() {
        series.detrended()
    } else {
        series.clone()
    }
}

fn check_observable(
    cfg: &VerifyConfig,
    wp: &Wavepacket,
    freqs: &FrequencySet,
    observable: Observable,
) -> Result<ObservableCheck, VerifyError> {
    let grid = cfg.grid_for(observable, freqs)?;
    let oracle = expectation_series(wp, observable, &grid)?;
    let closed = closed_form_series(wp, observable, &grid)?;
    let deviation = oracle.max_abs_difference(&closed);
    let mut errors = Vec::new();
    if deviation > cfg.series_tol {
        errors.push(format!("closed form deviates from oracle by {deviation:e}"));
    }

    let predicted = tone_amplitudes(wp, observable)?;
    let strongest = predicted.iter().map(|a| a.amplitude).fold(0.0, f64::max);
    let required: Vec<Tone> = predicted
        .iter()
        .filter(|a| a.amplitude >= 10.0 * cfg.amplitude_floor && a.amplitude.powi(2) >= 2.0 * cfg.threshold * strongest.powi(2))
        .map(|a| a.tone)
        .collect();

    let series = analysis_series(&oracle);
    let mut resolution = None;
    let mut tones = None;
    let mut beat = None;
    let mut constant_drift = None;
    match periodogram(&series, cfg.window) {
        Ok(spec) => {
            resolution = Some(spec.resolution);
            let peaks = extract_peaks(&spec, usize::MAX, cfg.threshold).above_amplitude(cfg.amplitude_floor);
            if observable.expected_tones().is_empty() {
                let s0 = spin_x_constant(wp)?;
                let drift = oracle.values.iter().map(|v| (v - s0).abs()).fold(0.0, f64::max);
                constant_drift = Some(drift);
                if drift > cfg.conservation_tol {
                    errors.push(format!("drifts by {drift:e}"));
                }
                if !peaks.is_empty() {
                    errors.push(format!("{} spectral peaks in a constant series", peaks.len()));
                }
            } else {
                match match_frequencies(&peaks, freqs, observable.expected_tones(), cfg.tol_rel) {
                    Ok(mut report) => {
                        report.unmatched.retain(|t| required.contains(t));
                        report.passed = report.unexplained == 0 && report.unmatched.is_empty();
                        if !report.passed {
                            errors.push(format!(
                                "{} unexplained peaks, unmatched tones {:?}",
                                report.unexplained, report.unmatched
                            ));
                        }
                        if report.passed {
                            beat = beat_check(cfg, freqs, observable, &series, &report, &required, spec.resolution);
                            if let Some(b) = beat.as_ref().filter(|b| !b.passed) {
                                errors.push(format!("beat check failed: {:?}", b.note));
                            }
                        }
                        tones = Some(report);
                    }
                    Err(e) => errors.push(e.to_string()),
                }
            }
        }
        Err(e) => errors.push(e.to_string()),
    }

    Ok(ObservableCheck {
        observable,
        t_max: grid.duration(),
        samples: grid.n,
        resolution,
        predicted,
        required,
        tones,
        beat,
        closed_form_deviation: deviation,
        constant_drift,
        passed: errors.is_empty(),
        errors,
    })
}

/// The envelope is only defined when two distinct tones are resolved.
fn beat_check(
    cfg: &VerifyConfig,
    freqs: &FrequencySet,
    observable: Observable,
    series: &TimeSeries,
    report: &MatchReport,
    required: &[Tone],
    resolution: f64,
) -> Option<BeatCheck> {
    let expected = observable.expected_beat(freqs)?;
    let live: Vec<f64> = required
        .iter()
        .filter(|t| !report.static_tones.contains(t))
        .map(|&t| freqs.tone(t))
        .collect();
    if live.len() != 2 || (live[0] - live[1]).abs() < 2.0 * resolution {
        return None;
    }
    Some(match beat_envelope(series) {
        Ok(b) => {
            let rel = (b.envelope - expected).abs() / expected;
            BeatCheck {
                expected,
                measured: Some(b.envelope),
                rel_error: Some(rel),
                passed: rel <= cfg.beat_tol,
                note: None,
            }
        }
        Err(e) => BeatCheck {
            expected,
            measured: None,
            rel_error: None,
            passed: false,
            note: Some(e.to_string()),
        },
    })
}

pub fn run(cfg: &VerifyConfig) -> Result<VerifyReport, VerifyError> {
    if !(cfg.tol_rel > 0.0 && cfg.beat_tol > 0.0 && cfg.threshold > 0.0 && cfg.periods > 0.0) {
        return Err(VerifyError::Settings("tolerances, threshold and periods must be positive".into()));
    }
    let wp = cfg.packet()?;
    let freqs = frequency_set(cfg.p0, &cfg.particle)?;
    let observables = cfg
        .observables
        .par_iter()
        .map(|&o| check_observable(cfg, &wp, &freqs, o))
        .collect::<Result<Vec<_>, _>>()?;
    let longest = observables
        .iter()
        .map(|o| o.t_max)
        .fold(2.0 * PI, f64::max);
    let conservation = conservation_report(&wp, &TimeGrid::spanning(longest, cfg.samples.min(512))?)?;
    let conservation_passed = conservation.max_drift() <= cfg.conservation_tol;
    Ok(VerifyReport {
        passed: conservation_passed && observables.iter().all(|o| o.passed),
        settings: cfg.into(),
        frequencies: freqs,
        conservation,
        conservation_passed,
        observables,
    })
}

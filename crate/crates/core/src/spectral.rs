//! Periodograms, peak extraction with sub-bin refinement, matching of peaks
//! against predicted transition frequencies, and beat-envelope recovery.

use crate::dynamics::TimeSeries;
use crate::spectrum::{FrequencySet, Tone};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const MIN_SAMPLES: usize = 64;
pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// Peaks whose amplitude is below this fraction of the largest sample are
/// treated as round-off.
const AMPLITUDE_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("series has {0} samples, need at least {MIN_SAMPLES}")]
    TooShort(usize),
    #[error("non-uniform sampling: {0}")]
    NonUniform(String),
    #[error(
        "insufficient resolution: tol_rel·ω_min = {required:e} is below the refinement accuracy {accuracy:e}; lengthen the series"
    )]
    InsufficientResolution { required: f64, accuracy: f64 },
    #[error("beat analysis needs exactly two tones, found {0}")]
    ToneCount(usize),
    #[error("unknown window '{0}' (expected rect or hann)")]
    UnknownWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rect,
    #[default]
    Hann,
}

impl Window {
    fn coefficient(self, n: usize, len: usize) -> f64 {
        match self {
            Window::Rect => 1.0,
            Window::Hann => 0.5 * (1.0 - (2.0 * PI * n as f64 / len as f64).cos()),
        }
    }

    /// Worst-case frequency error of the refined estimate for an isolated tone,
    /// in units of the resolution `2π/T`.
    pub fn refinement_accuracy(self) -> f64 {
        match self {
            Window::Rect => 1.0 / 10.0,
            Window::Hann => 1.0 / 60.0,
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Rect => "rect",
            Window::Hann => "hann",
        })
    }
}

impl FromStr for Window {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(Window::Rect),
            "hann" => Ok(Window::Hann),
            other => Err(SpectralError::UnknownWindow(other.to_string())),
        }
    }
}

/// One-sided power spectrum of a mean-removed, windowed series.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Complex DFT bins matching `freqs`.
    pub bins: Vec<Complex64>,
    pub resolution: f64,
    pub window: Window,
    /// `Σ (w_n (x_n − x̄))²`; equals `Σ power` by Parseval.
    pub windowed_energy: f64,
    pub max_abs_sample: f64,
    pub samples: usize,
}

impl Spectrum {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

fn check_sampling(series: &TimeSeries) -> Result<f64, SpectralError> {
    if series.len() < MIN_SAMPLES {
        return Err(SpectralError::TooShort(series.len()));
    }
    series
        .uniform_step()
        .map_err(|e| SpectralError::NonUniform(e.to_string()))
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
}

fn periodogram_of(values: &[f64], dt: f64, window: Window) -> Spectrum {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let max_abs_sample = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut data: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| Complex64::new(window.coefficient(k, n) * (v - mean), 0.0))
        .collect();
    let windowed_energy = data.iter().map(|z| z.norm_sqr()).sum();
    fft(&mut data, false);
    let half = n / 2;
    let resolution = 2.0 * PI / (n as f64 * dt);
    let mut freqs = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for (k, bin) in data.iter().take(half + 1).enumerate() {
        let doubled = k != 0 && !(n.is_multiple_of(2) && k == half);
        let factor = if doubled { 2.0 } else { 1.0 };
        freqs.push(k as f64 * resolution);
        power.push(factor * bin.norm_sqr() / n as f64);
    }
    Spectrum {
        freqs,
        power,
        bins: data[..=half].to_vec(),
        resolution,
        window,
        windowed_energy,
        max_abs_sample,
        samples: n,
    }
}

pub fn periodogram(series: &TimeSeries, window: Window) -> Result<Spectrum, SpectralError> {
    let dt = check_sampling(series)?;
    Ok(periodogram_of(&series.values, dt, window))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub power: f64,
    pub refined: bool,
}

/// Peaks sorted by power, strongest first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub resolution: f64,
    pub window: Window,
    pub total_power: f64,
    pub samples: usize,
}

impl PeakSet {
    /// Amplitude of the sinusoid that would produce `peak` on an exact bin.
    pub fn amplitude(&self, peak: &Peak) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        let gain = match self.window {
            Window::Rect => 2.0,
            Window::Hann => 8.0,
        };
        (gain * peak.power / self.samples as f64).sqrt()
    }

    /// Drops peaks whose amplitude is below `floor`.
    pub fn above_amplitude(&self, floor: f64) -> PeakSet {
        PeakSet {
            peaks: self.peaks.iter().copied().filter(|p| self.amplitude(p) >= floor).collect(),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

/// Sub-bin offset of a local maximum at bin `k`, in bins.
fn refine(spec: &Spectrum, k: usize) -> Option<f64> {
    if k == 0 || k + 1 >= spec.power.len() {
        return None;
    }
    let offset = match spec.window {
        // Jacobsen's estimator on the complex bins
        Window::Rect => {
            let (a, b, c) = (spec.bins[k - 1], spec.bins[k], spec.bins[k + 1]);
            let denom = b * 2.0 - a - c;
            if denom.norm() == 0.0 {
                return None;
            }
            ((a - c) / denom).re
        }
        // parabola through log power
        Window::Hann => {
            let [a, b, c] = [spec.power[k - 1], spec.power[k], spec.power[k + 1]];
            if a <= 0.0 || b <= 0.0 || c <= 0.0 {
                return None;
            }
            let (a, b, c) = (a.ln(), b.ln(), c.ln());
            let denom = a - 2.0 * b + c;
            if denom >= 0.0 {
                return None;
            }
            0.5 * (a - c) / denom
        }
    };
    (offset.abs() <= 1.0).then_some(offset)
}

pub fn extract_peaks(spec: &Spectrum, max_peaks: usize, rel_threshold: f64) -> PeakSet {
    let total_power = spec.total_power();
    let mut set = PeakSet {
        peaks: Vec::new(),
        resolution: spec.resolution,
        window: spec.window,
        total_power,
        samples: spec.samples,
    };
    let len = spec.power.len();
    if len < 3 {
        return set;
    }
    let max_power = spec.power[1..].iter().copied().fold(0.0, f64::max);
    // a tone of amplitude A gives a peak of order A²N/8 under the Hann window
    let floor = (AMPLITUDE_FLOOR * spec.max_abs_sample).powi(2) * spec.samples as f64;
    let threshold = (rel_threshold * max_power).max(floor);
    if max_power <= floor {
        return set;
    }
    for k in 1..len {
        let p = spec.power[k];
        let left = spec.power[k - 1];
        let right = if k + 1 < len { spec.power[k + 1] } else { 0.0 };
        if p > left && p >= right && p >= threshold {
            let (omega, refined) = match refine(spec, k) {
                Some(offset) => ((k as f64 + offset) * spec.resolution, true),
                None => (spec.freqs[k], false),
            };
            set.peaks.push(Peak { omega, power: p, refined });
        }
    }
    set.peaks.sort_by(|a, b| b.power.total_cmp(&a.power));
    set.peaks.truncate(max_peaks);
    set
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub omega: f64,
    pub label: Option<Tone>,
    /// `(ω_peak − ω_expected)/ω_expected` for the nearest expected tone.
    pub residual: f64,
    pub power_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub assignments: Vec<Assignment>,
    pub unexplained: usize,
    pub unmatched: Vec<Tone>,
    /// Expected tones too slow to resolve (e.g. `ω_L = 0` at `Δ = 0`).
    pub static_tones: Vec<Tone>,
    pub tol_rel: f64,
    pub passed: bool,
}

/// Assigns each peak to the nearest of `tones` (relative distance) and
/// reports unexplained peaks and unmatched tones. Tones below two
/// resolution bins cannot be seen as lines and are not required.
pub fn match_frequencies(
    peaks: &PeakSet,
    expected: &FrequencySet,
    tones: &[Tone],
    tol_rel: f64,
) -> Result<MatchReport, SpectralError> {
    let (live, static_tones): (Vec<Tone>, Vec<Tone>) = tones
        .iter()
        .partition(|&&t| expected.tone(t).abs() >= 2.0 * peaks.resolution);
    if let Some(omega_min) = live.iter().map(|&t| expected.tone(t).abs()).reduce(f64::min) {
        let accuracy = peaks.window.refinement_accuracy() * peaks.resolution;
        let required = tol_rel * omega_min;
        if required < accuracy {
            return Err(SpectralError::InsufficientResolution { required, accuracy });
        }
    }
    let mut matched = vec![false; live.len()];
    let mut assignments = Vec::with_capacity(peaks.len());
    let mut unexplained = 0;
    for peak in &peaks.peaks {
        let nearest = live
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let target = expected.tone(t).abs();
                (i, t, (peak.omega - target) / target)
            })
            .min_by(|a, b| a.2.abs().total_cmp(&b.2.abs()));
        let power_fraction = if peaks.total_power > 0.0 { peak.power / peaks.total_power } else { 0.0 };
        let (label, residual) = match nearest {
            Some((_, t, r)) if r.abs() <= tol_rel => {
                // degenerate tones (equal frequencies) share one peak
                for (j, &u) in live.iter().enumerate() {
                    let target = expected.tone(u).abs();
                    if ((peak.omega - target) / target).abs() <= tol_rel {
                        matched[j] = true;
                    }
                }
                (Some(t), r)
            }
            Some((_, _, r)) => {
                unexplained += 1;
                (None, r)
            }
            None => {
                unexplained += 1;
                (None, f64::NAN)
            }
        };
        assignments.push(Assignment {
            omega: peak.omega,
            label,
            residual,
            power_fraction,
        });
    }
    let unmatched: Vec<Tone> = live
        .iter()
        .zip(&matched)
        .filter(|(_, &m)| !m)
        .map(|(&t, _)| t)
        .collect();
    Ok(MatchReport {
        passed: unexplained == 0 && unmatched.is_empty(),
        assignments,
        unexplained,
        unmatched,
        static_tones,
        tol_rel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Beat {
    /// Mean of the two tones.
    pub carrier: f64,
    /// Dominant frequency of the analytic-signal magnitude.
    pub envelope: f64,
    pub tones: (f64, f64),
}

/// Analytic signal via FFT: negative frequencies removed, positives doubled.
fn analytic_magnitude(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut data: Vec<Complex64> = values.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    fft(&mut data, false);
    for (k, z) in data.iter_mut().enumerate() {
        if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            continue;
        }
        *z *= if k < n.div_ceil(2) { 2.0 } else { 0.0 };
    }
    fft(&mut data, true);
    data.iter().map(|z| z.norm() / n as f64).collect()
}

/// Carrier and envelope frequency of a two-tone series.
pub fn beat_envelope(series: &TimeSeries) -> Result<Beat, SpectralError> {
    let dt = check_sampling(series)?;
    let spec = periodogram_of(&series.values, dt, Window::Hann);
    let peaks = extract_peaks(&spec, usize::MAX, DEFAULT_THRESHOLD);
    if peaks.len() != 2 {
        return Err(SpectralError::ToneCount(peaks.len()));
    }
    let (a, b) = (peaks.peaks[0].omega, peaks.peaks[1].omega);
    let envelope_series = analytic_magnitude(&series.values);
    let env_spec = periodogram_of(&envelope_series, dt, Window::Hann);
    let env_peaks = extract_peaks(&env_spec, 1, DEFAULT_THRESHOLD);
    let envelope = env_peaks.peaks.first().map(|p| p.omega).unwrap_or(0.0);
    Ok(Beat {
        carrier: 0.5 * (a + b),
        envelope,
        tones: (a.min(b), a.max(b)),
    })
}

//! Expectation-value time series, computed two independent ways.
//!
//! * The closed-form route sums the cross terms of the labelled eigenbasis
//!   expansion: transverse spin and velocity carry `ω_L` and `ω₂ᶻᵇ` tones,
//!   longitudinal velocity carries `ω₁ᶻᵇ`/`ω₃ᶻᵇ` tones on top of the group
//!   velocity, and positions are the time integrals of the velocities.
//!   Frequencies and energies come from the closed-form spectrum; matrix
//!   elements are contracted from the numerically labelled eigenspinors.
//! * The oracle route evolves every mode by exact eigenphase rotation and
//!   contracts `⟨ψ(t)|O|ψ(t)⟩` directly. Positions use the Heisenberg
//!   integral `∫₀ᵗ e^{iHs} α e^{−iHs} ds`, evaluated with a block-matrix
//!   exponential, so they need no eigen-decomposition at all.
//!
//! Positions are reported relative to the initial position `r0`.

use crate::algebra::{
    build_hamiltonian, build_operators, eigensystem_analytic, eigensystem_numeric, element,
    AlgebraError, Branch, DiracOperatorSet, EigenSystem, Label, Matrix4c, Spin, Spinor,
};
use crate::config::ParticleConfig;
use crate::spectrum::{frequency_set, FrequencySet, SpectrumError, Tone};
use crate::wavepacket::{Mix, ModeState, Wavepacket};
use nalgebra::SMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

type Matrix8c = SMatrix<Complex64, 8, 8>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("invalid time grid: {0}")]
    Grid(String),
    #[error("mode state at p = {state} evolved with an eigensystem for p = {eigen}")]
    MomentumMismatch { state: f64, eigen: f64 },
    #[error("⟨{observable}⟩ has imaginary residue {residue:e} at t = {t}")]
    ImaginaryResidue {
        observable: Observable,
        t: f64,
        residue: f64,
    },
    #[error("unknown observable '{0}'")]
    UnknownObservable(String),
    #[error("{observable} is not handled by this series")]
    WrongObservable { observable: Observable },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "S_x")]
    Sx,
    #[serde(rename = "S_y")]
    Sy,
    #[serde(rename = "S_z")]
    Sz,
    #[serde(rename = "alpha_x")]
    AlphaX,
    #[serde(rename = "alpha_y")]
    AlphaY,
    #[serde(rename = "alpha_z")]
    AlphaZ,
    #[serde(rename = "r_x")]
    Rx,
    #[serde(rename = "r_y")]
    Ry,
    #[serde(rename = "r_z")]
    Rz,
}

/// Transverse axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

impl Observable {
    pub const ALL: [Observable; 9] = [
        Observable::Sx,
        Observable::Sy,
        Observable::Sz,
        Observable::AlphaX,
        Observable::AlphaY,
        Observable::AlphaZ,
        Observable::Rx,
        Observable::Ry,
        Observable::Rz,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Observable::Sx => "S_x",
            Observable::Sy => "S_y",
            Observable::Sz => "S_z",
            Observable::AlphaX => "alpha_x",
            Observable::AlphaY => "alpha_y",
            Observable::AlphaZ => "alpha_z",
            Observable::Rx => "r_x",
            Observable::Ry => "r_y",
            Observable::Rz => "r_z",
        }
    }

    pub fn is_position(self) -> bool {
        matches!(self, Observable::Rx | Observable::Ry | Observable::Rz)
    }

    pub fn is_spin(self) -> bool {
        matches!(self, Observable::Sx | Observable::Sy | Observable::Sz)
    }

    /// The matrix contracted per sample; positions use their velocity `α_j`.
    pub fn operator(self, ops: &DiracOperatorSet) -> Matrix4c {
        match self {
            Observable::Sx => ops.spin_x,
            Observable::Sy => ops.spin_y,
            Observable::Sz => ops.spin_z,
            Observable::AlphaX | Observable::Rx => ops.alpha_x,
            Observable::AlphaY | Observable::Ry => ops.alpha_y,
            Observable::AlphaZ | Observable::Rz => ops.alpha_z,
        }
    }

    /// Tones the closed-form expansion predicts for this observable.
    pub fn expected_tones(self) -> &'static [Tone] {
        match self {
            Observable::Sx => &[],
            Observable::AlphaX | Observable::Rx => &[Tone::Zb1, Tone::Zb3],
            _ => &[Tone::Larmor, Tone::Zb2],
        }
    }

    /// The beat frequency between the two expected tones.
    pub fn expected_beat(self, f: &FrequencySet) -> Option<f64> {
        match self {
            Observable::Sx => None,
            Observable::Sy | Observable::Sz => Some(f.omega_sb),
            Observable::AlphaX | Observable::Rx => Some(f.omega_ob1),
            _ => Some(f.omega_ob2),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Observable {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Observable::ALL
            .into_iter()
            .find(|o| o.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| DynamicsError::UnknownObservable(s.to_string()))
    }
}

/// Uniform sampling `t_k = t0 + k·dt`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self, DynamicsError> {
        if n < 2 {
            return Err(DynamicsError::Grid(format!("need at least 2 samples, got {n}")));
        }
        if !(dt.is_finite() && dt > 0.0 && t0.is_finite()) {
            return Err(DynamicsError::Grid(format!("bad start {t0} or step {dt}")));
        }
        Ok(TimeGrid { t0, dt, n })
    }

    /// `n` samples over `[0, t_max)`; the endpoint is excluded so that a tone
    /// with period `t_max / k` falls on an exact DFT bin.
    pub fn spanning(t_max: f64, n: usize) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::Grid("need at least 2 samples, got 0".into()));
        }
        Self::new(0.0, t_max / n as f64, n)
    }

    /// `n` samples covering `periods` periods of angular frequency `omega`.
    pub fn periods(omega: f64, periods: f64, n: usize) -> Result<Self, DynamicsError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(DynamicsError::Grid(format!("reference frequency {omega} must be positive")));
        }
        Self::spanning(periods * 2.0 * std::f64::consts::PI / omega, n)
    }

    pub fn at(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.at(k)).collect()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub observable: Observable,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, observable: Observable) -> Result<Self, DynamicsError> {
        if times.len() != values.len() {
            return Err(DynamicsError::Grid("times and values differ in length".into()));
        }
        if times.len() < 2 {
            return Err(DynamicsError::Grid("a series needs at least 2 samples".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(DynamicsError::Grid(format!("non-finite sample {v}")));
        }
        let series = TimeSeries { times, values, observable };
        series.uniform_step()?;
        Ok(series)
    }

    /// The common sampling step; errors if sampling is not uniform.
    pub fn uniform_step(&self) -> Result<f64, DynamicsError> {
        let n = self.times.len();
        let dt = (self.times[n - 1] - self.times[0]) / (n - 1) as f64;
        if dt.is_nan() || dt <= 0.0 {
            return Err(DynamicsError::Grid("times must increase".into()));
        }
        let scale = self.times[0].abs().max(self.times[n - 1].abs()).max(dt);
        for (k, w) in self.times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * scale {
                return Err(DynamicsError::Grid(format!(
                    "non-uniform sampling at index {k}: step {} vs {dt}",
                    w[1] - w[0]
                )));
            }
        }
        Ok(dt)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Removes the least-squares straight line (drift of a position series).
    pub fn detrended(&self) -> TimeSeries {
        let n = self.len() as f64;
        let mt = self.times.iter().sum::<f64>() / n;
        let mv = self.values.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (t, v) in self.times.iter().zip(&self.values) {
            sxy += (t - mt) * (v - mv);
            sxx += (t - mt) * (t - mt);
        }
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let values = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(t, v)| v - mv - slope * (t - mt))
            .collect();
        TimeSeries {
            times: self.times.clone(),
            values,
            observable: self.observable,
        }
    }

    pub fn max_abs_difference(&self, other: &TimeSeries) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-mode data shared by both routes.
#[derive(Debug, Clone)]
struct Mode {
    p: f64,
    weight: f64,
    coeffs: Mix,
    h: Matrix4c,
    numeric: EigenSystem,
    analytic: EigenSystem,
    freqs: FrequencySet,
}

impl Mode {
    fn c(&self, label: Label) -> Complex64 {
        self.coeffs[label.index()]
    }

    fn v(&self, label: Label) -> &Spinor {
        self.numeric.spinor(label)
    }

    fn c_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    fn initial_state(&self) -> ModeState {
        let mut spinor = Spinor::zeros();
        for label in Label::ALL {
            spinor += self.v(label) * self.c(label);
        }
        ModeState { p: self.p, spinor, t: 0.0 }
    }
}

fn prepare(wp: &Wavepacket) -> Result<Vec<Mode>, DynamicsError> {
    let ops = build_operators();
    let cfg = wp.config();
    wp.modes()
        .map(|(p, weight, coeffs)| {
            let h = build_hamiltonian(p, cfg)?;
            Ok(Mode {
                p,
                weight,
                coeffs: *coeffs,
                numeric: eigensystem_numeric(&h, &ops)?,
                analytic: eigensystem_analytic(p, cfg)?,
                freqs: frequency_set(p, cfg)?,
                h,
            })
        })
        .collect()
}

/// Exact propagation by `dt`: `ψ ← Σ_i e^{−iE_i dt}|v_i⟩⟨v_i|ψ⟩`.
pub fn evolve_mode(state: &ModeState, dt: f64, eig: &EigenSystem) -> Result<ModeState, DynamicsError> {
    if (state.p - eig.p).abs() > 1e-12 * state.p.abs().max(1.0) {
        return Err(DynamicsError::MomentumMismatch {
            state: state.p,
            eigen: eig.p,
        });
    }
    let mut out = Spinor::zeros();
    for label in Label::ALL {
        let v = eig.spinor(label);
        let phase = Complex64::from_polar(1.0, -eig.energy(label) * dt);
        out += v * (v.dotc(&state.spinor) * phase);
    }
    Ok(ModeState {
        p: state.p,
        spinor: out,
        t: state.t + dt,
    })
}

fn check_real(observable: Observable, t: f64, z: Complex64) -> Result<f64, DynamicsError> {
    if z.im.abs() > 1e-12 * z.re.abs().max(1.0) {
        return Err(DynamicsError::ImaginaryResidue {
            observable,
            t,
            residue: z.im,
        });
    }
    Ok(z.re)
}

/// Brute-force oracle: `⟨Ψ(t)|Ô|Ψ(t)⟩` summed over modes with quadrature weights.
pub fn expectation_series(wp: &Wavepacket, observable: Observable, grid: &TimeGrid) -> Result<TimeSeries, DynamicsError> {
    let modes = prepare(wp)?;
    let ops = build_operators();
    let op = observable.operator(&ops);
    let times = grid.times();
    let values = if observable.is_position() {
        position_oracle(&modes, observable, &op, grid)?
    } else {
        let initial: Vec<ModeState> = modes.iter().map(Mode::initial_state).collect();
        times
            .par_iter()
            .map(|&t| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (mode, psi0) in modes.iter().zip(&initial) {
                    let psi = evolve_mode(psi0, t, &mode.numeric)?;
                    acc += element(&op, &psi.spinor, &psi.spinor) * mode.weight;
                }
                check_real(observable, t, acc)
            })
            .collect::<Result<Vec<f64>, _>>()?
    };
    TimeSeries::new(times, values, observable)
}

/// `r(t) − r(0) = ψ₀† K(t) ψ₀` with `K(t) = e^{iHt} F(t)`, where `F` is the
/// upper-right block of `exp([[−iH, α], [0, −iH]] t)`.
fn position_oracle(modes: &[Mode], observable: Observable, alpha: &Matrix4c, grid: &TimeGrid) -> Result<Vec<f64>, DynamicsError> {
    let minus_i = Complex64::new(0.0, -1.0);
    let per_mode: Vec<Vec<Complex64>> = modes
        .par_iter()
        .map(|mode| {
            let psi0 = mode.initial_state().spinor;
            let mut generator = Matrix8c::zeros();
            let a = mode.h * minus_i;
            generator.fixed_view_mut::<4, 4>(0, 0).copy_from(&a);
            generator.fixed_view_mut::<4, 4>(4, 4).copy_from(&a);
            generator.fixed_view_mut::<4, 4>(0, 4).copy_from(alpha);
            let step = (generator * Complex64::new(grid.dt, 0.0)).exp();
            let mut current = (generator * Complex64::new(grid.t0, 0.0)).exp();
            let mut out = Vec::with_capacity(grid.n);
            for _ in 0..grid.n {
                let g: Matrix4c = current.fixed_view::<4, 4>(0, 0).into_owned();
                let f: Matrix4c = current.fixed_view::<4, 4>(0, 4).into_owned();
                let k = g.adjoint() * f;
                out.push(psi0.dotc(&(k * psi0)) * mode.weight);
                current *= step;
            }
            out
        })
        .collect();
    (0..grid.n)
        .map(|k| {
            let z = per_mode.iter().fold(Complex64::new(0.0, 0.0), |acc, m| acc + m[k]);
            check_real(observable, grid.at(k), z)
        })
        .collect()
}

/// Drift of each conserved quantity over a run (max |x(t) − x(0)|).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationReport {
    pub norm_drift: f64,
    pub energy_drift: f64,
    pub spin_x_drift: f64,
    pub population_drift: f64,
}

impl ConservationReport {
    pub fn max_drift(&self) -> f64 {
        self.norm_drift
            .max(self.energy_drift)
            .max(self.spin_x_drift)
            .max(self.population_drift)
    }
}

pub fn conservation_report(wp: &Wavepacket, grid: &TimeGrid) -> Result<ConservationReport, DynamicsError> {
    let modes = prepare(wp)?;
    let ops = build_operators();
    let initial: Vec<ModeState> = modes.iter().map(Mode::initial_state).collect();
    let snapshot = |t: f64| -> Result<[f64; 7], DynamicsError> {
        let mut q = [0.0; 7];
        for (mode, psi0) in modes.iter().zip(&initial) {
            let psi = evolve_mode(psi0, t, &mode.numeric)?.spinor;
            let w = mode.weight;
            q[0] += w * psi.norm_squared();
            q[1] += w * element(&mode.h, &psi, &psi).re;
            q[2] += w * element(&ops.spin_x, &psi, &psi).re;
            for label in Label::ALL {
                q[3 + label.index()] += w * mode.v(label).dotc(&psi).norm_sqr();
            }
        }
        Ok(q)
    };
    let start = snapshot(0.0)?;
    let drifts = grid
        .times()
        .par_iter()
        .map(|&t| {
            let q = snapshot(t)?;
            let mut d = [0.0; 7];
            for i in 0..7 {
                d[i] = (q[i] - start[i]).abs();
            }
            Ok(d)
        })
        .collect::<Result<Vec<[f64; 7]>, DynamicsError>>()?;
    let worst = |range: std::ops::Range<usize>| {
        drifts
            .iter()
            .flat_map(|d| d[range.clone()].to_vec())
            .fold(0.0, f64::max)
    };
    Ok(ConservationReport {
        norm_drift: worst(0..1),
        energy_drift: worst(1..2),
        spin_x_drift: worst(2..3),
        population_drift: worst(3..7),
    })
}

/// Time-independent `⟨S_x⟩` (helicity is conserved): `Σ w|c|²⟨l,s|S_x|l,s⟩`.
pub fn spin_x_constant(wp: &Wavepacket) -> Result<f64, DynamicsError> {
    let modes = prepare(wp)?;
    let ops = build_operators();
    Ok(modes
        .iter()
        .map(|m| {
            m.weight
                * Label::ALL
                    .iter()
                    .map(|&l| m.c(l).norm_sqr() * element(&ops.spin_x, m.v(l), m.v(l)).re)
                    .sum::<f64>()
        })
        .sum())
}

/// One oscillating term `Re(A·e^{iωt})` of a mode.
#[derive(Debug, Clone, Copy)]
struct ToneTerm {
    amplitude: Complex64,
    omega: f64,
}

impl ToneTerm {
    fn pair(mode: &Mode, op: &Matrix4c, bra: Label, ket: Label, omega: f64) -> ToneTerm {
        let amplitude = mode.c(bra).conj() * mode.c(ket) * element(op, mode.v(bra), mode.v(ket)) * 2.0;
        ToneTerm { amplitude, omega }
    }

    fn velocity(&self, t: f64) -> f64 {
        (self.amplitude * Complex64::from_polar(1.0, self.omega * t)).re
    }

    /// `Re(A (e^{iωt} − 1)/(iω))`, continuous through `ω = 0`.
    fn integrated(&self, t: f64) -> f64 {
        let kernel = if self.omega == 0.0 {
            Complex64::new(t, 0.0)
        } else {
            let half = 0.5 * self.omega * t;
            Complex64::new((self.omega * t).sin(), 2.0 * half.sin() * half.sin()) / self.omega
        };
        (self.amplitude * kernel).re
    }
}

/// Same-branch, opposite-helicity terms (`±ω_L`) and opposite-branch,
/// opposite-helicity terms (`ω₂ᶻᵇ`).
fn transverse_terms(mode: &Mode, op: &Matrix4c) -> Vec<ToneTerm> {
    let f = &mode.freqs;
    let mut terms = Vec::with_capacity(4);
    for branch in [Branch::Positive, Branch::Negative] {
        terms.push(ToneTerm::pair(
            mode,
            op,
            Label::new(branch, Spin::Up),
            Label::new(branch, Spin::Down),
            branch.sign() * f.omega_l,
        ));
    }
    for spin in [Spin::Up, Spin::Down] {
        terms.push(ToneTerm::pair(
            mode,
            op,
            Label::new(Branch::Positive, spin),
            Label::new(Branch::Negative, spin.flipped()),
            f.omega_zb2,
        ));
    }
    terms
}

/// Group velocity `Σ|c|² p/E_{l,s}` plus the `ω₁ᶻᵇ` (↑) and `ω₃ᶻᵇ` (↓) terms.
fn longitudinal_terms(mode: &Mode, op: &Matrix4c) -> (f64, Vec<ToneTerm>) {
    let drift = Label::ALL
        .iter()
        .map(|&l| mode.c(l).norm_sqr() * mode.p / mode.analytic.energy(l))
        .sum();
    let terms = vec![
        ToneTerm::pair(mode, op, Label::PLUS_UP, Label::MINUS_UP, mode.freqs.omega_zb1),
        ToneTerm::pair(mode, op, Label::PLUS_DOWN, Label::MINUS_DOWN, mode.freqs.omega_zb3),
    ];
    (drift, terms)
}

fn assemble(
    modes: &[Mode],
    observable: Observable,
    grid: &TimeGrid,
    per_mode: impl Fn(&Mode) -> (f64, Vec<ToneTerm>),
    integrate: bool,
    offset: f64,
) -> Result<TimeSeries, DynamicsError> {
    let parts: Vec<(f64, f64, Vec<ToneTerm>)> = modes
        .iter()
        .map(|m| {
            let (constant, terms) = per_mode(m);
            (m.weight, constant, terms)
        })
        .collect();
    let times = grid.times();
    let values = times
        .iter()
        .map(|&t| {
            let mut acc = offset;
            for (w, constant, terms) in &parts {
                let mut mode_sum = if integrate { constant * t } else { *constant };
                for term in terms {
                    mode_sum += if integrate { term.integrated(t) } else { term.velocity(t) };
                }
                acc += w * mode_sum;
            }
            acc
        })
        .collect();
    TimeSeries::new(times, values, observable)
}

fn axis_observables(axis: Axis) -> (Observable, Observable, Observable) {
    match axis {
        Axis::Y => (Observable::Sy, Observable::AlphaY, Observable::Ry),
        Axis::Z => (Observable::Sz, Observable::AlphaZ, Observable::Rz),
    }
}

/// Transverse spin `⟨S_j⟩`, `j ∈ {y, z}`: an `ω_L` tone and an `ω₂ᶻᵇ` tone.
pub fn transverse_spin_series_analytic(wp: &Wavepacket, axis: Axis, grid: &TimeGrid) -> Result<TimeSeries, DynamicsError> {
    let (obs, _, _) = axis_observables(axis);
    let op = obs.operator(&build_operators());
    let modes = prepare(wp)?;
    assemble(&modes, obs, grid, |m| (0.0, transverse_terms(m, &op)), false, 0.0)
}

/// Transverse velocity `⟨α_j⟩`, same tone structure as the transverse spin.
pub fn transverse_velocity_series(wp: &Wavepacket, axis: Axis, grid: &TimeGrid) -> Result<TimeSeries, DynamicsError> {
    let (_, obs, _) = axis_observables(axis);
    let op = obs.operator(&build_operators());
    let modes = prepare(wp)?;
    assemble(&modes, obs, grid, |m| (0.0, transverse_terms(m, &op)), false, 0.0)
}

/// Transverse position: each transverse velocity tone divided by its `iω`.
pub fn transverse_position_series(wp: &Wavepacket, axis: Axis, grid: &TimeGrid, r0: f64) -> Result<TimeSeries, DynamicsError> {
    let (_, _, obs) = axis_observables(axis);
    let op = obs.operator(&build_operators());
    let modes = prepare(wp)?;
    assemble(&modes, obs, grid, |m| (0.0, transverse_terms(m, &op)), true, r0)
}

pub fn longitudinal_velocity_series(wp: &Wavepacket, grid: &TimeGrid) -> Result<TimeSeries, DynamicsError> {
    let op = build_operators().alpha_x;
    let modes = prepare(wp)?;
    assemble(&modes, Observable::AlphaX, grid, |m| longitudinal_terms(m, &op), false, 0.0)
}

/// Classical drift plus the longitudinal ZB tones divided by `iω`.
pub fn longitudinal_position_series(wp: &Wavepacket, grid: &TimeGrid, r0: f64) -> Result<TimeSeries, DynamicsError> {
    let op = build_operators().alpha_x;
    let modes = prepare(wp)?;
    assemble(&modes, Observable::Rx, grid, |m| longitudinal_terms(m, &op), true, r0)
}

/// Predicted line strength of one tone in an observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToneAmplitude {
    pub tone: Tone,
    pub omega: f64,
    /// Real amplitude of the cosine at `omega`; for positions the velocity
    /// amplitude divided by `omega` (or the drift rate when `omega = 0`).
    pub amplitude: f64,
}

/// Line strengths of the tones in [`Observable::expected_tones`], summed over
/// the packet's modes at `t = 0`.
pub fn tone_amplitudes(wp: &Wavepacket, observable: Observable) -> Result<Vec<ToneAmplitude>, DynamicsError> {
    let op = observable.operator(&build_operators());
    let modes = prepare(wp)?;
    let tones = observable.expected_tones();
    let mut sums = vec![Complex64::new(0.0, 0.0); tones.len()];
    let mut omegas = vec![0.0; tones.len()];
    for mode in &modes {
        for (i, &tone) in tones.iter().enumerate() {
            let amp = match tone {
                Tone::Larmor => {
                    let pos = ToneTerm::pair(mode, &op, Label::PLUS_UP, Label::PLUS_DOWN, 0.0).amplitude;
                    let neg = ToneTerm::pair(mode, &op, Label::MINUS_UP, Label::MINUS_DOWN, 0.0).amplitude;
                    // Re(B e^{−iωt}) = Re(B̄ e^{iωt})
                    pos + neg.conj()
                }
                Tone::Zb2 => {
                    ToneTerm::pair(mode, &op, Label::PLUS_UP, Label::MINUS_DOWN, 0.0).amplitude
                        + ToneTerm::pair(mode, &op, Label::PLUS_DOWN, Label::MINUS_UP, 0.0).amplitude
                }
                Tone::Zb1 => ToneTerm::pair(mode, &op, Label::PLUS_UP, Label::MINUS_UP, 0.0).amplitude,
                Tone::Zb3 => ToneTerm::pair(mode, &op, Label::PLUS_DOWN, Label::MINUS_DOWN, 0.0).amplitude,
            };
            let omega = mode.freqs.tone(tone);
            let scale = if observable.is_position() && omega > 0.0 { 1.0 / omega } else { 1.0 };
            sums[i] += amp * (mode.weight * scale);
            omegas[i] += mode.weight * mode.c_norm() * omega;
        }
    }
    let total: f64 = modes.iter().map(|m| m.weight * m.c_norm()).sum();
    Ok(tones
        .iter()
        .zip(sums.iter().zip(&omegas))
        .map(|(&tone, (a, w))| ToneAmplitude {
            tone,
            omega: w / total,
            amplitude: a.norm(),
        })
        .collect())
}

/// Closed-form series for any observable (`r0 = 0` for positions).
pub fn closed_form_series(wp: &Wavepacket, observable: Observable, grid: &TimeGrid) -> Result<TimeSeries, DynamicsError> {
    match observable {
        Observable::Sx => {
            let value = spin_x_constant(wp)?;
            TimeSeries::new(grid.times(), vec![value; grid.n], Observable::Sx)
        }
        Observable::Sy => transverse_spin_series_analytic(wp, Axis::Y, grid),
        Observable::Sz => transverse_spin_series_analytic(wp, Axis::Z, grid),
        Observable::AlphaX => longitudinal_velocity_series(wp, grid),
        Observable::AlphaY => transverse_velocity_series(wp, Axis::Y, grid),
        Observable::AlphaZ => transverse_velocity_series(wp, Axis::Z, grid),
        Observable::Rx => longitudinal_position_series(wp, grid, 0.0),
        Observable::Ry => transverse_position_series(wp, Axis::Y, grid, 0.0),
        Observable::Rz => transverse_position_series(wp, Axis::Z, grid, 0.0),
    }
}

/// A contracted matrix element and, where defined, its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementPair {
    pub numeric: Complex64,
    pub closed_form: Option<Complex64>,
}

impl ElementPair {
    pub fn residual(&self) -> Option<f64> {
        self.closed_form.map(|c| (c - self.numeric).norm())
    }
}

/// Transverse velocity matrix elements for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransverseElements {
    /// `⟨−,↓|α_j|−,↑⟩`
    pub negative_branch: ElementPair,
    /// `⟨+,↑|α_j|+,↓⟩`
    pub positive_branch: ElementPair,
    /// `⟨+,↑|α_j|−,↓⟩`
    pub zb_up_down: Complex64,
    /// `⟨+,↓|α_j|−,↑⟩`
    pub zb_down_up: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dominance {
    /// Both same-branch elements vanish.
    Vanishing,
    Balanced,
    NegativeBranch,
    PositiveBranch,
}

/// Amplitudes entering the closed-form series at one momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeSet {
    pub p: f64,
    pub delta: f64,
    /// `|⟨+,↑|α_x|−,↑⟩|`, the weight of the `ω₁ᶻᵇ` tone.
    pub n1: f64,
    /// `|⟨+,↓|α_x|−,↓⟩|`, the weight of the `ω₃ᶻᵇ` tone.
    pub n2: f64,
    /// `E₀cp/√(E₊E₋(E₊+E₀)(E₋+E₀))` per helicity; undefined at `p = 0`.
    pub n1_closed_form: Option<f64>,
    pub n2_closed_form: Option<f64>,
    pub zeta: f64,
    pub eta: f64,
    pub alpha_y: TransverseElements,
    pub alpha_z: TransverseElements,
    pub dominance: Dominance,
}

pub fn transverse_matrix_elements(p: f64, cfg: &ParticleConfig) -> Result<AmplitudeSet, DynamicsError> {
    let ops = build_operators();
    let h = build_hamiltonian(p, cfg)?;
    let eig = eigensystem_numeric(&h, &ops)?;
    let delta = cfg.delta_natural();
    let (e0_up, e0_down) = (1.0 + delta, 1.0 - delta);
    let (ep_up, ep_down) = (p.hypot(e0_up), p.hypot(e0_down));
    let (em_up, em_down) = (-ep_up, -ep_down);
    let hbar_omega_l = ep_up - ep_down;

    let n_closed = |e0: f64, ep: f64, em: f64| {
        let radicand = ep * em * (ep + e0) * (em + e0);
        (radicand > 0.0).then(|| e0 * p / radicand.sqrt())
    };
    let zeta_sq = em_up * em_down * (em_up + e0_up) * (em_down + e0_down);
    let eta_sq = ep_up * ep_down * (ep_up + e0_up) * (ep_down + e0_down);
    let zeta = 2.0 * zeta_sq.max(0.0).sqrt();
    let eta = 2.0 * eta_sq.sqrt();
    let closed_ok = p > 0.0 && zeta_sq > 0.0;
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);

    let axis_elements = |op: &Matrix4c, factor: Complex64, sign: f64| {
        let v = |l: Label| eig.spinor(l);
        let neg = p * (hbar_omega_l - 2.0 * delta) / zeta;
        let pos = p * (hbar_omega_l + 2.0 * delta) / eta;
        TransverseElements {
            negative_branch: ElementPair {
                numeric: element(op, v(Label::MINUS_DOWN), v(Label::MINUS_UP)),
                closed_form: closed_ok.then(|| factor * neg),
            },
            positive_branch: ElementPair {
                numeric: element(op, v(Label::PLUS_UP), v(Label::PLUS_DOWN)),
                closed_form: closed_ok.then(|| factor * pos * sign),
            },
            zb_up_down: element(op, v(Label::PLUS_UP), v(Label::MINUS_DOWN)),
            zb_down_up: element(op, v(Label::PLUS_DOWN), v(Label::MINUS_UP)),
        }
    };
    // α_y terms carry 1/i; α_z terms are real with opposite signs.
    let alpha_y = axis_elements(&ops.alpha_y, one / i, 1.0);
    let alpha_z = axis_elements(&ops.alpha_z, one, -1.0);

    let neg = alpha_y.negative_branch.numeric.norm();
    let pos = alpha_y.positive_branch.numeric.norm();
    let dominance = if neg.max(pos) < 1e-14 {
        Dominance::Vanishing
    } else if (neg - pos).abs() <= 1e-10 * neg.max(pos) {
        Dominance::Balanced
    } else if neg > pos {
        Dominance::NegativeBranch
    } else {
        Dominance::PositiveBranch
    };

    Ok(AmplitudeSet {
        p,
        delta,
        n1: element(&ops.alpha_x, eig.spinor(Label::PLUS_UP), eig.spinor(Label::MINUS_UP)).norm(),
        n2: element(&ops.alpha_x, eig.spinor(Label::PLUS_DOWN), eig.spinor(Label::MINUS_DOWN)).norm(),
        n1_closed_form: n_closed(e0_up, ep_up, em_up),
        n2_closed_form: n_closed(e0_down, ep_down, em_down),
        zeta,
        eta,
        alpha_y,
        alpha_z,
        dominance,
    })
}

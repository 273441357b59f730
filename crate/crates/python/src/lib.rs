//! Python bindings. All quantities are in natural units (ħ = c = m = 1).

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::collections::BTreeMap;
use zitter_core::algebra::{build_hamiltonian, build_operators, eigensystem_numeric, Label};
use zitter_core::dynamics::{self, Observable, TimeGrid};
use zitter_core::spectrum;
use zitter_core::verify::{self, VerifyConfig};
use zitter_core::wavepacket::{four_way_mix, gaussian_packet, Mix, Wavepacket};
use zitter_core::ParticleConfig;

fn err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(delta: f64) -> PyResult<ParticleConfig> {
    ParticleConfig::natural(delta).map_err(err)
}

fn mix_from(mix: Option<Vec<(f64, f64)>>) -> PyResult<Mix> {
    match mix {
        None => Ok(four_way_mix()),
        Some(v) if v.len() == 4 => Ok(std::array::from_fn(|k| Complex64::new(v[k].0, v[k].1))),
        Some(v) => Err(err(format!("mix needs 4 (re, im) pairs, got {}", v.len()))),
    }
}

fn packet(p0: f64, delta: f64, sigma_p: f64, modes: usize, mix: Option<Vec<(f64, f64)>>) -> PyResult<Wavepacket> {
    gaussian_packet(p0, sigma_p, mix_from(mix)?, modes, &config(delta)?).map_err(err)
}

/// Angular frequencies at momentum `p`, as a dict keyed like the CSV columns.
#[pyfunction]
fn frequencies(p: f64, delta: f64) -> PyResult<BTreeMap<&'static str, f64>> {
    let f = spectrum::frequency_set(p, &config(delta)?).map_err(err)?;
    Ok(BTreeMap::from([
        ("omega_L", f.omega_l),
        ("omega_zb1", f.omega_zb1),
        ("omega_zb2", f.omega_zb2),
        ("omega_zb3", f.omega_zb3),
        ("omega_sb", f.omega_sb),
        ("omega_ob1", f.omega_ob1),
        ("omega_ob2", f.omega_ob2),
        ("omega_forbidden", f.omega_forbidden),
    ]))
}

/// Momentum `γv` for a velocity given as a fraction of c.
#[pyfunction]
fn momentum_from_velocity(v: f64) -> PyResult<f64> {
    Ok(spectrum::momentum_from_velocity(v).map_err(err)?.p)
}

/// Eigenvalues from numeric diagonalization, ordered (+↑, +↓, −↑, −↓).
#[pyfunction]
fn energies(p: f64, delta: f64) -> PyResult<Vec<f64>> {
    let h = build_hamiltonian(p, &config(delta)?).map_err(err)?;
    let eig = eigensystem_numeric(&h, &build_operators()).map_err(err)?;
    Ok(Label::ALL.iter().map(|&l| eig.energy(l)).collect())
}

/// CSV text for one of the sweep figures ("fig1", "fig2", "fig3").
#[pyfunction]
#[pyo3(signature = (figure, delta = 0.4))]
fn sweep_csv(figure: &str, delta: f64) -> PyResult<String> {
    let fig = figure.parse().map_err(err)?;
    let rows = spectrum::sweep(&spectrum::default_velocity_grid(), &config(delta)?).map_err(err)?;
    Ok(zitter_core::io::sweep_csv(&rows, Some(fig), 1.0))
}

#[allow(clippy::too_many_arguments)]
fn series(
    closed: bool,
    observable: &str,
    p0: f64,
    delta: f64,
    t_max: f64,
    samples: usize,
    sigma_p: f64,
    modes: usize,
    mix: Option<Vec<(f64, f64)>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let obs: Observable = observable.parse().map_err(err)?;
    let wp = packet(p0, delta, sigma_p, modes, mix)?;
    let grid = TimeGrid::spanning(t_max, samples).map_err(err)?;
    let s = if closed {
        dynamics::closed_form_series(&wp, obs, &grid)
    } else {
        dynamics::expectation_series(&wp, obs, &grid)
    }
    .map_err(err)?;
    Ok((s.times, s.values))
}

/// Oracle-evolved `(times, values)`; positions are relative to `t = 0`.
#[pyfunction]
#[pyo3(signature = (observable, p0, delta, t_max, samples, sigma_p = 0.05, modes = 1, mix = None))]
#[allow(clippy::too_many_arguments)]
fn expectation_series(
    observable: &str,
    p0: f64,
    delta: f64,
    t_max: f64,
    samples: usize,
    sigma_p: f64,
    modes: usize,
    mix: Option<Vec<(f64, f64)>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    series(false, observable, p0, delta, t_max, samples, sigma_p, modes, mix)
}

/// Same signature as `expectation_series`, summed from the closed-form tones.
#[pyfunction]
#[pyo3(signature = (observable, p0, delta, t_max, samples, sigma_p = 0.05, modes = 1, mix = None))]
#[allow(clippy::too_many_arguments)]
fn closed_form_series(
    observable: &str,
    p0: f64,
    delta: f64,
    t_max: f64,
    samples: usize,
    sigma_p: f64,
    modes: usize,
    mix: Option<Vec<(f64, f64)>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    series(true, observable, p0, delta, t_max, samples, sigma_p, modes, mix)
}

/// Runs the verification pipeline and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (p0 = 0.5, delta = 0.4, samples = 4096, modes = 1))]
fn verify_report(p0: f64, delta: f64, samples: usize, modes: usize) -> PyResult<String> {
    let cfg = VerifyConfig {
        particle: config(delta)?,
        p0,
        samples,
        n_modes: modes,
        ..VerifyConfig::default()
    };
    Ok(verify::run(&cfg).map_err(err)?.to_json())
}

#[pymodule]
fn zitter(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(frequencies, m)?)?;
    m.add_function(wrap_pyfunction!(momentum_from_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(energies, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(expectation_series, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_series, m)?)?;
    m.add_function(wrap_pyfunction!(verify_report, m)?)?;
    m.add("FORBIDDEN_FREQUENCY", spectrum::FORBIDDEN_FREQUENCY)?;
    Ok(())
}

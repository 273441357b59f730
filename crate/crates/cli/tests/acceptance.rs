//! Acceptance suite: twelve criteria, one PASS/FAIL line each.
//! Exits non-zero if any criterion fails.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use zitter_core::algebra::{build_hamiltonian, build_operators, eigensystem_numeric, Label};
use zitter_core::dynamics::{
    closed_form_series, conservation_report, expectation_series, transverse_matrix_elements, Observable, TimeGrid,
};
use zitter_core::spectrum::{
    default_velocity_grid, free_zb_frequency, frequency_set, rest_frame_longitudinal, split_energies, sweep,
    FrequencySet, Tone, FORBIDDEN_FREQUENCY,
};
use zitter_core::verify::{self, ObservableCheck, VerifyConfig, VerifyReport};
use zitter_core::wavepacket::{equal_mix, four_way_mix, gaussian_packet, single_mode, Mix, Wavepacket};
use zitter_core::ParticleConfig;

type Outcome = Result<String, String>;

fn natural(delta: f64) -> ParticleConfig {
    ParticleConfig::natural(delta).unwrap()
}

/// p ∈ {0, 0.1, …, 5}, Δ ∈ {0, 0.1, …, 0.9}.
fn full_grid() -> Vec<(f64, f64)> {
    let mut g = Vec::with_capacity(510);
    for i in 0..51 {
        for j in 0..10 {
            g.push((i as f64 / 10.0, j as f64 / 10.0));
        }
    }
    g
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn eigenvalue_oracle() -> Outcome {
    let start = Instant::now();
    let ops = build_operators();
    let mut worst: f64 = 0.0;
    for (p, delta) in full_grid() {
        let cfg = natural(delta);
        let eig = eigensystem_numeric(&build_hamiltonian(p, &cfg).unwrap(), &ops).unwrap();
        let (up, down) = split_energies(p, delta);
        for (label, want) in [
            (Label::PLUS_UP, up),
            (Label::PLUS_DOWN, down),
            (Label::MINUS_UP, -up),
            (Label::MINUS_DOWN, -down),
        ] {
            worst = worst.max((eig.energy(label) - want).abs() / want.abs());
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || format!("worst relative error {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("510 points, worst relative error {worst:.1e}, {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

fn rest_frame_longitudinal_frequencies() -> Outcome {
    let cfg = natural(0.4);
    let (w1, w3) = rest_frame_longitudinal(&cfg).unwrap();
    let f = frequency_set(0.0, &cfg).unwrap();
    let errs = [(w1 - 2.8).abs(), (w3 - 1.2).abs(), (f.omega_zb1 - 2.8).abs(), (f.omega_zb3 - 1.2).abs()];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("ω₁ = {w1}, ω₃ = {w3}"))?;
    Ok(format!("ω₁ᶻᵇ(0) = {w1}, ω₃ᶻᵇ(0) = {w3}, worst error {worst:.1e}"))
}

fn orbital_beat_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (p, delta) in full_grid() {
        let f = frequency_set(p, &natural(delta)).unwrap();
        let twice = 2.0 * f.omega_l;
        let err = if twice == 0.0 { f.omega_ob1.abs() } else { (f.omega_ob1 - twice).abs() / twice };
        worst = worst.max(err);
    }
    ensure(worst <= 1e-12, || format!("worst relative error {worst:e}"))?;
    Ok(format!("ω₁ᵒᵇ = 2ω_L on 510 points, worst relative error {worst:.1e}"))
}

fn forbidden_band() -> Outcome {
    let limit = FORBIDDEN_FREQUENCY;
    let mut below_window = 0;
    let mut literal_violations = 0;
    let mut on_edge = 0;
    for (p, delta) in full_grid() {
        let f = frequency_set(p, &natural(delta)).unwrap();
        if p > 0.0 {
            ensure(f.omega_l < limit && limit < f.omega_zb2, || {
                format!("p={p} Δ={delta}: ω_L={} ω₂={}", f.omega_l, f.omega_zb2)
            })?;
        }
        ensure(f.omega_zb1 > limit || (delta == 0.0 && p == 0.0), || {
            format!("p={p} Δ={delta}: ω₁={}", f.omega_zb1)
        })?;
        if delta > 0.0 {
            // ω₃ = 2√(p² + (1−Δ)²) < 2 exactly when p < √(Δ(2−Δ))
            let edge = (delta * (2.0 - delta)).sqrt();
            if (p - edge).abs() <= 1e-9 {
                ensure((f.omega_zb3 - limit).abs() <= 1e-12, || format!("p={p} Δ={delta}: ω₃={} off the edge", f.omega_zb3))?;
                on_edge += 1;
            } else if p < edge {
                below_window += 1;
                ensure(f.omega_zb3 < limit, || format!("p={p} Δ={delta}: ω₃={}", f.omega_zb3))?;
            } else {
                ensure(f.omega_zb3 > limit, || format!("p={p} Δ={delta}: ω₃={} not above limit", f.omega_zb3))?;
            }
            if f.omega_zb3 >= limit {
                literal_violations += 1;
            }
        }
    }
    Ok(format!(
        "ω_L < 2 < ω₂ᶻᵇ (p>0) and ω₁ᶻᵇ > 2 on the grid; ω₃ᶻᵇ < 2 on all {below_window} points with p < √(Δ(2−Δ)) \
         and > 2 beyond it, = 2 on {on_edge} edge points ({literal_violations} grid points have ω₃ᶻᵇ ≥ 2, \
         so ω₃ᶻᵇ < 2 cannot hold on the whole grid)"
    ))
}

fn motional_shifts() -> Outcome {
    let rows = sweep(&default_velocity_grid(), &natural(0.4)).unwrap();
    type Getter = fn(&FrequencySet, f64) -> f64;
    let series: [(&str, Getter, bool); 7] = [
        ("ω^zb", |_, p| free_zb_frequency(p), true),
        ("ω₁ᶻᵇ", |f, _| f.omega_zb1, true),
        ("ω₂ᶻᵇ", |f, _| f.omega_zb2, true),
        ("ω₃ᶻᵇ", |f, _| f.omega_zb3, true),
        ("ω^sb", |f, _| f.omega_sb, true),
        ("ω_L", |f, _| f.omega_l, false),
        ("ω₁ᵒᵇ", |f, _| f.omega_ob1, false),
    ];
    for (name, get, increasing) in series {
        for pair in rows.windows(2) {
            let (a, b) = (get(&pair[0].freqs, pair[0].p), get(&pair[1].freqs, pair[1].p));
            let ok = if increasing { b > a } else { b < a };
            ensure(ok, || format!("{name} not monotone between v={} and v={}", pair[0].v, pair[1].v))?;
        }
    }
    Ok(format!("{} velocities in [0, 0.99]: 5 blue-shifted, 2 red-shifted, every pair strict", rows.len()))
}

fn spectral_config(observables: Vec<Observable>) -> VerifyConfig {
    VerifyConfig {
        particle: natural(0.4),
        p0: 0.5,
        n_modes: 1,
        mix: four_way_mix(),
        samples: 4096,
        periods: 20.0,
        observables,
        ..VerifyConfig::default()
    }
}

/// Checks that exactly `tones` were found, each required, and the beat.
fn channel(check: &ObservableCheck, tones: &[Tone]) -> Result<String, String> {
    let name = check.observable;
    ensure(check.passed, || format!("{name}: {:?}", check.errors))?;
    let report = check.tones.as_ref().ok_or_else(|| format!("{name}: no tone report"))?;
    let mut found: Vec<Tone> = report.assignments.iter().filter_map(|a| a.label).collect();
    found.sort_by_key(|t| t.name());
    let mut want = tones.to_vec();
    want.sort_by_key(|t| t.name());
    ensure(found == want && report.assignments.len() == tones.len(), || {
        format!("{name}: peaks {:?}", report.assignments)
    })?;
    let residual = report.assignments.iter().map(|a| a.residual.abs()).fold(0.0, f64::max);
    let beat = check.beat.as_ref().ok_or_else(|| format!("{name}: no beat check"))?;
    ensure(beat.passed, || format!("{name}: beat {beat:?}"))?;
    Ok(format!(
        "{name} tone err {residual:.1e}, beat err {:.1e}",
        beat.rel_error.unwrap_or(f64::NAN)
    ))
}

fn run_channels(observables: &[Observable], tones: &[Tone]) -> Result<(Vec<String>, Duration), String> {
    let start = Instant::now();
    let report: VerifyReport = verify::run(&spectral_config(observables.to_vec())).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let parts = report
        .observables
        .iter()
        .map(|c| channel(c, tones))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((parts, elapsed))
}

fn spin_channel() -> Outcome {
    let (parts, elapsed) = run_channels(&[Observable::Sy, Observable::Sz], &[Tone::Larmor, Tone::Zb2])?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("{}; {:.2} s", parts.join("; "), elapsed.as_secs_f64()))
}

fn longitudinal_channel() -> Outcome {
    let (parts, _) = run_channels(&[Observable::AlphaX], &[Tone::Zb1, Tone::Zb3])?;
    Ok(parts.join("; "))
}

/// `r_j` at whole periods of `ω₂ᶻᵇ`: the `ω₂ᶻᵇ` part integrates to zero
/// there, so whatever remains is the `ω_L` tone.
fn larmor_residue(wp: &Wavepacket, omega_zb2: f64) -> f64 {
    let grid = TimeGrid::new(0.0, 2.0 * PI / omega_zb2, 9).unwrap();
    [Observable::Ry, Observable::Rz]
        .iter()
        .map(|&o| {
            expectation_series(wp, o, &grid)
                .unwrap()
                .values
                .iter()
                .fold(0.0, |m: f64, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

fn transverse_channel() -> Outcome {
    let (parts, _) = run_channels(&[Observable::Ry, Observable::Rz], &[Tone::Larmor, Tone::Zb2])?;
    let mut nulls = Vec::new();
    for (p, delta, label) in [(0.0, 0.4, "p=0"), (0.5, 0.0, "Δ=0")] {
        let cfg = natural(delta);
        let wp = single_mode(p, four_way_mix(), &cfg).unwrap();
        let f = frequency_set(p, &cfg).unwrap();
        let residue = larmor_residue(&wp, f.omega_zb2);
        let el = transverse_matrix_elements(p, &cfg).unwrap();
        let elements = [el.alpha_y, el.alpha_z]
            .iter()
            .map(|t| t.positive_branch.numeric.norm().max(t.negative_branch.numeric.norm()))
            .fold(0.0, f64::max);
        let worst = residue.max(elements);
        ensure(worst <= 1e-12, || format!("{label}: ω_L residue {residue:e}, elements {elements:e}"))?;
        nulls.push(format!("{label} ω_L null {worst:.1e}"));
    }
    // the control: away from both nulls the same probe sees the tone
    let control = larmor_residue(&single_mode(0.5, four_way_mix(), &natural(0.4)).unwrap(), frequency_set(0.5, &natural(0.4)).unwrap().omega_zb2);
    ensure(control > 1e-3, || format!("control residue only {control:e}"))?;
    Ok(format!("{}; {}", parts.join("; "), nulls.join(", ")))
}

fn seeded_mix(seed: u64) -> Mix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| Complex64::from_polar(0.5, 2.0 * PI * rng.random::<f64>()))
}

/// Every packet the suite evolves, with a label.
fn suite_packets() -> Vec<(String, Wavepacket)> {
    let mut packets = vec![
        ("single p=0.5 Δ=0.4".to_string(), single_mode(0.5, four_way_mix(), &natural(0.4)).unwrap()),
        ("single p=0 Δ=0.4".to_string(), single_mode(0.0, four_way_mix(), &natural(0.4)).unwrap()),
        ("single p=0.5 Δ=0".to_string(), single_mode(0.5, four_way_mix(), &natural(0.0)).unwrap()),
        ("single p=2 Δ=0.9 real mix".to_string(), single_mode(2.0, equal_mix(), &natural(0.9)).unwrap()),
        ("gaussian 64 modes".to_string(), gaussian_packet(0.5, 0.05, four_way_mix(), 64, &natural(0.4)).unwrap()),
        ("gaussian 16 modes Δ=-0.3".to_string(), gaussian_packet(1.0, 0.1, equal_mix(), 16, &natural(-0.3)).unwrap()),
    ];
    for seed in 1..=3 {
        packets.push((
            format!("seeded mix {seed}"),
            single_mode(0.3 * seed as f64, seeded_mix(seed), &natural(0.2 * seed as f64)).unwrap(),
        ));
    }
    packets
}

fn suite_grid(wp: &Wavepacket) -> TimeGrid {
    let p = wp.grid()[wp.len() / 2];
    let f = frequency_set(p, wp.config()).unwrap();
    let slowest = Tone::ALL.iter().map(|&t| f.tone(t)).filter(|&w| w > 1e-9).fold(f64::INFINITY, f64::min);
    TimeGrid::periods(slowest, 20.0, 1024).unwrap()
}

fn conservation() -> Outcome {
    let mut worst: f64 = 0.0;
    let packets = suite_packets();
    for (name, wp) in &packets {
        let r = conservation_report(wp, &suite_grid(wp)).map_err(|e| e.to_string())?;
        ensure(r.max_drift() <= 1e-10, || format!("{name}: {r:?}"))?;
        worst = worst.max(r.max_drift());
    }
    Ok(format!("{} packets, worst drift of ⟨S_x⟩, ⟨H⟩, norm, populations {worst:.1e}", packets.len()))
}

fn kinematic_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, wp) in suite_packets() {
        let p = wp.grid()[wp.len() / 2];
        let f = frequency_set(p, wp.config()).unwrap();
        let dt = 2.0 * PI / f.omega_zb1 / 200.0;
        let grid = TimeGrid::new(0.0, dt, 801).unwrap();
        let r = expectation_series(&wp, Observable::Rx, &grid).map_err(|e| e.to_string())?.values;
        let v = expectation_series(&wp, Observable::AlphaX, &grid).map_err(|e| e.to_string())?.values;
        for k in 2..r.len() - 2 {
            // fourth-order central difference
            let d = (r[k - 2] - 8.0 * r[k - 1] + 8.0 * r[k + 1] - r[k + 2]) / (12.0 * dt);
            worst = worst.max((d - v[k]).abs());
        }
        ensure(worst <= 1e-6, || format!("{name}: |dr/dt − α| = {worst:e}"))?;
    }
    Ok(format!("dt = T₁/200, five-point stencil, worst |d⟨r_x⟩/dt − ⟨α_x⟩| = {worst:.1e}"))
}

fn closed_form_vs_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let packets = suite_packets();
    for (name, wp) in &packets {
        let grid = suite_grid(wp);
        for obs in Observable::ALL {
            let a = expectation_series(wp, obs, &grid).map_err(|e| e.to_string())?;
            let b = closed_form_series(wp, obs, &grid).map_err(|e| e.to_string())?;
            let d = a.max_abs_difference(&b);
            ensure(d <= 1e-9, || format!("{name} {obs}: {d:e}"))?;
            worst = worst.max(d);
        }
    }
    Ok(format!("{} packets × 9 observables, worst pointwise deviation {worst:.1e}", packets.len()))
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_zitter");
    let run = || Command::new(bin).arg("verify").output().map_err(|e| e.to_string());
    let (a, b) = (run()?, run()?);
    ensure(a.status.code() == Some(0), || {
        format!("exit {:?}: {}", a.status.code(), String::from_utf8_lossy(&a.stderr))
    })?;
    ensure(b.status.code() == Some(0), || format!("second run exit {:?}", b.status.code()))?;
    ensure(a.stdout == b.stdout, || "outputs differ".to_string())?;
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).map_err(|e| e.to_string())?;
    ensure(report["passed"] == serde_json::Value::Bool(true), || "report not passed".into())?;
    Ok(format!("`zitter verify` exit 0, two runs byte-identical ({} bytes)", a.stdout.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 12] = [
        ("eigenvalue oracle equivalence", eigenvalue_oracle),
        ("rest-frame longitudinal frequencies", rest_frame_longitudinal_frequencies),
        ("orbital beat identity", orbital_beat_identity),
        ("forbidden band", forbidden_band),
        ("motional shifts", motional_shifts),
        ("spectral pipeline, spin channel", spin_channel),
        ("spectral pipeline, longitudinal channel", longitudinal_channel),
        ("spectral pipeline, transverse channel", transverse_channel),
        ("conservation suite", conservation),
        ("kinematic consistency", kinematic_consistency),
        ("closed-form vs oracle series", closed_form_vs_oracle),
        ("CLI determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

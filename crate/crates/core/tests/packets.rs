use zitter_core::dynamics::{conservation_report, expectation_series, Observable, TimeGrid};
use zitter_core::wavepacket::{four_way_mix, gaussian_packet, validate, Wavepacket};
use zitter_core::ParticleConfig;

fn packet(n: usize) -> Wavepacket {
    gaussian_packet(0.5, 0.05, four_way_mix(), n, &ParticleConfig::natural(0.4).unwrap()).unwrap()
}

#[test]
fn quadrature_converges_between_64_and_128_modes() {
    let (coarse, fine) = (packet(64), packet(128));
    let grid = TimeGrid::spanning(60.0, 96).unwrap();
    for obs in Observable::ALL {
        let a = expectation_series(&coarse, obs, &grid).unwrap();
        let b = expectation_series(&fine, obs, &grid).unwrap();
        let d = a.max_abs_difference(&b);
        assert!(d <= 1e-6, "{obs}: {d:e}");
    }
}

#[test]
fn trapezoid_moments_of_the_envelope() {
    // |c(p)|² ∝ exp(−(p−p0)²/(2σ²)): unit mass, mean p0, variance σ²
    let wp = packet(128);
    let d = validate(&wp);
    assert!(d.normalization_residual < 1e-12);
    assert!((d.mean_momentum - 0.5).abs() < 1e-12);
    let norm: f64 = wp.modes().map(|(_, w, c)| w * c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    let var: f64 = wp
        .modes()
        .map(|(p, w, c)| w * (p - 0.5).powi(2) * c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        / norm;
    assert!((var.sqrt() - 0.05).abs() < 1e-4, "{}", var.sqrt());
}

#[test]
fn multi_mode_packets_conserve() {
    let wp = packet(64);
    let report = conservation_report(&wp, &TimeGrid::spanning(500.0, 128).unwrap()).unwrap();
    assert!(report.max_drift() <= 1e-10, "{report:?}");
}

#[test]
fn json_round_trip_preserves_dynamics() {
    let wp = packet(16);
    let back = Wavepacket::from_json(&wp.to_json()).unwrap();
    let grid = TimeGrid::spanning(20.0, 64).unwrap();
    for obs in [Observable::Sy, Observable::Rx] {
        let a = expectation_series(&wp, obs, &grid).unwrap();
        let b = expectation_series(&back, obs, &grid).unwrap();
        assert!(a.max_abs_difference(&b) < 1e-13);
    }
}

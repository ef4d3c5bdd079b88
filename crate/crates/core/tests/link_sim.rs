use fawna_core::link_sim::{effective_rate, Forwarding};
use fawna_core::{
    capacity_report_at_rate, empirical_distortion_vector, simulate_link, wireless_capacity,
    Complex64, Error, LinkConfig, QuantizerModel, SimRun, ZadorGershoConstants,
};

const TRIALS: u64 = 1_000_000;

/// Unit gains, `P/(N₀W) = 100`, `W = 1 MHz`, quantizer rate `l` bits per complex sample.
fn unit_link(r: usize, l: f64) -> LinkConfig {
    LinkConfig::unit_gains(100e6, 1e6, r, l * r as f64 * 1e6).unwrap()
}

#[test]
fn unquantized_link_reaches_wireless_capacity() {
    let cfg = unit_link(3, 16.0);
    let rep = simulate_link(&SimRun::unquantized(cfg.clone(), TRIALS, 1).unwrap()).unwrap();
    let capacity = wireless_capacity(&cfg);
    assert!((rep.empirical_rate - capacity).abs() / capacity < 0.02);
    assert_eq!(rep.effective_rate, None);
    assert!(rep.moment_diagnostics.is_empty());
}

#[test]
fn single_interface_matches_analytical_bound() {
    let cfg = unit_link(1, 16.0);
    let rep = simulate_link(&SimRun::new(cfg, TRIALS, 2).unwrap()).unwrap();
    assert_eq!(rep.effective_rate, Some(16));
    let rel = (rep.empirical_rate - rep.analytical_lower_bound).abs() / rep.analytical_lower_bound;
    assert!(rel < 0.05, "{rel}");
    assert!(rep.empirical_rate >= rep.analytical_lower_bound - 3.0 * rep.bootstrap_standard_error);
    assert!(rep.empirical_rate <= rep.upper_bound + 3.0 * rep.bootstrap_standard_error);
}

#[test]
fn silent_transmitter_gives_no_rate() {
    let cfg = LinkConfig::unit_gains(1e-9, 1e6, 2, 32e6).unwrap();
    let rep = simulate_link(&SimRun::new(cfg, 100_000, 3).unwrap()).unwrap();
    // The estimator's own bias is about W r / (n ln 2), roughly 30 bits/sec here.
    assert!(rep.empirical_rate < 200.0, "{}", rep.empirical_rate);
}

#[test]
fn per_interface_distortion_follows_the_scalar_model() {
    let gains = vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.6, -0.8),
        Complex64::new(2.0, 1.0),
    ];
    let cfg = LinkConfig::new(50e6, 1.0, 1e6, gains, 4.0 * 12.0 * 1e6).unwrap();
    let run = SimRun::new(cfg.clone(), 400_000, 4).unwrap();
    assert_eq!(run.effective_rate(), Some(12));
    let measured = empirical_distortion_vector(&run).unwrap();
    let c = ZadorGershoConstants::scalar_product() * (-12.0f64).exp2();
    for (m, p) in measured.iter().zip(cfg.received_power()) {
        assert!((m / (p * c) - 1.0).abs() < 0.1, "{m} vs {}", p * c);
    }
    // The silent interface sees noise only.
    assert!((measured[1] / (cfg.noise_density() * c) - 1.0).abs() < 0.1);
}

#[test]
fn very_fine_quantization_is_nearly_transparent() {
    let cfg = unit_link(2, 24.0);
    let rep = simulate_link(&SimRun::new(cfg.clone(), 50_000, 5).unwrap()).unwrap();
    for (d, p) in rep.distortion.iter().zip(cfg.received_power()) {
        assert!(*d < 1e-5 * p);
    }
}

#[test]
fn odd_rates_are_floored_and_reported() {
    let cfg = unit_link(2, 13.0);
    let run = SimRun::new(cfg.clone(), 20_000, 6).unwrap();
    let rep = simulate_link(&run).unwrap();
    assert_eq!(rep.nominal_rate, 13.0);
    assert_eq!(rep.effective_rate, Some(12));
    let scalar = QuantizerModel::scalar();
    assert_eq!(
        rep.analytical_lower_bound,
        capacity_report_at_rate(&cfg, &scalar, 13.0)
            .unwrap()
            .lower_bound
    );
    assert_eq!(
        rep.effective_lower_bound,
        capacity_report_at_rate(&cfg, &scalar, 12.0)
            .unwrap()
            .lower_bound
    );
}

#[test]
fn too_coarse_rate_is_inadmissible() {
    let cfg = unit_link(2, 1.5);
    assert!(matches!(
        effective_rate(&cfg),
        Err(Error::Inadmissible { .. })
    ));
    assert!(matches!(
        SimRun::new(cfg, 20_000, 0),
        Err(Error::Inadmissible { .. })
    ));
}

#[test]
fn identical_inputs_reproduce_bit_for_bit() {
    let run = SimRun::new(unit_link(3, 10.0), 50_000, 77).unwrap();
    let a = simulate_link(&run).unwrap();
    let b = simulate_link(&run).unwrap();
    assert_eq!(a, b);
    let other = simulate_link(&SimRun::new(unit_link(3, 10.0), 50_000, 78).unwrap()).unwrap();
    assert_ne!(a.empirical_rate, other.empirical_rate);
}

#[test]
fn worker_count_does_not_change_results() {
    let run = SimRun::new(unit_link(2, 12.0), 60_000, 9).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = single.install(|| simulate_link(&run).unwrap());
    let b = many.install(|| simulate_link(&run).unwrap());
    assert_eq!(a, b);
}

#[test]
fn equal_variances_share_a_codebook() {
    let run = SimRun::new(unit_link(3, 8.0), 20_000, 0).unwrap();
    let Forwarding::Quantized(qs) = run.forwarding() else {
        panic!()
    };
    assert_eq!(qs.len(), 3);
    assert!(qs.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(qs[0].source_variance(), 0.5 * (1.0 + 100.0));
}

#[test]
fn report_survives_json() {
    let rep = simulate_link(&SimRun::new(unit_link(2, 8.0), 20_000, 1).unwrap()).unwrap();
    let json = serde_json::to_string(&rep).unwrap();
    let back: fawna_core::SimReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rep);
}

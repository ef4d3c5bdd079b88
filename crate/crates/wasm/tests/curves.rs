use fawna_wasm::{bandwidth_curve, fiber_rate_curve, interface_curve};

#[test]
fn fiber_curve_climbs_to_the_upper_bound() {
    let c = fiber_rate_curve(25e6, 1e6, 5, 1.0, 200.0, 100).unwrap();
    assert_eq!(c.x().len(), 100);
    assert!(c.lower().windows(2).all(|w| w[1] >= w[0]));
    let last = c.lower().len() - 1;
    assert!((c.upper()[last] - c.lower()[last]) / c.upper()[last] < 1e-6);
    let top = c.lower().iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(c.best(), top);
}

#[test]
fn interface_curve_matches_the_reference_optima() {
    for (p, r) in [(20e6, 7.0), (200e6, 3.0), (2000e6, 2.0)] {
        let c = interface_curve(p, 5e6, 100e6, 1.0).unwrap();
        assert_eq!(c.argmax(), r);
        assert_eq!(c.x().len(), 20);
    }
}

#[test]
fn bandwidth_curve_peaks_near_54_5_mhz() {
    let c = bandwidth_curve(100e6, 2, 200e6, 1.0).unwrap();
    assert!((c.argmax() - 54.5e6).abs() < 1e6);
    assert!(c.best() >= c.lower().iter().cloned().fold(f64::MIN, f64::max) * (1.0 - 1e-9));
}

#[test]
fn bad_inputs_are_errors() {
    assert!(interface_curve(20e6, 5e6, 1e6, 1.0).is_err());
    assert!(fiber_rate_curve(25e6, 1e6, 5, 3.0, 10.0, 10).is_err());
    assert!(bandwidth_curve(100e6, 0, 200e6, 1.0).is_err());
}

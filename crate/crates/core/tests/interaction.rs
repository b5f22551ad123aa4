use dsas_core::interaction::{assistance_torque, driver_activity, weighting_mu, ActivityParams, WeightingParams};
use proptest::prelude::*;

fn w() -> WeightingParams {
    WeightingParams::default()
}

fn a() -> ActivityParams {
    ActivityParams::default()
}

/// Independent evaluation of the bell-shaped weighting.
fn bell(theta: f64) -> f64 {
    let base = ((theta - 0.5) / 0.38f64).abs();
    (1.0 / (1.0 + base.powi(-4)) + 0.25).min(1.0)
}

#[test]
fn high_activity_anchor() {
    let mu = weighting_mu(0.97, &w());
    assert!((mu - 0.951).abs() <= 0.02, "{mu}");
    assert!((mu - bell(0.97)).abs() < 1e-14);
}

#[test]
fn singular_point_and_idle_driver() {
    assert_eq!(weighting_mu(0.5, &w()), 0.25);
    let idle = weighting_mu(0.0, &w());
    assert!((idle - 1.0).abs() < 1e-3 && idle <= 1.0, "{idle}");
    assert!((idle - bell(0.0)).abs() < 1e-14);
}

#[test]
fn medium_activity_gives_low_assistance() {
    let mu = weighting_mu(0.34, &w());
    assert!((mu - 0.28).abs() < 0.01, "{mu}");
}

#[test]
fn activity_anchors() {
    assert_eq!(driver_activity(0.0, 0.7, &a()).unwrap(), 0.0);
    let full = driver_activity(15.0, 1.0, &a()).unwrap();
    assert!((full - (1.0 - (-8.0f64).exp())).abs() <= 1e-12);
    let half = driver_activity(7.5, 1.0, &a()).unwrap();
    assert!((half - (1.0 - (-1.0f64).exp())).abs() <= 1e-12);
    // saturates at T_d_max
    assert_eq!(driver_activity(-40.0, 1.0, &a()).unwrap(), full);
    assert_eq!(driver_activity(3.0, 0.0, &a()).unwrap(), 0.0);
}

#[test]
fn assistance_examples() {
    assert_eq!(assistance_torque(0.0, 0.3, &w()), 0.0);
    assert_eq!(assistance_torque(15.0, 0.5, &w()), 3.75);
}

proptest! {
    #[test]
    fn weighting_is_symmetric_about_center(d in 0.0f64..2.0) {
        prop_assert!((weighting_mu(0.5 + d, &w()) - weighting_mu(0.5 - d, &w())).abs() <= 1e-12);
    }

    #[test]
    fn weighting_stays_in_range(theta in -1.0f64..2.0) {
        let mu = weighting_mu(theta, &w());
        prop_assert!((0.25..=1.0).contains(&mu));
    }

    #[test]
    fn activity_monotone_in_torque(t in 0.0f64..20.0, dt in 0.0f64..5.0, ds in 0.0f64..=1.0) {
        let lo = driver_activity(t, ds, &a()).unwrap();
        let hi = driver_activity(t + dt, ds, &a()).unwrap();
        prop_assert!(hi >= lo);
        prop_assert!((0.0..1.0).contains(&hi));
    }

    #[test]
    fn activity_monotone_in_state(t in -20.0f64..20.0, ds in 0.0f64..1.0, dds in 0.0f64..1.0) {
        let hi_ds = (ds + dds).min(1.0);
        prop_assert!(driver_activity(t, hi_ds, &a()).unwrap() >= driver_activity(t, ds, &a()).unwrap());
    }

    #[test]
    fn assistance_keeps_sign(u in -30.0f64..30.0, theta in 0.0f64..1.0) {
        let tc = assistance_torque(u, theta, &w());
        prop_assert!(tc * u >= 0.0);
        prop_assert!(tc.abs() <= u.abs());
    }
}

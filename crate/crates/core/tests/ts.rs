use dsas_core::ts::{build_ts_model, AffineModel, default_output_matrix, direct_matrices, memberships, SchedulingBounds, TsModel};
use dsas_core::vehicle::{DriverGains, VehicleParams};
use nalgebra::Matrix6;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model() -> TsModel {
    build_ts_model(
        &VehicleParams::default(),
        &DriverGains::default(),
        &SchedulingBounds::default(),
        &default_output_matrix(),
    )
    .unwrap()
}

#[test]
fn eight_vertices_with_shared_wind_channel() {
    let ts = model();
    assert_eq!(ts.num_rules(), 8);
    assert!(ts.vertices.iter().all(|v| v.bw == ts.vertices[0].bw));
}

#[test]
fn low_speed_corner_row_four() {
    let ts = model();
    // (v_min, 1/v_min, mu_min): b = (0, 1, 0)
    let v = &ts.vertices[2];
    assert_eq!(v.z, [9.0, 1.0 / 9.0, 0.25]);
    let row: Vec<f64> = v.a.row(3).iter().copied().collect();
    assert_eq!(row, vec![1.0, 5.0, 9.0, 0.0, 0.0, 0.0]);
}

#[test]
fn torque_channel_scales_with_mu() {
    for v in &model().vertices {
        let expect = if v.z[2] == 1.0 { 1.25 } else { 0.3125 };
        assert!((v.bu[5] - expect).abs() < 1e-15);
        assert_eq!(v.bu.iter().filter(|e| **e != 0.0).count(), 1);
    }
}

#[test]
fn membership_at_interior_point() {
    let b = SchedulingBounds::default();
    let m = memberships(17.0, 0.625, &b);
    assert!((m.w[0] - 0.5).abs() < 1e-12);
    let w1 = (1.0 / 17.0 - 1.0 / 25.0) / (1.0 / 9.0 - 1.0 / 25.0);
    assert!((m.w[1] - w1).abs() < 1e-15 && (w1 - 0.2645).abs() < 1e-3);
    assert!((m.w[2] - 0.5).abs() < 1e-12);
    assert!((m.eta[0] - 0.18387).abs() < 1e-4, "{}", m.eta[0]);
}

#[test]
fn corner_membership_is_indicator() {
    let b = SchedulingBounds::default();
    let m = memberships(9.0, 0.25, &b);
    for (i, e) in m.eta.iter().enumerate() {
        assert_eq!(*e, if i == 2 { 1.0 } else { 0.0 });
    }
    assert!(!m.clamped);
}

#[test]
fn vertices_are_reproduced_at_their_corners() {
    let ts = model();
    for v in &ts.vertices {
        // the physical pair (v, 1/v) only reaches the two consistent corners
        if (v.z[0] * v.z[1] - 1.0).abs() > 1e-12 {
            continue;
        }
        let (a, bu) = ts.reconstruct(v.z[0], v.z[2]);
        assert!((a - v.a).amax() < 1e-12);
        assert!((bu - v.bu).amax() < 1e-15);
    }
}

#[test]
fn box_center_is_vertex_average() {
    let ts = model();
    let affine = AffineModel::new(&VehicleParams::default(), &DriverGains::default());
    let [(l1, h1), (l2, h2), (l3, h3)] = ts.bounds.axes();
    let avg: Matrix6<f64> = ts.vertices.iter().map(|v| v.a).sum::<Matrix6<f64>>() / 8.0;
    let center = affine.a_at(0.5 * (l1 + h1), 0.5 * (l2 + h2));
    assert!((avg - center).amax() < 1e-10);
    let bu_avg = ts.vertices.iter().map(|v| v.bu[5]).sum::<f64>() / 8.0;
    assert!((bu_avg - affine.bu_at(0.5 * (l3 + h3))[5]).abs() < 1e-15);
}

#[test]
fn reconstruction_is_exact_on_grid() {
    let ts = model();
    let p = VehicleParams::default();
    let g = DriverGains::default();
    let b = ts.bounds;
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let v = b.v_min + (b.v_max - b.v_min) * i as f64 / 19.0;
            let mu = b.mu_min + (b.mu_max - b.mu_min) * j as f64 / 19.0;
            let (ar, br) = ts.reconstruct(v, mu);
            let (ad, bd) = direct_matrices(&p, &g, v, mu).unwrap();
            worst = worst.max((ar - ad).amax()).max((br - bd).amax());
        }
    }
    assert!(worst < 1e-10, "{worst:e}");

    let (a, b) = ts.reconstruct(15.0, 0.6);
    let (ad, bd) = direct_matrices(&p, &g, 15.0, 0.6).unwrap();
    assert!((a - ad).amax() < 1e-10 && (b - bd).amax() < 1e-10);
}

#[test]
fn memberships_form_a_simplex() {
    let b = SchedulingBounds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let m = memberships(rng.gen_range(9.0..=25.0), rng.gen_range(0.25..=1.0), &b);
        assert!(m.eta.iter().all(|e| *e >= 0.0));
        assert!((m.eta.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn text_form_round_trips() {
    let ts = model();
    let text = ts.to_text();
    let back = TsModel::from_text(&text).unwrap();
    assert_eq!(back, ts);
    assert_eq!(back.to_text(), text);
    assert_eq!(back.fingerprint(), ts.fingerprint());
}

#[test]
fn fingerprint_tracks_model_data() {
    let mut p = VehicleParams::default();
    p.c_f *= 1.01;
    let other = build_ts_model(&p, &DriverGains::default(), &SchedulingBounds::default(), &default_output_matrix()).unwrap();
    assert_ne!(other.fingerprint(), model().fingerprint());
}

#[test]
fn truncated_text_is_rejected() {
    let text = model().to_text();
    let cut: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
    assert!(TsModel::from_text(&cut).is_err());
}

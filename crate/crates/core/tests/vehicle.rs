use dsas_core::vehicle::{
    build_driver_coeffs, build_driver_in_loop, build_plant_matrices, driver_torque, search_driver_gains,
    spectral_abscissa, state_constraint_rows, DriverGains, LateralState, VehicleParams,
};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn table() -> VehicleParams {
    VehicleParams::default()
}

#[test]
fn lateral_stiffness_entry_at_15() {
    let a = build_plant_matrices(&table(), 15.0).unwrap().a;
    // -(113272 + 94270) / (1500 * 15)
    assert!((a[(0, 0)] - (-9.2241)).abs() < 1e-3, "{}", a[(0, 0)]);
}

#[test]
fn torque_channel_is_rho_in_row_six() {
    for v in [9.0, 15.0, 25.0] {
        let b = build_plant_matrices(&table(), v).unwrap().b;
        assert_eq!(b.iter().filter(|e| **e != 0.0).count(), 1);
        assert_eq!(b[5], 1.25);
    }
}

#[test]
fn steering_row_is_unit_shift() {
    let mut p = table();
    p.m = 900.0;
    p.c_f = 5e4;
    let a = build_plant_matrices(&p, 11.0).unwrap().a;
    for j in 0..6 {
        assert_eq!(a[(4, j)], if j == 5 { 1.0 } else { 0.0 });
    }
}

#[test]
fn zero_gains_give_zero_coefficients() {
    let c = build_driver_coeffs(&table(), &DriverGains::ZERO, 15.0).unwrap();
    assert_eq!([c.t_d1, c.t_d2, c.t_d3, c.t_d4, c.k_d1], [0.0; 5]);
}

#[test]
fn near_point_coefficient() {
    let g = DriverGains { k_d1: 1.0, k_d2: 0.0 };
    let c = build_driver_coeffs(&table(), &g, 15.0).unwrap();
    assert!((c.t_d3 - 1.0 / 12.0).abs() < 1e-12);
}

#[test]
fn far_point_yaw_coefficient() {
    let g = DriverGains { k_d1: 0.0, k_d2: 1.0 };
    let p = table();
    let c = build_driver_coeffs(&p, &g, 15.0).unwrap();
    // a_22 = -(l_r² C_r + l_f² C_f) / (I_z v_x)
    let a22 = -(p.l_r * p.l_r * p.c_r + p.l_f * p.l_f * p.c_f) / (p.i_z * 15.0);
    assert!((a22 - (-9.176)).abs() < 1e-3);
    assert!((c.t_d2 - (-1.794)).abs() < 1e-3, "{}", c.t_d2);
}

#[test]
fn zero_gains_leave_plant_unchanged() {
    let p = table();
    let a = build_plant_matrices(&p, 15.0).unwrap().a;
    assert_eq!(build_driver_in_loop(&p, &DriverGains::ZERO, 15.0).unwrap(), a);
}

#[test]
fn driver_loop_differs_only_in_row_six() {
    let p = table();
    let g = DriverGains { k_d1: 1.0, k_d2: 1.0 };
    let a = build_plant_matrices(&p, 15.0).unwrap().a;
    let av = build_driver_in_loop(&p, &g, 15.0).unwrap();
    let d = av - a;
    for i in 0..5 {
        assert!(d.row(i).iter().all(|v| *v == 0.0));
    }
    assert_eq!(av[(5, 2)] - a[(5, 2)], 1.25);

    // outer-product identity, entrywise
    let row = build_driver_coeffs(&p, &g, 15.0).unwrap().row();
    for j in 0..6 {
        assert_eq!(av[(5, j)], a[(5, j)] + 1.25 * row[j]);
    }
}

#[test]
fn driver_torque_near_point_example() {
    let g = DriverGains { k_d1: 1.0, k_d2: 0.0 };
    let x = LateralState::new(0.0, 0.0, 0.01, 0.1, 0.0, 0.0);
    let t = driver_torque(&x, &table(), &g, 15.0).unwrap();
    assert!((t - 0.018333).abs() < 1e-6, "{t}");
    assert_eq!(driver_torque(&LateralState::zeros(), &table(), &DriverGains::default(), 15.0).unwrap(), 0.0);
}

#[test]
fn constraint_rows_match_limits() {
    let rows = state_constraint_rows(&table());
    assert_eq!(rows.len(), 8);
    let expect = [
        [0.0, 0.0, -2.282, 0.5714, 0.0, 0.0],
        [0.0, 1.0 / 0.51, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0 / 0.087, 0.0, 0.0, 0.0],
    ];
    for (k, e) in expect.iter().enumerate() {
        for j in 0..6 {
            assert!((rows[2 * k][j] - e[j]).abs() < 1e-3, "row {k}");
            assert_eq!(rows[2 * k + 1][j], -rows[2 * k][j]);
        }
    }
}

#[test]
fn driver_loop_is_affine_in_speed_and_inverse_speed() {
    let p = table();
    let g = DriverGains::default();
    let fit = [9.0, 14.0, 25.0];
    let m = Matrix3::from_fn(|i, j| [1.0, fit[i], 1.0 / fit[i]][j]);
    let lu = m.lu();
    let mats: Vec<_> = fit.iter().map(|v| build_driver_in_loop(&p, &g, *v).unwrap()).collect();
    let probe = 18.5;
    let direct = build_driver_in_loop(&p, &g, probe).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let rhs = Vector3::new(mats[0][(i, j)], mats[1][(i, j)], mats[2][(i, j)]);
            let c = lu.solve(&rhs).unwrap();
            let pred = c[0] + c[1] * probe + c[2] / probe;
            let tol = 1e-10 * (1.0 + direct[(i, j)].abs());
            assert!((pred - direct[(i, j)]).abs() <= tol, "entry ({i},{j})");
        }
    }
}

#[test]
fn default_driver_gains_match_fixture() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/driver_gains.toml")).unwrap();
    let doc: toml::Table = toml::from_str(&text).unwrap();
    let def = doc["defaults"].as_table().unwrap();
    let g = DriverGains::default();
    assert_eq!(g.k_d1, def["K_d1"].as_float().unwrap());
    assert_eq!(g.k_d2, def["K_d2"].as_float().unwrap());

    let a = build_driver_in_loop(&table(), &g, 15.0).unwrap();
    let mut eig: Vec<(f64, f64)> = a.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let want = def["eigenvalues"].as_array().unwrap();
    for (got, w) in eig.iter().zip(want) {
        let w = w.as_array().unwrap();
        let (re, im) = (w[0].as_float().unwrap(), w[1].as_float().unwrap());
        assert!((got.0 - re).abs() <= 1e-8 * (1.0 + re.abs()));
        assert!((got.1 - im).abs() <= 1e-8 * (1.0 + im.abs()));
    }
    let sa = def["spectral_abscissa"].as_float().unwrap();
    assert!((spectral_abscissa(&a) - sa).abs() < 1e-10);

    let s = doc["search"].as_table().unwrap();
    let found = search_driver_gains(&table(), (1.0, 0.1), 15.0, -0.03, (0.5, 50.0)).unwrap();
    assert!((found.k_d1 - s["k_d1"].as_float().unwrap()).abs() < 1e-4);
}

#[test]
fn search_rejects_bracket_that_misses_target() {
    assert!(search_driver_gains(&table(), (1.0, 0.1), 15.0, -0.03, (0.5, 0.6)).is_err());
}

proptest! {
    #[test]
    fn driver_torque_is_linear(x in proptest::array::uniform6(-1.0f64..1.0), v in 9.0f64..25.0) {
        let x = LateralState::from_row_slice(&x);
        let p = table();
        let g = DriverGains::default();
        let t1 = driver_torque(&x, &p, &g, v).unwrap();
        let t2 = driver_torque(&(x * 2.0), &p, &g, v).unwrap();
        prop_assert!((t2 - 2.0 * t1).abs() <= 1e-12 * (1.0 + t1.abs()));
    }
}

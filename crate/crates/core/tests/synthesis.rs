use dsas_core::synthesis::{
    assemble_problem, bisect_tau1, gains_from, lmi_margins, synthesize_at, verify_certificate, DesignSpec, LmiModel,
    LmiVertex, Objective, SynthesisResult, MARGIN_TOL,
};
use dsas_core::ts::build_ts_model;
use dsas_core::{Config, CoreError};
use dsas_sdp::{min_eigenvalue, SolverOptions};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn root(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn scalar_model(a: f64) -> LmiModel {
    let one = DMatrix::from_element(1, 1, 1.0);
    LmiModel {
        vertices: vec![LmiVertex {
            a: DMatrix::from_element(1, 1, a),
            bu: one.clone(),
            bw: one.clone(),
            c: one,
        }],
    }
}

fn scalar_spec(u_max: f64) -> DesignSpec {
    DesignSpec {
        u_max,
        tau_1: 0.1,
        rho: 1.0,
        r: 1.0,
        h_rows: Vec::new(),
        objective: Objective::Feasibility,
        state_scale: None,
        tau1_grid: 4,
        ..DesignSpec::default()
    }
}

fn reduced() -> (Config, SynthesisResult) {
    let cfg = Config::load(&[root("configs/dsas_reduced_wind.toml")]).unwrap();
    let res = SynthesisResult::from_text(&std::fs::read_to_string(root("fixtures/gains_reduced_wind.txt")).unwrap()).unwrap();
    (cfg, res)
}

#[test]
fn stable_scalar_system_is_feasible() {
    let model = scalar_model(-1.0);
    let spec = scalar_spec(1.0);
    let (res, probe) = synthesize_at(&model, &spec, 0.1, &SolverOptions::default(), "").unwrap();
    assert!(probe.status.is_success(), "{probe:?}");
    let res = res.unwrap();
    assert!(res.x[(0, 0)] > 0.0);
    assert!(res.tau_1 - res.tau_2 * res.rho > 0.0);
    assert!(lmi_margins(&model, &spec, &res).iter().all(|m| m.min_eig >= -MARGIN_TOL));
}

#[test]
fn unstable_scalar_with_weak_actuator_is_infeasible() {
    let (res, probe) = synthesize_at(&scalar_model(2.0), &scalar_spec(0.1), 0.1, &SolverOptions::default(), "").unwrap();
    assert!(res.is_none());
    assert!(!probe.status.is_success());
}

#[test]
fn decay_search_on_scalar_system() {
    let spec = DesignSpec {
        objective: Objective::MaximizeTau1,
        ..scalar_spec(1.0)
    };
    let (tau, res, search) = bisect_tau1(&scalar_model(-1.0), &spec, &SolverOptions::default(), "").unwrap();
    assert!(tau >= 0.1, "{}", search.summary());
    assert_eq!(res.tau_1, tau);

    let bad = DesignSpec {
        objective: Objective::MaximizeTau1,
        ..scalar_spec(0.1)
    };
    match bisect_tau1(&scalar_model(2.0), &bad, &SolverOptions::default(), "") {
        Err(CoreError::Infeasible(_)) => {}
        other => panic!("expected infeasible, got {:?}", other.map(|r| r.0)),
    }
}

#[test]
fn decay_blocks_cover_every_ordered_pair() {
    let (cfg, _) = reduced();
    let ts = build_ts_model(&cfg.vehicle, &cfg.driver, &cfg.scheduling, &cfg.output_matrix()).unwrap();
    let asm = assemble_problem(&LmiModel::from_ts(&ts), &cfg.design_spec()).unwrap();
    assert_eq!(asm.num_psi_blocks, 8 + 8 * 7);
}

#[test]
fn mismatched_constraint_row_is_an_assembly_error() {
    let mut spec = scalar_spec(1.0);
    spec.h_rows.push(DVector::from_vec(vec![1.0, 2.0]));
    assert!(matches!(assemble_problem(&scalar_model(-1.0), &spec), Err(CoreError::Assembly(_))));
}

#[test]
fn gain_extraction_examples() {
    let x = DMatrix::<f64>::identity(6, 6);
    let v = DMatrix::from_row_slice(1, 6, &[1.0, -2.0, 3.0, 0.5, 0.0, 7.0]);
    let k = gains_from(&x, &[DMatrix::zeros(1, 6), v.clone()]).unwrap();
    assert_eq!(k[0], DMatrix::zeros(1, 6));
    assert!((&k[1] - &v).amax() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let m = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
        let x = &m * m.transpose() + DMatrix::identity(6, 6) * 0.1;
        let v = DMatrix::from_fn(1, 6, |_, _| rng.gen_range(-100.0..100.0));
        let k = gains_from(&x, &[v.clone()]).unwrap();
        assert!((&k[0] * &x - &v).amax() <= 1e-9 * v.amax());
    }
}

#[test]
fn singular_lyapunov_matrix_is_rejected() {
    let mut x = DMatrix::<f64>::identity(6, 6);
    x[(5, 5)] = 1e-14;
    assert!(matches!(gains_from(&x, &[DMatrix::zeros(1, 6)]), Err(CoreError::CertificateRejected(_))));
}

#[test]
fn fixture_certificate_verifies() {
    let (cfg, res) = reduced();
    let ts = build_ts_model(&cfg.vehicle, &cfg.driver, &cfg.scheduling, &cfg.output_matrix()).unwrap();
    let rep = verify_certificate(&ts, &cfg.design_spec(), &res);
    assert!(rep.passed(), "{:?}", rep.failures);
    assert_eq!(rep.decay.passed, 1000);
    assert!(rep.max_h_x_h <= 1.0 + MARGIN_TOL);
    assert!(res.tau_1 - res.tau_2 * res.rho > 0.0);
    for r in &res.rules {
        let d = &r.v - &r.w;
        let mut m = DMatrix::zeros(7, 7);
        m.view_mut((0, 0), (6, 6)).copy_from(&res.x);
        m.view_mut((6, 0), (1, 6)).copy_from(&d);
        m.view_mut((0, 6), (6, 1)).copy_from(&d.transpose());
        m[(6, 6)] = res.u_max * res.u_max;
        assert!(min_eigenvalue(&m) >= -MARGIN_TOL * res.u_max * res.u_max);
    }
}

#[test]
fn perturbed_certificate_fails() {
    let (cfg, mut res) = reduced();
    let ts = build_ts_model(&cfg.vehicle, &cfg.driver, &cfg.scheduling, &cfg.output_matrix()).unwrap();
    let spec = cfg.design_spec();
    res.x[(2, 3)] *= 1.1;
    res.x[(3, 2)] = res.x[(2, 3)];
    let margins = lmi_margins(&LmiModel::from_ts(&ts), &spec, &res);
    assert!(margins.iter().any(|m| m.min_eig < -MARGIN_TOL));
    assert!(!verify_certificate(&ts, &spec, &res).passed());
}

#[test]
fn certificate_for_another_model_is_refused() {
    let (mut cfg, res) = reduced();
    cfg.vehicle.c_r *= 1.05;
    let ts = build_ts_model(&cfg.vehicle, &cfg.driver, &cfg.scheduling, &cfg.output_matrix()).unwrap();
    let rep = verify_certificate(&ts, &cfg.design_spec(), &res);
    assert!(!rep.fingerprint_ok && !rep.passed());
}

#[test]
fn gains_file_round_trips_exactly() {
    let text = std::fs::read_to_string(root("fixtures/gains_reduced_wind.txt")).unwrap();
    let res = SynthesisResult::from_text(&text).unwrap();
    assert_eq!(res.to_text(), text);
    assert_eq!(SynthesisResult::from_text(&res.to_text()).unwrap(), res);
}

#[test]
fn malformed_gains_files_are_rejected() {
    let text = std::fs::read_to_string(root("fixtures/gains_reduced_wind.txt")).unwrap();
    let cases = [
        text.replacen("dsas-gains 1", "dsas-gains 9", 1),
        text.lines().take(20).collect::<Vec<_>>().join("\n"),
        text.replacen("matrix X 6 6", "matrix X 6 5", 1),
        format!("{text}trailing garbage\n"),
        String::new(),
    ];
    for (i, c) in cases.iter().enumerate() {
        assert!(SynthesisResult::from_text(c).is_err(), "case {i} accepted");
    }
}

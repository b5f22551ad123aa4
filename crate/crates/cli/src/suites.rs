//! Invariant suites run by `dsas verify`, one pass/fail item each.

use nalgebra::{DMatrix, Vector1, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dsas_core::interaction::{driver_activity, weighting_mu};
use dsas_core::sim::{integrate, lyapunov_trace, ClosedLoop, Controller, Profile, Scenario};
use dsas_core::synthesis::{verify_certificate, SynthesisResult, GAIN_TOL, MARGIN_TOL};
use dsas_core::ts::{direct_matrices, memberships};
use dsas_core::vehicle::{build_driver_in_loop, spectral_abscissa};
use dsas_core::Config;
use dsas_sdp::{solve, LmiBlock, SdpProblem, SolveStatus, SymSparse};

use crate::commands::ts_model;
use crate::Failure;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Runs every suite. `closed_loop` adds the simulation-based items.
pub fn run_all(cfg: &Config, res: &SynthesisResult, closed_loop: bool) -> Result<Vec<Check>, Failure> {
    let mut out = certificate(cfg, res)?;
    out.extend(model(cfg)?);
    out.extend(solver());
    out.push(integrator());
    if closed_loop {
        out.extend(simulation(cfg, res)?);
    }
    Ok(out)
}

pub fn certificate(cfg: &Config, res: &SynthesisResult) -> Result<Vec<Check>, Failure> {
    let ts = ts_model(cfg)?;
    let rep = verify_certificate(&ts, &cfg.design_spec(), res);
    Ok(vec![
        check("certificate.fingerprint", rep.fingerprint_ok, res.fingerprint.clone()),
        check(
            "certificate.lmi_margins",
            !rep.margins.is_empty() && rep.min_margin() >= -MARGIN_TOL,
            format!("{} conditions, smallest eigenvalue {:.3e}", rep.margins.len(), rep.min_margin()),
        ),
        check(
            "certificate.gain_consistency",
            rep.gain_residual <= GAIN_TOL,
            format!("max relative |V - K X| = {:.3e}", rep.gain_residual),
        ),
        check(
            "certificate.ellipsoid_in_polyhedron",
            rep.max_h_x_h <= 1.0 + MARGIN_TOL,
            format!("max h'Xh = {:.6}", rep.max_h_x_h),
        ),
        check(
            "certificate.boundary_decay",
            rep.decay.samples > 0 && rep.decay.passed == rep.decay.samples,
            format!(
                "{}/{} samples, worst dV + tau_1 V = {:.3e}",
                rep.decay.passed, rep.decay.samples, rep.decay.worst
            ),
        ),
        check(
            "certificate.overall",
            rep.passed(),
            if rep.passed() {
                format!("cond(X) = {:.3e}", rep.condition_number)
            } else {
                rep.failures.join("; ")
            },
        ),
    ])
}

pub fn model(cfg: &Config) -> Result<Vec<Check>, Failure> {
    let mut out = Vec::new();
    let a = build_driver_in_loop(&cfg.vehicle, &cfg.driver, 15.0).map_err(Failure::from)?;
    let abscissa = spectral_abscissa(&a);
    out.push(check(
        "vehicle.driver_loop_stable",
        abscissa < 0.0,
        format!("spectral abscissa at 15 m/s = {abscissa:.4}"),
    ));

    let w = &cfg.weighting;
    let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    let bounded = grid.iter().all(|&t| {
        let m = weighting_mu(t, w);
        m >= w.mu_min && m <= 1.0
    });
    let symmetric = grid
        .iter()
        .all(|&d| (weighting_mu(w.omega_3 + d, w) - weighting_mu(w.omega_3 - d, w)).abs() <= 1e-12);
    out.push(check(
        "weighting.range_and_symmetry",
        bounded && symmetric && weighting_mu(w.omega_3, w) == w.mu_min,
        format!("mu(omega_3) = {}", weighting_mu(w.omega_3, w)),
    ));

    let a = &cfg.activity;
    let mut monotone = true;
    for ds in [0.25, 0.5, 1.0] {
        let mut prev = 0.0;
        for k in 0..=200 {
            let th = driver_activity(k as f64 * 0.1, ds, a).map_err(Failure::from)?;
            monotone &= th >= prev && th < 1.0;
            prev = th;
        }
    }
    out.push(check("activity.monotone", monotone, "theta_d nondecreasing in |T_d|".into()));

    let ts = ts_model(cfg)?;
    let b = ts.bounds;
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let v = b.v_min + (b.v_max - b.v_min) * i as f64 / 19.0;
            let mu = b.mu_min + (b.mu_max - b.mu_min) * j as f64 / 19.0;
            let (ar, br) = ts.reconstruct(v, mu);
            let (ad, bd) = direct_matrices(&cfg.vehicle, &cfg.driver, v, mu).map_err(Failure::from)?;
            worst = worst.max((ar - ad).amax()).max((br - bd).amax());
        }
    }
    out.push(check(
        "ts.exact_reconstruction",
        worst < 1e-10,
        format!("max entry error on 20x20 grid = {worst:.3e}"),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut simplex_err: f64 = 0.0;
    let mut negative = false;
    for _ in 0..10_000 {
        let v = rng.gen_range(b.v_min..=b.v_max);
        let mu = rng.gen_range(b.mu_min..=b.mu_max);
        let eta = memberships(v, mu, &b).eta;
        negative |= eta.iter().any(|e| *e < 0.0);
        simplex_err = simplex_err.max((eta.iter().sum::<f64>() - 1.0).abs());
    }
    out.push(check(
        "ts.membership_simplex",
        !negative && simplex_err <= 1e-12,
        format!("max |sum eta - 1| = {simplex_err:.3e}"),
    ));
    Ok(out)
}

fn scalar_block(c: f64, coef: f64) -> LmiBlock {
    let mut b = LmiBlock::new(1, "scalar");
    b.constant = SymSparse::identity(1, c);
    b.terms.push((0, SymSparse::identity(1, coef)));
    b
}

pub fn solver() -> Vec<Check> {
    let mut disk = SdpProblem::new(1);
    let mut b = LmiBlock::new(2, "[[1,y],[y,1]]");
    b.constant = SymSparse::identity(2, 1.0);
    let mut f = SymSparse::new();
    f.add(0, 1, 1.0);
    b.terms.push((0, f));
    disk.push_block(b);
    disk.objective = Some(vec![-1.0]);

    let mut interval = SdpProblem::new(1);
    interval.push_block(scalar_block(-2.0, 1.0));
    interval.push_block(scalar_block(5.0, -1.0));
    interval.objective = Some(vec![1.0]);

    [("sdp.psd_2x2_maximum", disk, 1.0), ("sdp.interval_minimum", interval, 2.0)]
        .into_iter()
        .map(|(name, p, expected)| match solve(&p) {
            Ok(sol) => check(
                name,
                sol.status == SolveStatus::Optimal && (sol.y[0] - expected).abs() <= 1e-6,
                format!("{:?}, y = {:.9} (expected {expected})", sol.status, sol.y[0]),
            ),
            Err(e) => check(name, false, e.to_string()),
        })
        .collect()
}

/// Error of RK4 on `x' = −x` over `[0, 1]`.
pub fn rk4_exp_error(h: f64) -> f64 {
    let steps = (1.0 / h).round() as usize;
    let x = integrate(|_, x: &Vector1<f64>| -x, 0.0, Vector1::new(1.0), h, steps);
    (x[0] - (-1.0f64).exp()).abs()
}

pub fn integrator() -> Check {
    let err = rk4_exp_error(1e-3);
    let e = [1e-2, 5e-3, 2.5e-3].map(rk4_exp_error);
    let ratios = [e[0] / e[1], e[1] / e[2]];
    let order_ok = ratios.iter().all(|r| (4.0..=64.0).contains(r));
    check(
        "sim.rk4_order",
        err <= 1e-8 && order_ok,
        format!("error at h=1e-3 {err:.3e}, halving ratios {:.2}, {:.2}", ratios[0], ratios[1]),
    )
}

/// Boundary point of the ellipsoid furthest along the first constraint row.
pub fn boundary_state(cfg: &Config, res: &SynthesisResult) -> Vector6<f64> {
    let h = DMatrix::from_column_slice(6, 1, cfg.constraint_rows()[0].as_slice());
    let xh = &res.x * &h;
    let scale = (h.transpose() * &xh)[0].sqrt();
    Vector6::from_column_slice((xh / scale).as_slice())
}

/// Test 1 with the wind removed, started on the ellipsoid boundary.
pub fn wind_free_scenario(x0: &Vector6<f64>) -> Scenario {
    Scenario {
        name: "test1_wind_free".into(),
        duration: 40.0,
        wind: Profile::default(),
        initial_state: [x0[0], x0[1], x0[2], x0[3], x0[4], x0[5]],
        ..Scenario::test1()
    }
}

pub fn simulation(cfg: &Config, res: &SynthesisResult) -> Result<Vec<Check>, Failure> {
    let ts = ts_model(cfg)?;
    let controller = match Controller::from_certificate(res, &ts) {
        Ok(c) => c,
        Err(e) => return Ok(vec![check("sim.closed_loop", false, e.to_string())]),
    };
    let cl = ClosedLoop::new(cfg, ts, controller)?;
    let x0 = boundary_state(cfg, res);
    let trace = cl.run(&wind_free_scenario(&x0))?;
    let last = trace.samples.last().map(|s| s.x.norm()).unwrap_or(f64::NAN);
    let decay = lyapunov_trace(&trace, res.tau_1, cfg.sim.decay_tol);
    let mut out = vec![
        check(
            "sim.wind_free_convergence",
            last < 1e-3 * x0.norm(),
            format!("|x(40)| / |x(0)| = {:.3e}", last / x0.norm()),
        ),
        check(
            "sim.lyapunov_decay",
            decay.passed() && decay.checked > 0,
            format!(
                "{} intervals, slowest rate {:.4} vs tau_1 {:.4}",
                decay.checked, decay.slowest_rate, res.tau_1
            ),
        ),
    ];

    let t1 = cl.run(&Scenario::test1())?;
    let mut honest = true;
    let mut simplex: f64 = 0.0;
    let mut torque_ok = true;
    for s in &t1.samples {
        let th = driver_activity(s.sig.t_d, s.exo.ds, &cfg.activity).map_err(Failure::from)?;
        let mu = weighting_mu(th, &cfg.weighting);
        honest &= (th - s.sig.theta_d).abs() <= 1e-12 && (mu - s.sig.mu).abs() <= 1e-12;
        simplex = simplex.max((s.sig.eta.iter().sum::<f64>() - 1.0).abs());
        torque_ok &= s.sig.t_c.abs() <= cfg.scheduling.mu_max * res.u_max;
    }
    out.push(check(
        "sim.logging_consistency",
        honest && simplex <= 1e-12 && torque_ok,
        format!("test1: recomputed theta_d/mu match, max |sum eta - 1| = {simplex:.1e}"),
    ));
    Ok(out)
}

//! Independent re-check of a certificate in original state coordinates.
//!
//! Every condition is rebuilt numerically from the stored matrices (no use of
//! the assembler or the solver) and its smallest eigenvalue computed by Jacobi
//! sweeps. The decay property is additionally sampled on the ellipsoid boundary.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dsas_sdp::{min_eigenvalue, symmetric_eigenvalues};

use super::{DesignSpec, LmiModel, SynthesisResult};
use crate::ts::{memberships, TsModel};

/// Smallest admissible eigenvalue of a recomputed condition.
pub const MARGIN_TOL: f64 = 1e-7;
/// Relative tolerance of `V_i = K_i·X`.
pub const GAIN_TOL: f64 = 1e-9;
pub const DECAY_SAMPLES: usize = 1000;
const SAMPLE_SEED: u64 = 0x5eed_d5a5;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMargin {
    pub label: String,
    /// `λ_min` of the condition written as `M ⪰ 0`.
    pub min_eig: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySampling {
    pub samples: usize,
    pub passed: usize,
    /// Largest sampled `V̇ + τ_1·V` (must be `≤ 0`).
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub margins: Vec<ConditionMargin>,
    pub decay: DecaySampling,
    /// `max_k h_kᵀ·X·h_k`.
    pub max_h_x_h: f64,
    /// `max_i ‖V_i − K_i·X‖_∞ / ‖V_i‖_∞`.
    pub gain_residual: f64,
    pub condition_number: f64,
    pub fingerprint_ok: bool,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.min_eig).fold(f64::INFINITY, f64::min)
    }
}

fn block(rows: &[Vec<&DMatrix<f64>>]) -> DMatrix<f64> {
    let heights: Vec<usize> = rows.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = rows[0].iter().map(|b| b.ncols()).collect();
    let mut m = DMatrix::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (row, h) in rows.iter().zip(&heights) {
        let mut c0 = 0;
        for (b, w) in row.iter().zip(&widths) {
            m.view_mut((r0, c0), (*h, *w)).copy_from(*b);
            c0 += w;
        }
        r0 += h;
    }
    m
}

fn psi(model: &LmiModel, res: &SynthesisResult, i: usize, j: usize) -> DMatrix<f64> {
    let v = &model.vertices[i];
    let (ri, rj) = (&res.rules[i], &res.rules[j]);
    let (n_x, n_z, n_u, n_w) = model.dims();
    let x = &res.x;
    let s = DMatrix::from_diagonal(&rj.s);
    let z = |r, c| DMatrix::<f64>::zeros(r, c);
    let m11 = &v.a * x + &v.bu * &rj.x31 + x * (res.tau_1 / 2.0);
    let m12 = &v.bu * &rj.x32;
    let m13 = &v.bu * &rj.x33;
    let m14 = -(&v.bu * &s);
    let m21 = &v.c * x - &rj.x21;
    let m31 = &ri.v - &rj.x31;
    let m55 = DMatrix::identity(n_w, n_w) * (-res.tau_2 * res.r / 2.0);
    let (nx22, nx23, nx32, nx33, ns) = (-&rj.x22, -&rj.x23, -&rj.x32, -&rj.x33, -&s);
    let (z_zu, z_zw, z_uu, z_uw, z_uz) = (z(n_z, n_u), z(n_z, n_w), z(n_u, n_u), z(n_u, n_w), z(n_u, n_z));
    let (z_wx, z_wz, z_wu) = (z(n_w, n_x), z(n_w, n_z), z(n_w, n_u));
    let m = block(&[
        vec![&m11, &m12, &m13, &m14, &v.bw],
        vec![&m21, &nx22, &nx23, &z_zu, &z_zw],
        vec![&m31, &nx32, &nx33, &z_uu, &z_uw],
        vec![&ri.w, &z_uz, &z_uu, &ns, &z_uw],
        vec![&z_wx, &z_wz, &z_wu, &z_wu, &m55],
    ]);
    &m + m.transpose()
}

/// Recomputes every matrix inequality of the certificate.
pub fn lmi_margins(model: &LmiModel, spec: &DesignSpec, res: &SynthesisResult) -> Vec<ConditionMargin> {
    let (n_x, _, n_u, _) = model.dims();
    let r = model.vertices.len();
    let x = &res.x;
    let mut out = Vec::new();
    let mut push = |label: String, m: &DMatrix<f64>| {
        out.push(ConditionMargin {
            label,
            min_eig: min_eigenvalue(m),
        })
    };

    push("X > 0".into(), x);
    for (j, rule) in res.rules.iter().enumerate() {
        for l in 0..n_u {
            push(format!("S_{} > 0 [{l}]", j + 1), &DMatrix::from_element(1, 1, rule.s[l]));
        }
    }
    let umax2 = DMatrix::from_element(1, 1, spec.u_max * spec.u_max);
    for (i, rule) in res.rules.iter().enumerate() {
        for l in 0..n_u {
            let d = (&rule.v - &rule.w).rows(l, 1).into_owned();
            let dt = d.transpose();
            push(format!("saturation rule {} channel {l}", i + 1), &block(&[vec![x, &dt], vec![&d, &umax2]]));
        }
    }
    let one = DMatrix::from_element(1, 1, 1.0);
    for (k, h) in spec.h_rows.iter().enumerate() {
        let xh = x * DMatrix::from_column_slice(n_x, 1, h.as_slice());
        let hx = xh.transpose();
        push(format!("polyhedron row {}", k + 1), &block(&[vec![x, &xh], vec![&hx, &one]]));
    }
    push("disturbance level".into(), &DMatrix::from_element(1, 1, res.tau_1 - spec.rho * res.tau_2));
    push("tau_2 > 0".into(), &DMatrix::from_element(1, 1, res.tau_2));
    for (i, v) in model.vertices.iter().enumerate() {
        let cx = &v.c * x;
        let xc = cx.transpose();
        let g = DMatrix::identity(v.c.nrows(), v.c.nrows()) * res.gamma;
        push(format!("output bound rule {}", i + 1), &block(&[vec![x, &xc], vec![&cx, &g]]));
    }
    let diag: Vec<DMatrix<f64>> = (0..r).map(|i| psi(model, res, i, i)).collect();
    for (i, p) in diag.iter().enumerate() {
        push(format!("decay rule {0}", i + 1), &-p);
    }
    if r > 1 {
        let w = 2.0 / (r as f64 - 1.0);
        for i in 0..r {
            for j in 0..r {
                if i != j {
                    let m = &diag[i] * w + psi(model, res, i, j) + psi(model, res, j, i);
                    push(format!("decay pair ({}, {})", i + 1, j + 1), &-m);
                }
            }
        }
    }
    out
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Samples `V̇ + τ_1·V` on `xᵀX⁻¹x = 1` under the saturated PDC law, `w = 0`.
pub fn sample_decay(ts: &TsModel, res: &SynthesisResult, samples: usize, seed: u64) -> Option<DecaySampling> {
    let n = res.x.nrows();
    let chol = nalgebra::Cholesky::new(res.x.clone())?;
    let l = chol.l();
    let p = res.lyapunov_p().ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = ts.bounds;
    let mut passed = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let u = DVector::from_fn(n, |_, _| gaussian(&mut rng));
        let x = &l * (&u / u.norm());
        let v_x = rng.gen_range(b.v_min..=b.v_max);
        let mu = rng.gen_range(b.mu_min..=b.mu_max);
        let eta = memberships(v_x, mu, &b).eta;
        let (a, bu) = ts.reconstruct(v_x, mu);
        let a = DMatrix::from_column_slice(n, n, a.as_slice());
        let bu = DVector::from_column_slice(bu.as_slice());
        let u_raw: f64 = eta.iter().zip(&res.rules).map(|(e, r)| e * (&r.k * &x)[0]).sum();
        let u_sat = u_raw.clamp(-res.u_max, res.u_max);
        let f = &a * &x + &bu * u_sat;
        let px = &p * &x;
        let vdot = 2.0 * px.dot(&f);
        let value = vdot + res.tau_1 * x.dot(&px);
        worst = worst.max(value);
        if value <= 0.0 {
            passed += 1;
        }
    }
    Some(DecaySampling { samples, passed, worst })
}

/// Full certificate check against the model it claims to be built for.
pub fn verify_certificate(ts: &TsModel, spec: &DesignSpec, res: &SynthesisResult) -> VerificationReport {
    let model = LmiModel::from_ts(ts);
    let mut failures = Vec::new();

    let fingerprint_ok = res.fingerprint == ts.fingerprint();
    if !fingerprint_ok {
        failures.push("model fingerprint does not match the certificate".to_string());
    }
    if res.rules.len() != model.vertices.len() {
        failures.push(format!(
            "certificate has {} rules, model has {}",
            res.rules.len(),
            model.vertices.len()
        ));
        return VerificationReport {
            margins: Vec::new(),
            decay: DecaySampling {
                samples: 0,
                passed: 0,
                worst: f64::NAN,
            },
            max_h_x_h: f64::NAN,
            gain_residual: f64::NAN,
            condition_number: f64::NAN,
            fingerprint_ok,
            failures,
        };
    }
    if spec.u_max != res.u_max || spec.rho != res.rho || spec.r != res.r {
        failures.push("design data (u_max, rho, R) differ from the certificate".to_string());
    }

    let margins = lmi_margins(&model, spec, res);
    for m in &margins {
        if !(m.min_eig >= -MARGIN_TOL) {
            failures.push(format!("{}: margin {:e}", m.label, m.min_eig));
        }
    }

    let ev = symmetric_eigenvalues(&res.x);
    let condition_number = ev[ev.len() - 1] / ev[0];
    if !(ev[0] > 0.0) || condition_number > super::assemble::MAX_CONDITION {
        failures.push(format!("X badly conditioned or indefinite (cond {condition_number:e})"));
    }

    let mut gain_residual: f64 = 0.0;
    for (i, r) in res.rules.iter().enumerate() {
        let resid = (&r.v - &r.k * &res.x).amax();
        let rel = resid / r.v.amax().max(f64::MIN_POSITIVE);
        gain_residual = gain_residual.max(rel);
        if !(rel <= GAIN_TOL) {
            failures.push(format!("rule {}: V != K·X (relative residual {rel:e})", i + 1));
        }
    }

    let max_h_x_h = spec
        .h_rows
        .iter()
        .map(|h| (h.transpose() * &res.x * h)[0])
        .fold(f64::NEG_INFINITY, f64::max);
    if !spec.h_rows.is_empty() && !(max_h_x_h <= 1.0 + MARGIN_TOL) {
        failures.push(format!("ellipsoid leaves the state polyhedron (max hᵀXh = {max_h_x_h})"));
    }
    if !(res.gamma > 0.0) {
        failures.push(format!("gamma = {} is not positive", res.gamma));
    }

    let decay = sample_decay(ts, res, DECAY_SAMPLES, SAMPLE_SEED).unwrap_or(DecaySampling {
        samples: DECAY_SAMPLES,
        passed: 0,
        worst: f64::NAN,
    });
    if decay.passed != decay.samples {
        failures.push(format!(
            "sampled decay: {}/{} boundary samples pass (worst V̇ + τ₁V = {:e})",
            decay.passed, decay.samples, decay.worst
        ));
    }

    VerificationReport {
        margins,
        decay,
        max_h_x_h,
        gain_residual,
        condition_number,
        fingerprint_ok,
        failures,
    }
}

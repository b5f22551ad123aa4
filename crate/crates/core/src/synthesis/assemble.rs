//! The saturated PDC matrix inequalities over a flat decision vector.
//!
//! Variables, in order: upper triangle of `X`; per rule `S` (diagonal),
//! `V`, `W`, `X21`, `X22`, `X23`, `X31`, `X32`, `X33` (row-major); then
//! `tau_2` and `gamma`.
//!
//! The problem is posed in scaled coordinates `x̃ = D·x`, `D = diag(1/scale)`,
//! with the disturbance normalized so that `R̃ = I`. This is a congruence of
//! every condition, so feasibility is unchanged; [`extract_result`] maps the
//! solution back.

use nalgebra::{Cholesky, DMatrix, DVector};

use dsas_sdp::{symmetric_eigenvalues, LmiBlock, SdpProblem, SdpSolution};

use super::expr::{ExprMat, LinExpr};
use super::{DesignSpec, LmiModel, LmiVertex, Objective, RuleCertificate, SynthesisResult};
use crate::error::{CoreError, Result};

/// Gains are rejected when `cond(X)` exceeds this.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n_x: usize,
    pub n_z: usize,
    pub n_u: usize,
    pub n_w: usize,
    pub rules: usize,
}

impl VarLayout {
    fn x_len(&self) -> usize {
        self.n_x * (self.n_x + 1) / 2
    }

    fn stride(&self) -> usize {
        let (x, z, u) = (self.n_x, self.n_z, self.n_u);
        u + 2 * u * x + z * x + z * z + z * u + u * x + u * z + u * u
    }

    pub fn num_vars(&self) -> usize {
        self.x_len() + self.rules * self.stride() + 2
    }

    /// Packed upper triangle, row-major.
    pub fn x(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * self.n_x - r * r.saturating_sub(1) / 2 + (c - r)
    }

    fn base(&self, rule: usize) -> usize {
        self.x_len() + rule * self.stride()
    }

    pub fn s(&self, rule: usize, l: usize) -> usize {
        self.base(rule) + l
    }

    fn offsets(&self) -> [usize; 9] {
        let (x, z, u) = (self.n_x, self.n_z, self.n_u);
        let sizes = [u, u * x, u * x, z * x, z * z, z * u, u * x, u * z, u * u];
        let mut off = [0; 9];
        for k in 1..9 {
            off[k] = off[k - 1] + sizes[k - 1];
        }
        off
    }

    /// Variable index of entry `(a, b)` of slot `slot` of `rule`, with slots
    /// `[S, V, W, X21, X22, X23, X31, X32, X33]`.
    fn slot(&self, rule: usize, slot: usize, a: usize, b: usize) -> usize {
        let cols = [1, self.n_x, self.n_x, self.n_x, self.n_z, self.n_u, self.n_x, self.n_z, self.n_u][slot];
        self.base(rule) + self.offsets()[slot] + a * cols + b
    }

    pub fn v(&self, rule: usize, l: usize, k: usize) -> usize {
        self.slot(rule, 1, l, k)
    }

    pub fn w(&self, rule: usize, l: usize, k: usize) -> usize {
        self.slot(rule, 2, l, k)
    }

    pub fn tau2(&self) -> usize {
        self.num_vars() - 2
    }

    pub fn gamma(&self) -> usize {
        self.num_vars() - 1
    }

    fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.num_vars());
        for i in 0..self.n_x {
            for j in i..self.n_x {
                names.push(format!("X[{i},{j}]"));
            }
        }
        let slots = ["S", "V", "W", "X21", "X22", "X23", "X31", "X32", "X33"];
        for rule in 0..self.rules {
            for (k, name) in slots.iter().enumerate() {
                let (rows, cols) = self.slot_shape(k);
                for a in 0..rows {
                    for b in 0..cols {
                        names.push(format!("{name}_{}[{a},{b}]", rule + 1));
                    }
                }
            }
        }
        names.push("tau_2".into());
        names.push("gamma".into());
        names
    }

    fn slot_shape(&self, slot: usize) -> (usize, usize) {
        let (x, z, u) = (self.n_x, self.n_z, self.n_u);
        [(u, 1), (u, x), (u, x), (z, x), (z, z), (z, u), (u, x), (u, z), (u, u)][slot]
    }

    fn slot_expr(&self, rule: usize, slot: usize) -> ExprMat {
        let (rows, cols) = self.slot_shape(slot);
        ExprMat::vars(rows, cols, |a, b| self.slot(rule, slot, a, b))
    }

    fn slot_value(&self, rule: usize, slot: usize, y: &[f64]) -> DMatrix<f64> {
        let (rows, cols) = self.slot_shape(slot);
        DMatrix::from_fn(rows, cols, |a, b| y[self.slot(rule, slot, a, b)])
    }
}

/// Assembled problem plus what is needed to map a solution back.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub problem: SdpProblem,
    pub layout: VarLayout,
    /// Diagonal of the state scaling `D` (entries `1/scale`).
    pub d: Vec<f64>,
    /// Disturbance normalization: `w̃ = w_scale·w`.
    pub w_scale: f64,
    pub tau_1: f64,
    /// Count of decay inequalities emitted.
    pub num_psi_blocks: usize,
}

fn scaled_model(model: &LmiModel, d: &[f64], w_scale: f64) -> Vec<LmiVertex> {
    let dm = DMatrix::from_diagonal(&DVector::from_column_slice(d));
    let dinv = DMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|v| 1.0 / v)));
    model
        .vertices
        .iter()
        .map(|v| LmiVertex {
            a: &dm * &v.a * &dinv,
            bu: &dm * &v.bu,
            bw: &dm * &v.bw / w_scale,
            c: &v.c * &dinv,
        })
        .collect()
}

fn strict(e: &ExprMat, spec: &DesignSpec, label: String) -> LmiBlock {
    let mut scale: f64 = 1.0;
    for i in 0..e.rows {
        for j in 0..e.cols {
            scale = scale.max(e.at(i, j).constant.abs());
        }
    }
    e.to_block(spec.strict_margin * scale, label)
}

/// Builds the LMI system for a fixed `spec.tau_1`.
pub fn assemble_problem(model: &LmiModel, spec: &DesignSpec) -> Result<Assembly> {
    model.validate()?;
    let (n_x, n_z, n_u, n_w) = model.dims();
    spec.validate(n_x)?;
    let r = model.vertices.len();
    let layout = VarLayout { n_x, n_z, n_u, n_w, rules: r };

    let d: Vec<f64> = match &spec.state_scale {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; n_x],
    };
    let w_scale = spec.r.sqrt();
    let verts = scaled_model(model, &d, w_scale);
    let r_tilde = 1.0;

    let mut problem = SdpProblem::new(layout.num_vars());
    problem.var_names = layout.names();

    let x = ExprMat::vars(n_x, n_x, |i, j| layout.x(i, j));
    let tau2 = LinExpr::var(layout.tau2());
    let gamma = LinExpr::var(layout.gamma());
    let slot = |rule: usize, k: usize| layout.slot_expr(rule, k);
    let konst = |m: &DMatrix<f64>| ExprMat::from_const(m);
    let neg = |e: &ExprMat| e.scaled(-1.0);

    problem.push_block(strict(&x, spec, "X > 0".into()));
    for j in 0..r {
        for l in 0..n_u {
            let s = ExprMat::vars(1, 1, |_, _| layout.s(j, l));
            problem.push_block(strict(&s, spec, format!("S_{} > 0 [{l}]", j + 1)));
        }
    }

    // saturation: [[X, (V_i(l) − W_i(l))ᵀ], [*, u_max²]]
    for i in 0..r {
        for l in 0..n_u {
            let mut row = ExprMat::zeros(1, n_x);
            for k in 0..n_x {
                *row.at_mut(0, k) = LinExpr {
                    constant: 0.0,
                    terms: vec![(layout.v(i, l, k), 1.0), (layout.w(i, l, k), -1.0)],
                };
            }
            let m = ExprMat::blocks(
                &[n_x, 1],
                &[n_x, 1],
                &[
                    vec![Some(x.clone()), Some(row.transpose())],
                    vec![Some(row), Some(konst(&DMatrix::from_element(1, 1, spec.u_max * spec.u_max)))],
                ],
            );
            problem.push_block(m.to_block(0.0, format!("saturation rule {} channel {l}", i + 1)));
        }
    }

    // polyhedral inclusion: [[X, X·h̃], [*, 1]]
    for (k, h) in spec.h_rows.iter().enumerate() {
        let ht = DMatrix::from_iterator(n_x, 1, h.iter().zip(&d).map(|(hv, dv)| hv / dv));
        let xh = ExprMat::right_mul(&x, &ht);
        let m = ExprMat::blocks(
            &[n_x, 1],
            &[n_x, 1],
            &[
                vec![Some(x.clone()), Some(xh.clone())],
                vec![Some(xh.transpose()), Some(konst(&DMatrix::from_element(1, 1, 1.0)))],
            ],
        );
        problem.push_block(m.to_block(0.0, format!("polyhedron row {}", k + 1)));
    }

    // tau_1 − rho·tau_2 > 0 and tau_2 > 0
    let mut t = ExprMat::zeros(1, 1);
    *t.at_mut(0, 0) = LinExpr {
        constant: spec.tau_1,
        terms: vec![(layout.tau2(), -spec.rho)],
    };
    problem.push_block(strict(&t, spec, "disturbance level".into()));
    problem.push_block(strict(&ExprMat::identity_times(1, &tau2), spec, "tau_2 > 0".into()));

    // output bound: [[X, X·C̃ᵀ], [C̃·X, gamma·I]]
    for (i, v) in verts.iter().enumerate() {
        let cx = ExprMat::left_mul(&v.c, &x);
        let m = ExprMat::blocks(
            &[n_x, n_z],
            &[n_x, n_z],
            &[
                vec![Some(x.clone()), Some(cx.transpose())],
                vec![Some(cx), Some(ExprMat::identity_times(n_z, &gamma))],
            ],
        );
        problem.push_block(m.to_block(0.0, format!("output bound rule {}", i + 1)));
    }

    let sizes = [n_x, n_z, n_u, n_u, n_w];
    let psi = |i: usize, j: usize| -> ExprMat {
        let vi = &verts[i];
        let s_j = {
            let mut s = ExprMat::zeros(n_u, n_u);
            for l in 0..n_u {
                *s.at_mut(l, l) = LinExpr::var(layout.s(j, l));
            }
            s
        };
        let (v_i, w_i) = (slot(i, 1), slot(i, 2));
        let (x21, x22, x23) = (slot(j, 3), slot(j, 4), slot(j, 5));
        let (x31, x32, x33) = (slot(j, 6), slot(j, 7), slot(j, 8));
        let m11 = ExprMat::left_mul(&vi.a, &x)
            .plus(&ExprMat::left_mul(&vi.bu, &x31))
            .plus(&x.scaled(spec.tau_1 / 2.0));
        let m55 = ExprMat::identity_times(n_w, &LinExpr {
            constant: 0.0,
            terms: vec![(layout.tau2(), -r_tilde / 2.0)],
        });
        let m = ExprMat::blocks(
            &sizes,
            &sizes,
            &[
                vec![
                    Some(m11),
                    Some(ExprMat::left_mul(&vi.bu, &x32)),
                    Some(ExprMat::left_mul(&vi.bu, &x33)),
                    Some(neg(&ExprMat::left_mul(&vi.bu, &s_j))),
                    Some(konst(&vi.bw)),
                ],
                vec![
                    Some(ExprMat::left_mul(&vi.c, &x).plus(&neg(&x21))),
                    Some(neg(&x22)),
                    Some(neg(&x23)),
                    None,
                    None,
                ],
                vec![Some(v_i.plus(&neg(&x31))), Some(neg(&x32)), Some(neg(&x33)), None, None],
                vec![Some(w_i), None, None, Some(neg(&s_j)), None],
                vec![None, None, None, None, Some(m55)],
            ],
        );
        m.he()
    };

    let mut num_psi_blocks = 0;
    let diag: Vec<ExprMat> = (0..r).map(|i| psi(i, i)).collect();
    for (i, p) in diag.iter().enumerate() {
        problem.push_block(strict(&neg(p), spec, format!("decay rule {0}", i + 1)));
        num_psi_blocks += 1;
    }
    if r > 1 {
        let w = 2.0 / (r as f64 - 1.0);
        for i in 0..r {
            for j in 0..r {
                if i == j {
                    continue;
                }
                let m = diag[i].scaled(w).plus(&psi(i, j)).plus(&psi(j, i));
                problem.push_block(strict(&neg(&m), spec, format!("decay pair ({}, {})", i + 1, j + 1)));
                num_psi_blocks += 1;
            }
        }
    }

    if spec.objective == Objective::MinimizeGamma {
        let mut c = vec![0.0; layout.num_vars()];
        c[layout.gamma()] = 1.0;
        problem.objective = Some(c);
    }
    problem.validate()?;

    Ok(Assembly {
        problem,
        layout,
        d,
        w_scale,
        tau_1: spec.tau_1,
        num_psi_blocks,
    })
}

/// `K_i = V_i·X⁻¹` through a Cholesky solve of `X·K_iᵀ = V_iᵀ`.
pub fn gains_from(x: &DMatrix<f64>, vs: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let ev = symmetric_eigenvalues(x);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(CoreError::CertificateRejected(format!(
            "X is not positive definite (smallest eigenvalue {lo:e})"
        )));
    }
    if hi / lo > MAX_CONDITION {
        return Err(CoreError::CertificateRejected(format!(
            "X is numerically singular (condition number {:e})",
            hi / lo
        )));
    }
    let chol = Cholesky::new(x.clone())
        .ok_or_else(|| CoreError::CertificateRejected("Cholesky factorization of X failed".into()))?;
    Ok(vs.iter().map(|v| chol.solve(&v.transpose()).transpose()).collect())
}

/// Gains of a solved assembly, in original coordinates.
pub fn extract_gains(assembly: &Assembly, sol: &SdpSolution) -> Result<Vec<DMatrix<f64>>> {
    Ok(extract_result(assembly, sol, &DesignSpec::default(), "")?.gains())
}

/// Maps the scaled solution back to original coordinates and forms the gains.
pub fn extract_result(
    assembly: &Assembly,
    sol: &SdpSolution,
    spec: &DesignSpec,
    fingerprint: &str,
) -> Result<SynthesisResult> {
    if !sol.status.is_success() {
        return Err(CoreError::CertificateRejected(format!("solver status {:?}", sol.status)));
    }
    let lay = &assembly.layout;
    let y = &sol.y;
    let n_x = lay.n_x;
    let dinv = DMatrix::from_diagonal(&DVector::from_iterator(n_x, assembly.d.iter().map(|v| 1.0 / v)));

    let xt = DMatrix::from_fn(n_x, n_x, |i, j| y[lay.x(i, j)]);
    let x = &dinv * &xt * &dinv;
    let x = (&x + x.transpose()) * 0.5;

    let mut rules = Vec::with_capacity(lay.rules);
    let mut vs = Vec::with_capacity(lay.rules);
    for j in 0..lay.rules {
        let v = lay.slot_value(j, 1, y) * &dinv;
        vs.push(v.clone());
        rules.push(RuleCertificate {
            s: DVector::from_iterator(lay.n_u, (0..lay.n_u).map(|l| y[lay.s(j, l)])),
            v,
            w: lay.slot_value(j, 2, y) * &dinv,
            x21: lay.slot_value(j, 3, y) * &dinv,
            x22: lay.slot_value(j, 4, y),
            x23: lay.slot_value(j, 5, y),
            x31: lay.slot_value(j, 6, y) * &dinv,
            x32: lay.slot_value(j, 7, y),
            x33: lay.slot_value(j, 8, y),
            k: DMatrix::zeros(lay.n_u, n_x),
        });
    }
    let gains = gains_from(&x, &vs)?;
    for (rule, k) in rules.iter_mut().zip(gains) {
        rule.k = k;
    }
    Ok(SynthesisResult {
        x,
        rules,
        tau_1: assembly.tau_1,
        tau_2: y[lay.tau2()],
        gamma: y[lay.gamma()],
        u_max: spec.u_max,
        rho: spec.rho,
        r: spec.r,
        fingerprint: fingerprint.to_string(),
    })
}

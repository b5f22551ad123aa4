//! Saturated PDC synthesis: LMI assembly, gain extraction, certificate checks.

mod assemble;
mod expr;
mod gains_file;
mod search;
mod verify;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ts::TsModel;

pub use assemble::{assemble_problem, extract_gains, extract_result, gains_from, Assembly, VarLayout};
pub use expr::{ExprMat, LinExpr};
pub use search::{bisect_tau1, synthesize, synthesize_at, Probe, Tau1Search};
pub use verify::{
    lmi_margins, sample_decay, verify_certificate, ConditionMargin, DecaySampling, VerificationReport, DECAY_SAMPLES, GAIN_TOL,
    MARGIN_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Feasibility,
    MinimizeGamma,
    MaximizeTau1,
}

/// One vertex system of a polytopic model.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiVertex {
    pub a: DMatrix<f64>,
    pub bu: DMatrix<f64>,
    pub bw: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiModel {
    pub vertices: Vec<LmiVertex>,
}

impl LmiModel {
    pub fn from_ts(ts: &TsModel) -> Self {
        let c = DMatrix::from_column_slice(6, 6, ts.c.as_slice());
        let vertices = ts
            .vertices
            .iter()
            .map(|v| LmiVertex {
                a: DMatrix::from_column_slice(6, 6, v.a.as_slice()),
                bu: DMatrix::from_column_slice(6, 1, v.bu.as_slice()),
                bw: DMatrix::from_column_slice(6, 1, v.bw.as_slice()),
                c: c.clone(),
            })
            .collect();
        Self { vertices }
    }

    /// `(n_x, n_z, n_u, n_w)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let v = &self.vertices[0];
        (v.a.nrows(), v.c.nrows(), v.bu.ncols(), v.bw.ncols())
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .vertices
            .first()
            .ok_or_else(|| domain("model has no vertices"))?;
        let (nx, nz, nu, nw) = (first.a.nrows(), first.c.nrows(), first.bu.ncols(), first.bw.ncols());
        if nz != nx {
            return Err(domain("the slack structure requires a square output matrix (n_z = n_x)"));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            let ok = v.a.shape() == (nx, nx)
                && v.bu.shape() == (nx, nu)
                && v.bw.shape() == (nx, nw)
                && v.c.shape() == (nz, nx);
            if !ok {
                return Err(domain(format!("vertex {i} has inconsistent dimensions")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    /// Bound on every fictive input channel.
    pub u_max: f64,
    /// Decay rate used by feasibility and gamma minimization.
    pub tau_1: f64,
    /// Disturbance energy level: `wᵀRw ≤ rho`.
    pub rho: f64,
    /// Scalar disturbance weighting, `R = r·I`.
    pub r: f64,
    /// Polyhedral rows `|h_kᵀx| ≤ 1`, already split into `±h`.
    pub h_rows: Vec<DVector<f64>>,
    pub objective: Objective,
    /// Relative margin for strict inequalities.
    pub strict_margin: f64,
    /// Characteristic state magnitudes; the LMIs are solved in `x/scale`.
    pub state_scale: Option<Vec<f64>>,
    pub tau1_bracket: (f64, f64),
    pub tau1_rel_width: f64,
    /// Log-spaced points scanned inside the bracket before refining.
    pub tau1_grid: usize,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self {
            u_max: 15.0,
            tau_1: 0.3,
            rho: 1.0,
            r: 1.0 / (1200.0 * 1200.0),
            h_rows: Vec::new(),
            objective: Objective::MaximizeTau1,
            strict_margin: 1e-6,
            state_scale: None,
            tau1_bracket: (1e-3, 5.0),
            tau1_rel_width: 0.05,
            tau1_grid: 10,
        }
    }
}

impl DesignSpec {
    pub fn validate(&self, n_x: usize) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(domain(format!("{name} must be positive, got {v}")))
            }
        };
        pos("u_max", self.u_max)?;
        pos("tau_1", self.tau_1)?;
        pos("rho", self.rho)?;
        pos("R", self.r)?;
        pos("strict_margin", self.strict_margin)?;
        pos("tau1_rel_width", self.tau1_rel_width)?;
        let (lo, hi) = self.tau1_bracket;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(domain("tau_1 bracket must satisfy 0 < lo < hi"));
        }
        if let Some(h) = self.h_rows.iter().find(|h| h.len() != n_x) {
            return Err(crate::error::CoreError::Assembly(format!(
                "constraint row has {} entries, model has {n_x} states",
                h.len()
            )));
        }
        if let Some(s) = &self.state_scale {
            if s.len() != n_x || s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(domain("state_scale must hold one positive entry per state"));
            }
        }
        Ok(())
    }
}

/// Decision variables of one rule, in original state coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleCertificate {
    /// Diagonal of `S_j`.
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub x21: DMatrix<f64>,
    pub x22: DMatrix<f64>,
    pub x23: DMatrix<f64>,
    pub x31: DMatrix<f64>,
    pub x32: DMatrix<f64>,
    pub x33: DMatrix<f64>,
    /// `K_i = V_i·X⁻¹`.
    pub k: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub x: DMatrix<f64>,
    pub rules: Vec<RuleCertificate>,
    pub tau_1: f64,
    pub tau_2: f64,
    pub gamma: f64,
    pub u_max: f64,
    pub rho: f64,
    pub r: f64,
    /// Fingerprint of the model the certificate was computed for.
    pub fingerprint: String,
}

impl SynthesisResult {
    pub fn gains(&self) -> Vec<DMatrix<f64>> {
        self.rules.iter().map(|r| r.k.clone()).collect()
    }

    pub fn to_text(&self) -> String {
        gains_file::write(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        gains_file::read(text)
    }

    /// `P = X⁻¹` via Cholesky.
    pub fn lyapunov_p(&self) -> Result<DMatrix<f64>> {
        let n = self.x.nrows();
        let chol = nalgebra::Cholesky::new(self.x.clone())
            .ok_or_else(|| crate::error::CoreError::CertificateRejected("X is not positive definite".into()))?;
        Ok(chol.solve(&DMatrix::identity(n, n)))
    }
}

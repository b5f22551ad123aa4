//! Post-run checks on a trace: state constraints and Lyapunov decay.

use nalgebra::Vector6;

use super::closed_loop::{Sample, SimTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    /// `max_t h_kᵀx(t)` per row.
    pub maxima: Vec<f64>,
    /// Time of each maximum.
    pub at: Vec<f64>,
    /// Rows whose maximum exceeds 1.
    pub flagged: Vec<usize>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

pub fn check_constraints(trace: &SimTrace, h_rows: &[Vector6<f64>]) -> ConstraintReport {
    let mut maxima = vec![0.0; h_rows.len()];
    let mut at = vec![0.0; h_rows.len()];
    for s in &trace.samples {
        for (k, h) in h_rows.iter().enumerate() {
            let v = h.dot(&s.x);
            if v > maxima[k] {
                maxima[k] = v;
                at[k] = s.t;
            }
        }
    }
    let flagged = (0..h_rows.len()).filter(|&k| maxima[k] > 1.0).collect();
    ConstraintReport { maxima, at, flagged }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub max_v: f64,
    /// Largest `V` while a disturbance (wind, curvature or override) acts.
    pub max_v_disturbed: f64,
    /// Sample intervals that qualified for the decay check.
    pub checked: usize,
    /// Qualified intervals where `V` decayed slower than required.
    pub violations: usize,
    /// Slowest observed rate `−ln(V(t+δ)/V(t))/δ` over qualified intervals.
    pub slowest_rate: f64,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Below this value `V` is treated as rounding noise.
const V_FLOOR: f64 = 1e-14;

fn quiet(s: &Sample) -> bool {
    s.exo.f_w == 0.0 && s.exo.rho_c == 0.0 && s.exo.t_ovr == 0.0
}

/// Checks `V(t+δ) ≤ V(t)·exp(−τ_1·δ·(1 − tol))` over every sample interval
/// that starts inside the ellipsoid and has no disturbance at either end.
pub fn lyapunov_trace(trace: &SimTrace, tau_1: f64, tol: f64) -> DecayReport {
    let s = &trace.samples;
    let mut rep = DecayReport {
        max_v: s.iter().map(|s| s.v).fold(0.0, f64::max),
        max_v_disturbed: s.iter().filter(|s| !quiet(s)).map(|s| s.v).fold(0.0, f64::max),
        checked: 0,
        violations: 0,
        slowest_rate: f64::INFINITY,
    };
    for w in s.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !(quiet(a) && quiet(b) && a.v <= 1.0 && a.v > V_FLOOR) {
            continue;
        }
        let dt = b.t - a.t;
        rep.checked += 1;
        rep.slowest_rate = rep.slowest_rate.min(-(b.v / a.v).ln() / dt);
        if b.v > a.v * (-tau_1 * dt * (1.0 - tol)).exp() {
            rep.violations += 1;
        }
    }
    rep
}

//! Lateral dynamics with steering column and the driver-in-the-loop model.
//!
//! State ordering everywhere: `[v_y, r, psi_l, y_l, delta, delta_dot]`.

use nalgebra::{Matrix6, RowVector6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const N_X: usize = 6;
pub const V_Y: usize = 0;
pub const YAW_RATE: usize = 1;
pub const HEADING: usize = 2;
pub const LATERAL_OFFSET: usize = 3;
pub const STEER: usize = 4;
pub const STEER_RATE: usize = 5;

pub type LateralState = Vector6<f64>;

/// Physical constants. Config keys are the conventional symbols.
///
/// `C_x` and `C_y` are carried for completeness; no implemented equation reads them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    #[serde(rename = "M")]
    pub m: f64,
    pub l_f: f64,
    pub l_r: f64,
    pub l_w: f64,
    pub l_s: f64,
    pub eta_t: f64,
    #[serde(rename = "I_z")]
    pub i_z: f64,
    #[serde(rename = "I_s")]
    pub i_s: f64,
    #[serde(rename = "R_s")]
    pub r_s: f64,
    #[serde(rename = "B_s")]
    pub b_s: f64,
    #[serde(rename = "C_f")]
    pub c_f: f64,
    #[serde(rename = "C_r")]
    pub c_r: f64,
    #[serde(rename = "C_x")]
    pub c_x: f64,
    #[serde(rename = "C_y")]
    pub c_y: f64,
    pub tau_a: f64,
    #[serde(rename = "T_p")]
    pub t_p: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            m: 1500.0,
            l_f: 1.0065,
            l_r: 1.4625,
            l_w: 0.4,
            l_s: 5.0,
            eta_t: 0.13,
            i_z: 2454.0,
            i_s: 0.05,
            r_s: 16.0,
            b_s: 15.0,
            c_f: 94270.0,
            c_r: 113272.0,
            c_x: 0.35,
            c_y: 0.45,
            tau_a: 0.5,
            t_p: 0.8,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("M", self.m),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("l_w", self.l_w),
            ("l_s", self.l_s),
            ("eta_t", self.eta_t),
            ("I_z", self.i_z),
            ("I_s", self.i_s),
            ("R_s", self.r_s),
            ("B_s", self.b_s),
            ("C_f", self.c_f),
            ("C_r", self.c_r),
            ("C_x", self.c_x),
            ("C_y", self.c_y),
            ("tau_a", self.tau_a),
            ("T_p", self.t_p),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("vehicle parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Torque-to-steering-acceleration gain `1/(I_s·R_s)`.
    pub fn rho(&self) -> f64 {
        1.0 / (self.i_s * self.r_s)
    }
}

/// Driver feedback gains (torque per rad). Negative values oppose the error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriverGains {
    #[serde(rename = "K_d1")]
    pub k_d1: f64,
    #[serde(rename = "K_d2")]
    pub k_d2: f64,
}

impl Default for DriverGains {
    /// Chosen by [`search_driver_gains`] on the direction `(1, 0.1)` for a
    /// spectral abscissa of about `-0.03` at 15 m/s.
    fn default() -> Self {
        Self {
            k_d1: -10.0,
            k_d2: -1.0,
        }
    }
}

impl DriverGains {
    pub const ZERO: Self = Self { k_d1: 0.0, k_d2: 0.0 };

    pub fn validate(&self) -> Result<()> {
        if self.k_d1.is_finite() && self.k_d2.is_finite() {
            Ok(())
        } else {
            Err(domain("driver gains must be finite"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantMatrices {
    pub a: Matrix6<f64>,
    /// Torque channel; only row 6 is nonzero and equals `rho`.
    pub b: Vector6<f64>,
    /// Lateral wind force channel.
    pub b_w: Vector6<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverCoeffs {
    pub t_d1: f64,
    pub t_d2: f64,
    pub t_d3: f64,
    pub t_d4: f64,
    pub k_d1: f64,
}

impl DriverCoeffs {
    /// `T_d = row · x`.
    pub fn row(&self) -> RowVector6<f64> {
        RowVector6::new(self.t_d1, self.t_d2, self.k_d1, self.t_d3, self.t_d4, 0.0)
    }
}

fn check_speed(v_x: f64) -> Result<()> {
    if v_x.is_finite() && v_x > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("longitudinal speed must be positive, got {v_x}")))
    }
}

struct Stiffness {
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
    b1: f64,
    b2: f64,
}

fn stiffness(p: &VehicleParams, v_x: f64) -> Stiffness {
    Stiffness {
        a11: -(p.c_r + p.c_f) / (p.m * v_x),
        a12: -v_x + (p.l_r * p.c_r - p.l_f * p.c_f) / (p.m * v_x),
        a21: (p.l_r * p.c_r - p.l_f * p.c_f) / (p.i_z * v_x),
        a22: -(p.l_r * p.l_r * p.c_r + p.l_f * p.l_f * p.c_f) / (p.i_z * v_x),
        b1: p.c_f / p.m,
        b2: p.l_f * p.c_f / p.i_z,
    }
}

pub fn build_plant_matrices(p: &VehicleParams, v_x: f64) -> Result<PlantMatrices> {
    check_speed(v_x)?;
    let k = stiffness(p, v_x);
    let col = p.i_s * p.r_s * p.r_s;
    let ts1 = p.c_f * p.eta_t / (col * v_x);
    let ts2 = p.c_f * p.l_f * p.eta_t / (col * v_x);
    let ts3 = -p.c_f * p.eta_t / col;
    let ts4 = -p.b_s / p.i_s;
    #[rustfmt::skip]
    let a = Matrix6::new(
        k.a11, k.a12, 0.0, 0.0, k.b1, 0.0,
        k.a21, k.a22, 0.0, 0.0, k.b2, 0.0,
        0.0,   1.0,   0.0, 0.0, 0.0,  0.0,
        1.0,   p.l_s, v_x, 0.0, 0.0,  0.0,
        0.0,   0.0,   0.0, 0.0, 0.0,  1.0,
        ts1,   ts2,   0.0, 0.0, ts3,  ts4,
    );
    let mut b = Vector6::zeros();
    b[STEER_RATE] = p.rho();
    let b_w = Vector6::new(1.0 / p.m, p.l_w / p.i_z, 0.0, 0.0, 0.0, 0.0);
    Ok(PlantMatrices { a, b, b_w })
}

pub fn build_driver_coeffs(p: &VehicleParams, g: &DriverGains, v_x: f64) -> Result<DriverCoeffs> {
    check_speed(v_x)?;
    let k = stiffness(p, v_x);
    let ta2 = p.tau_a * p.tau_a;
    Ok(DriverCoeffs {
        t_d1: g.k_d2 * ta2 * k.a21,
        t_d2: g.k_d2 * (p.tau_a + ta2 * k.a22),
        t_d3: g.k_d1 / (v_x * p.t_p),
        t_d4: g.k_d2 * ta2 * k.b2 * p.r_s,
        k_d1: g.k_d1,
    })
}

/// `A_v = A + rho·e_6·[T_d1, T_d2, K_d1, T_d3, T_d4, 0]`.
pub fn build_driver_in_loop(p: &VehicleParams, g: &DriverGains, v_x: f64) -> Result<Matrix6<f64>> {
    let plant = build_plant_matrices(p, v_x)?;
    let row = build_driver_coeffs(p, g, v_x)?.row();
    let mut a = plant.a;
    let rho = p.rho();
    for j in 0..N_X {
        a[(STEER_RATE, j)] += rho * row[j];
    }
    Ok(a)
}

pub fn driver_torque(x: &LateralState, p: &VehicleParams, g: &DriverGains, v_x: f64) -> Result<f64> {
    Ok((build_driver_coeffs(p, g, v_x)?.row() * x)[0])
}

/// Symmetric bounds defining the admissible state polyhedron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateLimits {
    /// Bound on `y_l + (l_f − l_s)·psi_l` (m).
    pub lateral_offset: f64,
    pub yaw_rate: f64,
    pub heading: f64,
    pub steering_rate: f64,
}

impl Default for StateLimits {
    fn default() -> Self {
        Self {
            lateral_offset: 1.75,
            yaw_rate: 0.51,
            heading: 0.087,
            steering_rate: 0.1047,
        }
    }
}

impl StateLimits {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lateral_offset, self.yaw_rate, self.heading, self.steering_rate];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(domain("state limits must be positive"))
        }
    }
}

/// Rows `h_k` with `|h_kᵀx| ≤ 1` encoding the limits, emitted as `+h, −h`
/// pairs in the order: combined offset, yaw rate, heading, steering rate.
pub fn state_constraint_rows(p: &VehicleParams) -> Vec<Vector6<f64>> {
    state_constraint_rows_with(p, &StateLimits::default())
}

pub fn state_constraint_rows_with(p: &VehicleParams, lim: &StateLimits) -> Vec<Vector6<f64>> {
    let base = [
        Vector6::new(0.0, 0.0, (p.l_f - p.l_s) / lim.lateral_offset, 1.0 / lim.lateral_offset, 0.0, 0.0),
        Vector6::new(0.0, 1.0 / lim.yaw_rate, 0.0, 0.0, 0.0, 0.0),
        Vector6::new(0.0, 0.0, 1.0 / lim.heading, 0.0, 0.0, 0.0),
        Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / lim.steering_rate),
    ];
    base.iter().flat_map(|h| [*h, -*h]).collect()
}

/// Largest real part among the eigenvalues of `a`.
pub fn spectral_abscissa(a: &Matrix6<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Bracketed bisection on `c > 0` for gains `−c·direction` such that the
/// driver-only loop at `v_x` reaches spectral abscissa `target` (< 0).
///
/// The abscissa must decrease through `target` between `c_lo` and `c_hi`.
pub fn search_driver_gains(
    p: &VehicleParams,
    direction: (f64, f64),
    v_x: f64,
    target: f64,
    (mut c_lo, mut c_hi): (f64, f64),
) -> Result<DriverGains> {
    let abscissa = |c: f64| -> Result<f64> {
        let g = DriverGains {
            k_d1: -c * direction.0,
            k_d2: -c * direction.1,
        };
        Ok(spectral_abscissa(&build_driver_in_loop(p, &g, v_x)?))
    };
    if !(abscissa(c_lo)? > target && abscissa(c_hi)? <= target) {
        return Err(domain("driver gain bracket does not straddle the target abscissa"));
    }
    while c_hi - c_lo > 1e-6 * c_hi {
        let mid = 0.5 * (c_lo + c_hi);
        if abscissa(mid)? > target {
            c_lo = mid;
        } else {
            c_hi = mid;
        }
    }
    Ok(DriverGains {
        k_d1: -c_hi * direction.0,
        k_d2: -c_hi * direction.1,
    })
}

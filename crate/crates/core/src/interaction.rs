//! Driver activity and the assistance weighting factor.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Bell-shaped weighting `μ(θ) = 1/(1 + |(θ−ω_3)/ω_1|^{2ω_2}) + μ_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightingParams {
    pub omega_1: f64,
    pub omega_2: f64,
    pub omega_3: f64,
    pub mu_min: f64,
}

impl Default for WeightingParams {
    fn default() -> Self {
        Self {
            omega_1: 0.38,
            omega_2: -2.0,
            omega_3: 0.5,
            mu_min: 0.25,
        }
    }
}

impl WeightingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_1 > 0.0 && self.omega_1.is_finite()) {
            return Err(domain("omega_1 must be positive"));
        }
        if !(self.omega_2.is_finite() && self.omega_3.is_finite()) {
            return Err(domain("omega_2 and omega_3 must be finite"));
        }
        if !(self.mu_min > 0.0 && self.mu_min <= 1.0) {
            return Err(domain("mu_min must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// `θ_d = 1 − exp(−(σ_1·T_dN)^{σ_2}·DS^{σ_3})` with `T_dN = |T_d/T_d_max|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActivityParams {
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub sigma_3: f64,
    #[serde(rename = "T_d_max")]
    pub t_d_max: f64,
}

impl Default for ActivityParams {
    fn default() -> Self {
        Self {
            sigma_1: 2.0,
            sigma_2: 3.0,
            sigma_3: 3.0,
            t_d_max: 15.0,
        }
    }
}

impl ActivityParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.sigma_1, self.sigma_2, self.sigma_3, self.t_d_max];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(domain("activity parameters must be positive"))
        }
    }
}

/// Weighting factor, clamped to `[μ_min, 1]`. At `θ = ω_3` the base vanishes
/// and the continuous limit `μ_min` (for `ω_2 < 0`) is returned.
pub fn weighting_mu(theta_d: f64, w: &WeightingParams) -> f64 {
    if theta_d == w.omega_3 {
        return w.mu_min;
    }
    let base = ((theta_d - w.omega_3) / w.omega_1).abs();
    let raw = 1.0 / (1.0 + base.powf(2.0 * w.omega_2)) + w.mu_min;
    raw.clamp(w.mu_min, 1.0)
}

/// Driver activity in `[0, 1)`. `ds` must lie in `[0, 1]`.
pub fn driver_activity(t_d: f64, ds: f64, a: &ActivityParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&ds) {
        return Err(domain(format!("driver state DS must lie in [0, 1], got {ds}")));
    }
    let t_dn = (t_d / a.t_d_max).abs().clamp(0.0, 1.0);
    Ok(1.0 - (-(a.sigma_1 * t_dn).powf(a.sigma_2) * ds.powf(a.sigma_3)).exp())
}

/// `T_c = μ(θ_d)·u`.
pub fn assistance_torque(u: f64, theta_d: f64, w: &WeightingParams) -> f64 {
    weighting_mu(theta_d, w) * u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_point_is_mu_min() {
        assert_eq!(weighting_mu(0.5, &WeightingParams::default()), 0.25);
    }

    #[test]
    fn ds_out_of_range_is_rejected() {
        let a = ActivityParams::default();
        assert!(driver_activity(1.0, 1.5, &a).is_err());
        assert!(driver_activity(1.0, -0.1, &a).is_err());
    }
}

//! Layered TOML configuration.
//!
//! Every section is optional and every key falls back to its default, so a
//! file only lists what it changes. Several files can be stacked: later
//! layers override earlier ones key by key.

use std::path::Path;

use nalgebra::{DVector, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use dsas_sdp::SolverOptions;

use crate::error::{CoreError, Result};
use crate::interaction::{ActivityParams, WeightingParams};
use crate::synthesis::{DesignSpec, Objective};
use crate::ts::SchedulingBounds;
use crate::vehicle::{state_constraint_rows_with, DriverGains, StateLimits, VehicleParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub u_max: f64,
    pub tau_1: f64,
    pub rho: f64,
    /// Disturbance weighting `R` (scalar).
    #[serde(rename = "R")]
    pub r: f64,
    pub objective: Objective,
    pub strict_margin: f64,
    /// Diagonal of the performance output matrix.
    pub output_weights: [f64; 6],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_scale: Option<[f64; 6]>,
    pub tau1_bracket: [f64; 2],
    pub tau1_rel_width: f64,
    pub tau1_grid: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        let d = DesignSpec::default();
        Self {
            u_max: d.u_max,
            tau_1: d.tau_1,
            rho: d.rho,
            r: d.r,
            objective: d.objective,
            strict_margin: d.strict_margin,
            output_weights: [0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
            state_scale: Some([1.0, 0.51, 0.087, 1.75, 0.05, 0.1047]),
            tau1_bracket: [d.tau1_bracket.0, d.tau1_bracket.1],
            tau1_rel_width: d.tau1_rel_width,
            tau1_grid: d.tau1_grid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub phase1_eps: f64,
    pub gap_tol: f64,
    pub max_newton: usize,
    pub mu_factor: f64,
    pub var_radius: f64,
    pub newton_tol: f64,
    pub phase1_rel_gap: f64,
    pub analytic_center: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            phase1_eps: o.phase1_eps,
            gap_tol: o.gap_tol,
            max_newton: o.max_newton,
            mu_factor: o.mu_factor,
            var_radius: o.var_radius,
            newton_tol: o.newton_tol,
            phase1_rel_gap: o.phase1_rel_gap,
            analytic_center: o.analytic_center,
        }
    }
}

impl From<SolverConfig> for SolverOptions {
    fn from(c: SolverConfig) -> Self {
        SolverOptions {
            phase1_eps: c.phase1_eps,
            gap_tol: c.gap_tol,
            max_newton: c.max_newton,
            mu_factor: c.mu_factor,
            var_radius: c.var_radius,
            newton_tol: c.newton_tol,
            phase1_rel_gap: c.phase1_rel_gap,
            analytic_center: c.analytic_center,
        }
    }
}

/// Simulation defaults that are not part of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Largest `|λ|·h` allowed for the internal integration step.
    pub stiffness_budget: f64,
    /// Relative tolerance of the sampled decay check.
    pub decay_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            stiffness_budget: 0.25,
            decay_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub vehicle: VehicleParams,
    pub driver: DriverGains,
    pub weighting: WeightingParams,
    pub activity: ActivityParams,
    pub scheduling: SchedulingBounds,
    pub limits: StateLimits,
    pub design: DesignConfig,
    pub solver: SolverConfig,
    pub sim: SimConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_layers(&[text])
    }

    /// Merges the layers in order (later wins) on top of the defaults.
    pub fn from_layers(layers: &[&str]) -> Result<Self> {
        let mut merged = toml::Table::new();
        for text in layers {
            let table: toml::Table = toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
            merge(&mut merged, table);
        }
        let cfg: Config = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| CoreError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(paths: &[impl AsRef<Path>]) -> Result<Self> {
        let texts = paths
            .iter()
            .map(|p| {
                std::fs::read_to_string(p).map_err(|source| CoreError::Io {
                    path: p.as_ref().display().to_string(),
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        Self::from_layers(&refs)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.driver.validate()?;
        self.weighting.validate()?;
        self.activity.validate()?;
        self.scheduling.validate()?;
        self.limits.validate()?;
        self.design_spec().validate(6)?;
        if !(self.sim.stiffness_budget > 0.0 && self.sim.decay_tol >= 0.0 && self.sim.decay_tol < 1.0) {
            return Err(CoreError::Config("sim.stiffness_budget must be positive and decay_tol in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn output_matrix(&self) -> Matrix6<f64> {
        Matrix6::from_diagonal(&Vector6::from_row_slice(&self.design.output_weights))
    }

    pub fn constraint_rows(&self) -> Vec<Vector6<f64>> {
        state_constraint_rows_with(&self.vehicle, &self.limits)
    }

    pub fn design_spec(&self) -> DesignSpec {
        let d = &self.design;
        DesignSpec {
            u_max: d.u_max,
            tau_1: d.tau_1,
            rho: d.rho,
            r: d.r,
            h_rows: self
                .constraint_rows()
                .iter()
                .map(|h| DVector::from_column_slice(h.as_slice()))
                .collect(),
            objective: d.objective,
            strict_margin: d.strict_margin,
            state_scale: d.state_scale.map(|s| s.to_vec()),
            tau1_bracket: (d.tau1_bracket[0], d.tau1_bracket[1]),
            tau1_rel_width: d.tau1_rel_width,
            tau1_grid: d.tau1_grid,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.into()
    }
}

fn merge(base: &mut toml::Table, layer: toml::Table) {
    for (key, value) in layer {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(l)) => merge(b, l),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

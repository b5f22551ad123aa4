use nalgebra::{Matrix6, RowVector6, Vector6};

use super::rk4::rk4_step;
use super::scenario::Scenario;
use crate::config::Config;
use crate::error::{CoreError, Result};
use crate::interaction::{driver_activity, weighting_mu, ActivityParams, WeightingParams};
use crate::synthesis::SynthesisResult;
use crate::ts::{memberships, AffineModel, TsModel, NUM_RULES};
use crate::vehicle::{build_driver_coeffs, DriverGains, LateralState, VehicleParams, HEADING, STEER_RATE};

/// Upper bound on internal steps per sample.
pub const MAX_SUBSTEPS: usize = 100_000;

/// Per-rule state feedback with a symmetric bound on the fictive torque.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub gains: Vec<RowVector6<f64>>,
    pub u_max: f64,
    /// `X⁻¹`; `None` for a controller without certificate.
    pub p: Option<Matrix6<f64>>,
    pub tau_1: f64,
    pub fingerprint: String,
}

impl Controller {
    /// Fails unless the certificate was computed for `ts`.
    pub fn from_certificate(res: &SynthesisResult, ts: &TsModel) -> Result<Self> {
        let found = ts.fingerprint();
        if res.fingerprint != found {
            return Err(CoreError::FingerprintMismatch {
                expected: res.fingerprint.clone(),
                found,
            });
        }
        if res.rules.len() != ts.num_rules() {
            return Err(CoreError::Config("certificate and model differ in rule count".into()));
        }
        let mut gains = Vec::with_capacity(res.rules.len());
        for r in &res.rules {
            if r.k.shape() != (1, 6) {
                return Err(CoreError::Config("controller gains must be 1 x 6".into()));
            }
            gains.push(RowVector6::from_row_slice(r.k.as_slice()));
        }
        let p = res.lyapunov_p()?;
        Ok(Self {
            gains,
            u_max: res.u_max,
            p: Some(Matrix6::from_column_slice(p.as_slice())),
            tau_1: res.tau_1,
            fingerprint: found,
        })
    }

    /// Zero gains: the driver steers alone.
    pub fn disabled(ts: &TsModel, u_max: f64) -> Self {
        Self {
            gains: vec![RowVector6::zeros(); ts.num_rules()],
            u_max,
            p: None,
            tau_1: 0.0,
            fingerprint: ts.fingerprint(),
        }
    }

    /// `(u_raw, u_sat)` for given memberships.
    pub fn control(&self, eta: &[f64; NUM_RULES], x: &LateralState) -> (f64, f64) {
        let u_raw: f64 = eta.iter().zip(&self.gains).map(|(e, k)| e * (k * x)[0]).sum();
        (u_raw, u_raw.clamp(-self.u_max, self.u_max))
    }

    /// `xᵀX⁻¹x`, or 0 without certificate.
    pub fn lyapunov(&self, x: &LateralState) -> f64 {
        self.p.map_or(0.0, |p| (x.transpose() * p * x)[0])
    }
}

/// PDC law `u_raw = Σ η_i(v_x, μ)·K_i·x`, `u_sat = sat(u_raw)`.
pub fn pdc_control(ctrl: &Controller, ts: &TsModel, x: &LateralState, v_x: f64, mu: f64) -> Result<(f64, f64)> {
    let found = ts.fingerprint();
    if ctrl.fingerprint != found {
        return Err(CoreError::FingerprintMismatch {
            expected: ctrl.fingerprint.clone(),
            found,
        });
    }
    Ok(ctrl.control(&memberships(v_x, mu, &ts.bounds).eta, x))
}

/// Exogenous inputs at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exogenous {
    pub v_x: f64,
    pub f_w: f64,
    pub rho_c: f64,
    pub ds: f64,
    pub t_ovr: f64,
    /// Whether `v_x` had to be clamped into the scheduling bounds.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signals {
    /// Total driver torque: model plus override.
    pub t_d: f64,
    pub theta_d: f64,
    pub mu: f64,
    pub eta: [f64; NUM_RULES],
    pub u_raw: f64,
    pub u_sat: f64,
    pub t_c: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: LateralState,
    pub exo: Exogenous,
    pub sig: Signals,
    /// `xᵀX⁻¹x`.
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub scenario: String,
    pub step: f64,
    /// Internal integration steps per sample.
    pub substeps: usize,
    pub u_max: f64,
    pub tau_1: f64,
    pub samples: Vec<Sample>,
    /// Samples whose scheduling inputs were clamped into the bounds.
    pub clamped_samples: usize,
}

/// Plant, simulated driver and controller.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub params: VehicleParams,
    pub driver: DriverGains,
    pub weighting: WeightingParams,
    pub activity: ActivityParams,
    pub ts: TsModel,
    pub controller: Controller,
    /// Largest `|λ|·h` tolerated by the internal step.
    pub stiffness_budget: f64,
    model: AffineModel,
    fast_rate: f64,
}

impl ClosedLoop {
    pub fn new(cfg: &Config, ts: TsModel, controller: Controller) -> Result<Self> {
        if controller.fingerprint != ts.fingerprint() {
            return Err(CoreError::FingerprintMismatch {
                expected: controller.fingerprint.clone(),
                found: ts.fingerprint(),
            });
        }
        let model = AffineModel::new(&cfg.vehicle, &cfg.driver);
        // spectral radius over the vertices, with and without the feedback
        let fast_rate = ts
            .vertices
            .iter()
            .zip(&controller.gains)
            .flat_map(|(v, k)| [v.a, v.a + v.bu * k])
            .flat_map(|a| a.complex_eigenvalues().iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        Ok(Self {
            params: cfg.vehicle,
            driver: cfg.driver,
            weighting: cfg.weighting,
            activity: cfg.activity,
            ts,
            controller,
            stiffness_budget: cfg.sim.stiffness_budget,
            model,
            fast_rate,
        })
    }

    pub fn substeps(&self, step: f64) -> usize {
        ((step * self.fast_rate / self.stiffness_budget).ceil() as usize).max(1)
    }

    pub fn exogenous(&self, sc: &Scenario, t: f64) -> Exogenous {
        let b = &self.ts.bounds;
        let raw_v = sc.v_x.value(t);
        let v_x = raw_v.clamp(b.v_min, b.v_max);
        Exogenous {
            v_x,
            f_w: sc.wind.value(t),
            rho_c: sc.curvature.value(t),
            ds: sc.ds.value(t).clamp(0.0, 1.0),
            t_ovr: sc.override_torque.value(t),
            clamped: v_x != raw_v,
        }
    }

    pub fn signals(&self, x: &LateralState, exo: &Exogenous, driver_row: &RowVector6<f64>) -> Signals {
        let t_d = (driver_row * x)[0] + exo.t_ovr;
        let theta_d = driver_activity(t_d, exo.ds, &self.activity).expect("DS is clamped into [0, 1]");
        let mu = weighting_mu(theta_d, &self.weighting);
        let b = &self.ts.bounds;
        let mu_sched = mu.clamp(b.mu_min, b.mu_max);
        let eta = memberships(exo.v_x, mu_sched, b).eta;
        let (u_raw, u_sat) = self.controller.control(&eta, x);
        Signals {
            t_d,
            theta_d,
            mu,
            eta,
            u_raw,
            u_sat,
            t_c: mu * u_sat,
            clamped: exo.clamped || mu_sched != mu,
        }
    }

    fn driver_row(&self, v_x: f64) -> Result<RowVector6<f64>> {
        Ok(build_driver_coeffs(&self.params, &self.driver, v_x)?.row())
    }

    fn derivative(&self, x: &LateralState, exo: &Exogenous, a_v: &Matrix6<f64>, row: &RowVector6<f64>) -> Vector6<f64> {
        let s = self.signals(x, exo, row);
        // a_v already carries the driver model torque
        let mut dx = a_v * x + self.model.b_w * exo.f_w;
        dx[STEER_RATE] += self.model.rho * (s.t_c + exo.t_ovr);
        dx[HEADING] -= exo.v_x * exo.rho_c;
        dx
    }

    /// Advances one sample period. Exogenous inputs are held at the midpoint
    /// of each internal step.
    pub fn step(&self, sc: &Scenario, t: f64, x: &LateralState) -> Result<LateralState> {
        let n = self.substeps(sc.step);
        let h = sc.step / n as f64;
        let mut x = *x;
        for s in 0..n {
            let t0 = t + s as f64 * h;
            let exo = self.exogenous(sc, t0 + 0.5 * h);
            let a_v = self.model.a_at(exo.v_x, 1.0 / exo.v_x);
            let row = self.driver_row(exo.v_x)?;
            x = rk4_step(|_, x| self.derivative(x, &exo, &a_v, &row), t0, &x, h);
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(CoreError::Simulation {
                t: t + sc.step,
                msg: format!("non-finite state {:?}", x.as_slice()),
            })
        }
    }

    pub fn sample(&self, sc: &Scenario, t: f64, x: &LateralState) -> Result<Sample> {
        let exo = self.exogenous(sc, t);
        let sig = self.signals(x, &exo, &self.driver_row(exo.v_x)?);
        let v = self.controller.lyapunov(x);
        let finite = [sig.t_d, sig.theta_d, sig.mu, sig.u_raw, sig.u_sat, sig.t_c, v]
            .iter()
            .chain(sig.eta.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(CoreError::Simulation {
                t,
                msg: "non-finite signal".into(),
            });
        }
        Ok(Sample { t, x: *x, exo, sig, v })
    }

    pub fn run(&self, sc: &Scenario) -> Result<SimTrace> {
        sc.validate()?;
        if !(self.fast_rate.is_finite() && self.substeps(sc.step) <= MAX_SUBSTEPS) {
            return Err(CoreError::Simulation {
                t: 0.0,
                msg: format!("closed loop too stiff (spectral radius {:e})", self.fast_rate),
            });
        }
        let n = sc.num_samples();
        let mut samples = Vec::with_capacity(n);
        let mut x = LateralState::from_row_slice(&sc.initial_state);
        for k in 0..n {
            let t = k as f64 * sc.step;
            samples.push(self.sample(sc, t, &x)?);
            if k + 1 < n {
                x = self.step(sc, t, &x)?;
            }
        }
        let clamped_samples = samples.iter().filter(|s| s.sig.clamped).count();
        if clamped_samples > 0 {
            log::warn!("{}: {clamped_samples} samples had scheduling inputs clamped", sc.name);
        }
        Ok(SimTrace {
            scenario: sc.name.clone(),
            step: sc.step,
            substeps: self.substeps(sc.step),
            u_max: self.controller.u_max,
            tau_1: self.controller.tau_1,
            samples,
            clamped_samples,
        })
    }
}

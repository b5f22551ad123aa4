//! Solving the assembled system, and the search for the largest decay rate.

use dsas_sdp::{solve_with, SolveStatus, SolverOptions};

use super::{assemble_problem, extract_result, DesignSpec, LmiModel, Objective, SynthesisResult};
use crate::error::{CoreError, Result};
use crate::ts::TsModel;

/// One probe of the decay-rate search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub tau_1: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tau1Search {
    pub probes: Vec<Probe>,
}

impl Tau1Search {
    pub fn summary(&self) -> String {
        self.probes
            .iter()
            .map(|p| format!("tau_1={:.4e}:{:?}", p.tau_1, p.status))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Solves at a fixed `tau_1`. `Ok(None)` means no certificate was found
/// (infeasible or numerical failure, see `probe.status`).
pub fn synthesize_at(
    model: &LmiModel,
    spec: &DesignSpec,
    tau_1: f64,
    opts: &SolverOptions,
    fingerprint: &str,
) -> Result<(Option<SynthesisResult>, Probe)> {
    let spec = DesignSpec {
        tau_1,
        ..spec.clone()
    };
    let assembly = assemble_problem(model, &spec)?;
    let sol = solve_with(&assembly.problem, opts)?;
    let probe = Probe {
        tau_1,
        status: sol.status,
        iterations: sol.iterations,
    };
    log::info!(
        "tau_1 = {tau_1:.4e}: {:?} after {} Newton steps (phase-1 margin {:.3e})",
        sol.status,
        sol.iterations,
        sol.phase1_margin
    );
    if !sol.status.is_success() {
        return Ok((None, probe));
    }
    match extract_result(&assembly, &sol, &spec, fingerprint) {
        Ok(res) => Ok((Some(res), probe)),
        Err(CoreError::CertificateRejected(msg)) => {
            log::warn!("tau_1 = {tau_1:.4e}: certificate rejected: {msg}");
            Ok((
                None,
                Probe {
                    status: SolveStatus::NumericalFailure,
                    ..probe
                },
            ))
        }
        Err(e) => Err(e),
    }
}

/// Largest certified `tau_1` in the bracket.
///
/// Feasibility in `tau_1` is an interval that need not contain the lower
/// bracket end, so a log-spaced grid is scanned from the top down to find a
/// feasible point; the gap to the next infeasible grid point is then bisected
/// geometrically to the requested relative width.
pub fn bisect_tau1(
    model: &LmiModel,
    spec: &DesignSpec,
    opts: &SolverOptions,
    fingerprint: &str,
) -> Result<(f64, SynthesisResult, Tau1Search)> {
    let (lo, hi) = spec.tau1_bracket;
    let n = spec.tau1_grid.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect();
    let mut search = Tau1Search::default();

    let mut found = None;
    for k in (0..n).rev() {
        let (res, probe) = synthesize_at(model, spec, grid[k], opts, fingerprint)?;
        search.probes.push(probe);
        if let Some(res) = res {
            found = Some((k, res));
            break;
        }
    }
    let Some((k, mut best)) = found else {
        let numerical = search
            .probes
            .iter()
            .all(|p| p.status == SolveStatus::NumericalFailure);
        let msg = format!("no certificate for tau_1 in [{lo:e}, {hi:e}]; probes: {}", search.summary());
        return Err(if numerical {
            CoreError::Solver(msg)
        } else {
            CoreError::Infeasible(msg)
        });
    };
    if k + 1 == n {
        return Ok((grid[k], best, search));
    }
    let (mut a, mut b) = (grid[k], grid[k + 1]);
    while (b - a) / a > spec.tau1_rel_width {
        let mid = (a * b).sqrt();
        let (res, probe) = synthesize_at(model, spec, mid, opts, fingerprint)?;
        search.probes.push(probe);
        match res {
            Some(res) => {
                a = mid;
                best = res;
            }
            None => b = mid,
        }
    }
    Ok((a, best, search))
}

/// Runs the synthesis selected by `spec.objective` on a T-S model.
pub fn synthesize(ts: &TsModel, spec: &DesignSpec, opts: &SolverOptions) -> Result<(SynthesisResult, Tau1Search)> {
    let model = LmiModel::from_ts(ts);
    let fingerprint = ts.fingerprint();
    match spec.objective {
        Objective::MaximizeTau1 => {
            let (_, res, search) = bisect_tau1(&model, spec, opts, &fingerprint)?;
            Ok((res, search))
        }
        Objective::Feasibility | Objective::MinimizeGamma => {
            let (res, probe) = synthesize_at(&model, spec, spec.tau_1, opts, &fingerprint)?;
            let search = Tau1Search { probes: vec![probe] };
            match res {
                Some(res) => Ok((res, search)),
                None if probe.status == SolveStatus::Infeasible => Err(CoreError::Infeasible(format!(
                    "no certificate at tau_1 = {:e}",
                    spec.tau_1
                ))),
                None => Err(CoreError::Solver(format!(
                    "solver status {:?} at tau_1 = {:e}",
                    probe.status, spec.tau_1
                ))),
            }
        }
    }
}

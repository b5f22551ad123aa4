//! Primal log-det barrier method.
//!
//! Phase 1 maximizes a common margin `t` with `F_b(y) ⪰ t·I` on every
//! (normalized) block, until `t` is positive and within `phase1_rel_gap` of
//! its maximum; the result is a well-centered strictly feasible point. If the
//! bound `t + ν/s` on the largest margin falls below `-phase1_eps` the problem
//! is declared infeasible. With an objective, phase 2 then follows the
//! central path of `s·cᵀy − Σ log det F_b(y)` with geometric increase of `s`.
//!
//! The decision vector is kept inside the ball `‖y‖ ≤ var_radius` by an extra
//! `−log(R² − ‖y‖²)` term so that the barrier stays bounded below on problems
//! whose feasible set is unbounded.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::Result;
use crate::jacobi::min_eigenvalue;
use crate::problem::SdpProblem;

/// Margin below which a returned point is not accepted as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Infeasibility is declared once the phase-1 margin is certified below `-phase1_eps`.
    pub phase1_eps: f64,
    /// Relative duality-gap target of phase 2.
    pub gap_tol: f64,
    /// Total Newton step budget over both phases.
    pub max_newton: usize,
    /// Geometric growth of the barrier weight between centering steps.
    pub mu_factor: f64,
    /// Radius of the ball the decision vector is confined to.
    pub var_radius: f64,
    /// Centering stops when `λ²/2` (Newton decrement) falls below this.
    pub newton_tol: f64,
    /// Phase 1 accepts a positive margin `t` once the gap bound is below
    /// `phase1_rel_gap·t`, i.e. `t` is close to the largest achievable margin.
    pub phase1_rel_gap: f64,
    /// Without an objective, move the phase-1 point to the analytic center
    /// of the feasible set (intersected with the variable ball).
    pub analytic_center: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            phase1_eps: 1e-8,
            gap_tol: 1e-7,
            max_newton: 500,
            mu_factor: 5.0,
            var_radius: 1e5,
            newton_tol: 1e-8,
            phase1_rel_gap: 0.05,
            analytic_center: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Optimal,
    Infeasible,
    NumericalFailure,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolveStatus::Feasible | SolveStatus::Optimal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub y: Vec<f64>,
    pub status: SolveStatus,
    /// `λ_min(F_b(y))` of every block, unnormalized, computed by Jacobi sweeps.
    pub block_min_eigenvalues: Vec<f64>,
    pub iterations: usize,
    /// Final duality-gap estimate (`ν/s`) of the last phase run.
    pub gap: f64,
    /// Phase-1 margin `t` at exit (normalized blocks).
    pub phase1_margin: f64,
}

impl SdpSolution {
    pub fn objective_value(&self, problem: &SdpProblem) -> Option<f64> {
        problem
            .objective
            .as_ref()
            .map(|c| c.iter().zip(&self.y).map(|(a, b)| a * b).sum())
    }
}

pub fn solve(problem: &SdpProblem) -> Result<SdpSolution> {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let mut solver = Barrier::new(problem, opts);
    Ok(solver.run())
}

struct Prepared {
    n: usize,
    constant: DMatrix<f64>,
    /// `(variable, upper-triangle entries)`; phase 1 appends the margin variable.
    terms: Vec<(usize, Vec<(usize, usize, f64)>)>,
}

enum Step {
    Converged,
    Failed,
}

struct Barrier<'a> {
    problem: &'a SdpProblem,
    opts: &'a SolverOptions,
    blocks: Vec<Prepared>,
    m: usize,
    iterations: usize,
}

impl<'a> Barrier<'a> {
    fn new(problem: &'a SdpProblem, opts: &'a SolverOptions) -> Self {
        let blocks = problem
            .blocks
            .iter()
            .map(|b| {
                let mut scale = b.constant.max_abs();
                for (_, f) in &b.terms {
                    scale = scale.max(f.max_abs());
                }
                if scale == 0.0 {
                    scale = 1.0;
                }
                let mut constant = b.constant.to_dense(b.size);
                constant /= scale;
                let terms = b
                    .terms
                    .iter()
                    .map(|(j, f)| {
                        (
                            *j,
                            f.entries()
                                .iter()
                                .map(|&(p, q, v)| (p, q, v / scale))
                                .collect(),
                        )
                    })
                    .collect();
                Prepared {
                    n: b.size,
                    constant,
                    terms,
                }
            })
            .collect();
        Self {
            problem,
            opts,
            blocks,
            m: problem.num_vars,
            iterations: 0,
        }
    }

    fn run(&mut self) -> SdpSolution {
        let m = self.m;
        let degree: f64 = self.blocks.iter().map(|b| b.n as f64).sum::<f64>() + 1.0;

        // phase 1 over z = (y, t)
        for b in &mut self.blocks {
            let diag = (0..b.n).map(|i| (i, i, -1.0)).collect();
            b.terms.push((m, diag));
        }
        let mut z = vec![0.0; m + 1];
        let t0 = self
            .blocks
            .iter()
            .map(|b| min_eigenvalue(&b.constant))
            .fold(f64::INFINITY, f64::min);
        z[m] = if t0.is_finite() { t0 - 1.0 } else { -1.0 };
        let mut cost = vec![0.0; m + 1];
        cost[m] = -1.0;

        let mut s = 1.0;
        let mut gap;
        let phase1 = loop {
            if let Step::Failed = self.center(&mut z, &cost, s) {
                break SolveStatus::NumericalFailure;
            }
            gap = degree / s;
            let t = z[m];
            if t > 0.0 && gap <= self.opts.phase1_rel_gap * t {
                break SolveStatus::Feasible;
            }
            if t + gap < -self.opts.phase1_eps {
                break SolveStatus::Infeasible;
            }
            if gap < 1e-13 {
                break if t > 0.0 { SolveStatus::Feasible } else { SolveStatus::Infeasible };
            }
            s *= self.opts.mu_factor;
        };
        let margin = z[m];
        gap = degree / s;
        for b in &mut self.blocks {
            b.terms.pop();
        }
        z.truncate(m);

        let status = match (phase1, &self.problem.objective) {
            (SolveStatus::Feasible, Some(c)) => {
                let c = c.clone();
                let scale = 1.0 + dot(&c, &z).abs();
                let mut s = degree / scale;
                loop {
                    if let Step::Failed = self.center(&mut z, &c, s) {
                        break SolveStatus::NumericalFailure;
                    }
                    gap = degree / s;
                    if gap < self.opts.gap_tol * (1.0 + dot(&c, &z).abs()) {
                        break SolveStatus::Optimal;
                    }
                    s *= self.opts.mu_factor;
                }
            }
            (SolveStatus::Feasible, None) if self.opts.analytic_center => {
                // every accepted step stays strictly feasible, so an
                // interrupted centering still leaves a valid point
                let zero = vec![0.0; m];
                let _ = self.center(&mut z, &zero, 1.0);
                SolveStatus::Feasible
            }
            (st, _) => st,
        };

        let block_min_eigenvalues: Vec<f64> = self
            .problem
            .blocks
            .iter()
            .map(|b| min_eigenvalue(&b.eval(&z)))
            .collect();
        let status = if status.is_success()
            && block_min_eigenvalues.iter().any(|&e| e < -FEASIBILITY_TOL)
        {
            SolveStatus::NumericalFailure
        } else {
            status
        };
        SdpSolution {
            y: z,
            status,
            block_min_eigenvalues,
            iterations: self.iterations,
            gap,
            phase1_margin: margin,
        }
    }

    fn eval_block(b: &Prepared, z: &[f64]) -> DMatrix<f64> {
        let mut f = b.constant.clone();
        for (j, entries) in &b.terms {
            let w = z[*j];
            if w == 0.0 {
                continue;
            }
            for &(p, q, v) in entries {
                f[(p, q)] += w * v;
                if p != q {
                    f[(q, p)] += w * v;
                }
            }
        }
        f
    }

    /// Barrier objective `s·cᵀz − Σ log det F_b − log(R² − ‖y‖²)`, or `None`
    /// outside the domain.
    fn value(&self, z: &[f64], cost: &[f64], s: f64) -> Option<f64> {
        let mut v = s * dot(cost, z);
        for b in &self.blocks {
            let chol = Cholesky::new(Self::eval_block(b, z))?;
            let l = chol.l_dirty();
            for i in 0..b.n {
                v -= 2.0 * l[(i, i)].ln();
            }
        }
        let r2 = self.opts.var_radius * self.opts.var_radius;
        let slack = r2 - z[..self.m].iter().map(|x| x * x).sum::<f64>();
        if slack <= 0.0 {
            return None;
        }
        v -= slack.ln();
        v.is_finite().then_some(v)
    }

    /// Gradient and Hessian of the barrier objective at a strictly feasible `z`.
    fn derivatives(&self, z: &[f64], cost: &[f64], s: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let dim = z.len();
        let mut grad = DVector::from_iterator(dim, cost.iter().map(|c| s * c));
        let mut hess = DMatrix::<f64>::zeros(dim, dim);

        for b in &self.blocks {
            let n = b.n;
            let chol = Cholesky::new(Self::eval_block(b, z))?;
            // rows of `minv` are L⁻¹; G_j = L⁻¹ F_j L⁻ᵀ
            let minv = chol
                .l()
                .solve_lower_triangular(&DMatrix::identity(n, n))?;
            let packed = n * (n + 1) / 2;
            let k = b.terms.len();
            let mut g = DMatrix::<f64>::zeros(packed, k);
            let mut full = vec![0.0; n * n];
            for (col, (j, entries)) in b.terms.iter().enumerate() {
                full.iter_mut().for_each(|x| *x = 0.0);
                for &(p, q, v) in entries {
                    for a in 0..n {
                        let map = minv[(a, p)];
                        let maq = minv[(a, q)];
                        if map == 0.0 && maq == 0.0 {
                            continue;
                        }
                        for c in a..n {
                            let mut add = map * minv[(c, q)];
                            if p != q {
                                add += maq * minv[(c, p)];
                            }
                            full[a * n + c] += v * add;
                        }
                    }
                }
                let mut trace = 0.0;
                let mut idx = 0;
                let column = &mut g.as_mut_slice()[col * packed..(col + 1) * packed];
                for a in 0..n {
                    trace += full[a * n + a];
                    column[idx] = full[a * n + a];
                    idx += 1;
                    for c in (a + 1)..n {
                        column[idx] = std::f64::consts::SQRT_2 * full[a * n + c];
                        idx += 1;
                    }
                }
                grad[*j] -= trace;
            }
            let hb = g.transpose() * &g;
            for (r, (jr, _)) in b.terms.iter().enumerate() {
                for (c, (jc, _)) in b.terms.iter().enumerate() {
                    hess[(*jr, *jc)] += hb[(r, c)];
                }
            }
        }

        let r2 = self.opts.var_radius * self.opts.var_radius;
        let y = &z[..self.m];
        let slack = r2 - y.iter().map(|x| x * x).sum::<f64>();
        for i in 0..self.m {
            grad[i] += 2.0 * y[i] / slack;
            hess[(i, i)] += 2.0 / slack;
            for j in 0..self.m {
                hess[(i, j)] += 4.0 * y[i] * y[j] / (slack * slack);
            }
        }
        Some((grad, hess))
    }

    /// Damped Newton centering for barrier weight `s`.
    fn center(&mut self, z: &mut Vec<f64>, cost: &[f64], s: f64) -> Step {
        loop {
            if self.iterations >= self.opts.max_newton {
                return Step::Failed;
            }
            let Some((grad, hess)) = self.derivatives(z, cost, s) else {
                return Step::Failed;
            };
            let Some(chol) = factor_with_shift(hess) else {
                return Step::Failed;
            };
            let step = -chol.solve(&grad);
            let decrement = -grad.dot(&step);
            if !decrement.is_finite() {
                return Step::Failed;
            }
            if decrement / 2.0 <= self.opts.newton_tol {
                return Step::Converged;
            }
            self.iterations += 1;

            let Some(f0) = self.value(z, cost, s) else {
                return Step::Failed;
            };
            let slope = grad.dot(&step);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = z
                    .iter()
                    .zip(step.iter())
                    .map(|(a, d)| a + alpha * d)
                    .collect();
                if let Some(f) = self.value(&trial, cost, s) {
                    if f <= f0 + 0.01 * alpha * slope {
                        *z = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                // no progress possible at working precision
                return if decrement < 1e-6 { Step::Converged } else { Step::Failed };
            }
        }
    }
}

/// Cholesky of the Newton matrix, retrying with a growing diagonal shift
/// (starting at `1e-10` relative to the largest diagonal entry) on failure.
fn factor_with_shift(mut h: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let n = h.nrows();
    let max_diag = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    if let Some(c) = Cholesky::new(h.clone()) {
        return Some(c);
    }
    let mut shift = 1e-10 * max_diag;
    for _ in 0..8 {
        for i in 0..n {
            h[(i, i)] += shift;
        }
        if let Some(c) = Cholesky::new(h.clone()) {
            return Some(c);
        }
        shift *= 100.0;
    }
    None
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LmiBlock, SymSparse};

    fn scalar_block(c: f64, coef: f64) -> LmiBlock {
        let mut b = LmiBlock::new(1, "s");
        b.constant = SymSparse::identity(1, c);
        b.terms.push((0, SymSparse::identity(1, coef)));
        b
    }

    #[test]
    fn two_by_two_psd_maximize() {
        let mut p = SdpProblem::new(1);
        let mut b = LmiBlock::new(2, "[[1,y],[y,1]]");
        b.constant = SymSparse::identity(2, 1.0);
        let mut f = SymSparse::new();
        f.add(0, 1, 1.0);
        b.terms.push((0, f));
        p.push_block(b);
        p.objective = Some(vec![-1.0]);
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.y[0] - 1.0).abs() < 1e-6, "{:?}", sol.y);
    }

    #[test]
    fn interval_intersection_minimize() {
        let mut p = SdpProblem::new(1);
        p.push_block(scalar_block(-2.0, 1.0));
        p.push_block(scalar_block(5.0, -1.0));
        p.objective = Some(vec![1.0]);
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.y[0] - 2.0).abs() < 1e-6, "{:?}", sol.y);
    }

    #[test]
    fn empty_interval_is_infeasible() {
        let mut p = SdpProblem::new(1);
        p.push_block(scalar_block(-5.0, 1.0));
        p.push_block(scalar_block(2.0, -1.0));
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn feasibility_only_returns_interior_point() {
        let mut p = SdpProblem::new(1);
        p.push_block(scalar_block(-2.0, 1.0));
        p.push_block(scalar_block(5.0, -1.0));
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::Feasible);
        assert!(sol.y[0] > 2.0 && sol.y[0] < 5.0);
        assert!(sol.block_min_eigenvalues.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn newton_budget_exhaustion_reports_failure() {
        let mut p = SdpProblem::new(1);
        p.push_block(scalar_block(-2.0, 1.0));
        p.push_block(scalar_block(5.0, -1.0));
        p.objective = Some(vec![1.0]);
        let opts = SolverOptions {
            max_newton: 2,
            ..SolverOptions::default()
        };
        let sol = solve_with(&p, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::NumericalFailure);
    }
}

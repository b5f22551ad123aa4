//! Dense interior-point solver for small linear matrix inequality problems.
//!
//! Problems are stated as blocks `F_0 + Σ_j y_j F_j ⪰ 0` over a flat decision
//! vector. [`solve`] runs a phase-1 margin maximization followed, when an
//! objective is present, by a log-det barrier central path. [`export_sdpa`]
//! writes the SDPA sparse format for cross-checking with external solvers.

pub mod barrier;
pub mod error;
pub mod jacobi;
pub mod problem;
pub mod sdpa;

pub use barrier::{solve, solve_with, SdpSolution, SolveStatus, SolverOptions, FEASIBILITY_TOL};
pub use error::{Result, SdpError};
pub use jacobi::{min_eigenvalue, symmetric_eigenvalues};
pub use problem::{LmiBlock, SdpProblem, SymSparse, MAX_BLOCK_SIZE, MAX_VARS};
pub use sdpa::{export_sdpa, import_sdpa};

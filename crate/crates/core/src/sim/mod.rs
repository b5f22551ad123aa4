//! Closed-loop simulation of the shared controller with a simulated driver.

mod analysis;
mod closed_loop;
mod output;
mod rk4;
mod scenario;

pub use analysis::{check_constraints, lyapunov_trace, ConstraintReport, DecayReport};
pub use closed_loop::{pdc_control, ClosedLoop, Controller, Exogenous, Sample, Signals, SimTrace, MAX_SUBSTEPS};
pub use output::{csv_header, render_svg, write_csv};
pub use rk4::{integrate, rk4_step};
pub use scenario::{Interp, Profile, Pulse, Scenario, PRESETS, TEST2_PHASES, TEST3_OVERRIDE, TEST3_WINDOWS};

//! The Kaczmarz iteration for equalities and inequalities, convergence
//! traces, and stopping logic.

mod feasibility;
mod run;
mod step;
mod trace;

pub use feasibility::{analytic_distance, feasibility_gap, max_violation, FeasibilityReport};
pub use run::{solve, KaczmarzRun, StepInfo, StoppingCriteria, TIMER_BLOCK};
pub use step::{kaczmarz_inequality_step, kaczmarz_step, project_in_place, step_identity_check};
pub use trace::{normalize, ConvergenceTrace, TraceRecord};

//! SAT-based verification of circuit bad outputs and translation of the
//! results back to the source system.

mod cnf;
mod engine;
mod lift;
pub mod report;
pub mod sat;
mod vcd;

pub use cnf::{
    parse_solver_output, ClauseSink, Cnf, DimacsError, ExternalSolver, SatBackend, SolveError,
    Unroller,
};
pub use engine::{
    bmc, kinduction, BmcOutcome, CexTrace, CheckConfig, InductionOutcome, SolverChoice,
    VerifyError, DEFAULT_TIME_LIMIT,
};
pub use lift::{decode_frames, lift_cex, BipCex, BipStep, LiftError};
pub use sat::{ResourceLimit, Solver};
pub use vcd::write_vcd;

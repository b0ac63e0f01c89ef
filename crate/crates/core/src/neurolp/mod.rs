//! Primal–dual gradient-flow LP solver.
//!
//! The network state `u = (z, ξ)` follows `du/dt = -β ∇E(u)` where `E` is a
//! nonnegative energy vanishing exactly at primal–dual optimal pairs of
//!
//! ```text
//! min dᵀz   s.t.  M1 z ≥ r1,  M2 z = r2,  z1 ≥ 0
//! max rᵀξ   s.t.  M3 ξ ≤ d1,  M4 ξ = d2,  ξ1 ≥ 0
//! ```

mod energy;
mod flow;
mod lp;
mod oracle;
mod scaling;

pub use energy::{energy, energy_gradient, kkt_breakdown, kkt_residual, KktBreakdown, KktTerm};
pub use flow::{
    integrate_flow, solve_lp, Integrator, LpSolution, SolveReport, SolveStatus, SolverConfig,
    TracePoint,
};
pub use lp::{GeneralFormLp, LpBuilder};
pub use oracle::{vertex_oracle, OracleOutcome, ORACLE_MAX_BASES};
pub use scaling::{equilibrate, Scaling};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("instance too large for exhaustive oracle: {0} candidate bases")]
    TooLarge(u128),
}

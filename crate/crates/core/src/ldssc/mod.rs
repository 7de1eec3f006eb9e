//! Lagrange-dual solvers for the nearest doubly-stochastic PSD matrix.
//!
//! The primal problem is
//!
//! ```text
//! min_F ½‖K − F‖_F²   s.t.  F ≥ 0,  F𝟙 = 𝟙,  F = Fᵀ,  F ≽ 0.
//! ```
//!
//! With multipliers `Z ≽ 0`, `Q ≥ 0` and `u` for the row sums, stationarity
//! gives `F = K + Q + M + Z` where `M = u𝟙ᵀ + 𝟙uᵀ`, and the dual becomes
//! `min ½‖Z + Q + M + K‖² − 2𝟙ᵀu` over `Z ≽ 0, Q ≥ 0`. Writing
//! `P = −(Q + M + K)`, the optimal Z is `P₊`, which leaves the smooth problem
//! `min_{Q ≥ 0, u} ½‖P₋‖² − 2𝟙ᵀu` whose gradients are `−P₋` in Q and
//! `−2 − 2·rowsum(P₋)` in u. The primal is recovered as `F = −P₋`, which is
//! PSD by construction.

pub mod boxqn;
pub mod dual;
pub mod solver;

pub use boxqn::{
    minimize_box_qn, minimize_box_qn_observed, BoxQnConfig, IterInfo, QnOutcome, QnStatus,
};
pub use dual::{
    dual_objective, dual_value, grad_q, grad_u, primal_objective, recover_primal,
    reduced_objective, residuals, solve_q, solve_z, DualState, InitialQ, Residuals,
};
pub use solver::{
    ld_ssc1, ld_ssc2, Algorithm, SolverConfig, SolverOutput, SolverReport, TraceRecord,
};

//! Outer proximal-gradient loops for min ½‖Ax − y‖² + reg_weight·ω(Bx).
//!
//! Each outer step evaluates prox_{(reg·ω/L)∘B}(α − ∇f(α)/L) as the
//! minimizer of ½L‖u‖² − (Lα − ∇f(α))ᵀu + reg·ω(Bu) through the fixed-point
//! map, warm-starting the inner variable from the previous step.

mod algorithms;
mod config;
mod problem;
mod trace;

pub use algorithms::{solve, solve_accelerated, solve_proximal, theta_rho_sequence};
pub use config::{LamRule, SolverConfig};
pub use problem::{grad_square_loss, CompositeProblem, SquareLoss};
pub use trace::{SolverTrace, StopReason, TraceEntry, TRACE_HEADER};

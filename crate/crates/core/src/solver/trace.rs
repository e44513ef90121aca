use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::io::format_scalar;

pub const TRACE_HEADER: &str = "iter,objective,inner_iters,step_norm,time_ms";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    /// F(x_t) = ½‖Ax_t − y‖² + reg_weight · ω(Bx_t)
    pub objective: f64,
    pub inner_iters: usize,
    /// ‖x_t − x_{t−1}‖₂
    pub step_norm: f64,
    pub time_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    TargetReached,
    OuterCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub entries: Vec<TraceEntry>,
    pub lipschitz: f64,
    /// λ as used in A_t = (I − (λ/L) BBᵀ) z − (1/L) B(∇f(α) − Lα).
    pub lam: f64,
    /// Extreme eigenvalues of BBᵀ, when computed.
    pub gram_max: Option<f64>,
    pub gram_min: Option<f64>,
    pub initial_objective: f64,
    pub best_objective: f64,
    /// 0 means the starting point x = 0 was never improved on.
    pub best_iter: usize,
    /// Outer steps whose inner loop ended on its cap.
    pub inner_cap_hits: usize,
    pub stop: StopReason,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.entries.len()
    }

    pub fn converged(&self) -> bool {
        self.stop != StopReason::OuterCap
    }

    pub fn total_inner_iters(&self) -> usize {
        self.entries.iter().map(|e| e.inner_iters).sum()
    }

    pub fn mean_inner_iters(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.total_inner_iters() as f64 / self.entries.len() as f64
        }
    }

    pub fn total_time_ms(&self) -> f64 {
        self.entries.iter().map(|e| e.time_ms).sum()
    }

    /// First outer iteration whose objective is ≤ `target`.
    pub fn iterations_to_reach(&self, target: f64) -> Option<usize> {
        if self.initial_objective <= target {
            return Some(0);
        }
        self.entries.iter().find(|e| e.objective <= target).map(|e| e.iter)
    }

    /// CSV with [`TRACE_HEADER`]. With `with_time` false the time column is
    /// written as 0 so that reruns are byte-identical.
    pub fn to_csv(&self, with_time: bool) -> String {
        let mut s = String::with_capacity(32 * (self.entries.len() + 1));
        s.push_str(TRACE_HEADER);
        s.push('\n');
        for e in &self.entries {
            let time = if with_time {
                format!("{:.3}", e.time_ms)
            } else {
                "0".into()
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                e.iter,
                format_scalar(e.objective),
                e.inner_iters,
                format_scalar(e.step_norm),
                time
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, with_time: bool) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv(with_time)).map_err(|e| Error::io(path, e))
    }
}

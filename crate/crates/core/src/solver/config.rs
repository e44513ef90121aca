use crate::error::{Error, Result};
use crate::fixed_point::PicardOpial;

/// How λ in the inner map is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LamRule {
    /// 2L/(μ_max + μ_min) with μ the extreme eigenvalues of BBᵀ.
    Auto,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kappa: f64,
    pub lam: LamRule,
    pub inner_tol: f64,
    pub inner_cap: usize,
    /// Outer tolerance on objective change (plain) or windowed best-objective
    /// improvement (accelerated).
    pub epsilon: f64,
    pub outer_cap: usize,
    pub window: usize,
    pub warm_start: bool,
    pub accelerated: bool,
    /// Stop as soon as the objective is ≤ this value.
    pub target_objective: Option<f64>,
    /// When B is the identity, call the penalty's prox directly instead of
    /// the fixed-point loop.
    pub exact_prox: bool,
    /// Seed of the power iteration estimating the spectrum of BBᵀ.
    pub spectral_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: 0.2,
            lam: LamRule::Auto,
            inner_tol: 1e-10,
            inner_cap: 1000,
            epsilon: 1e-8,
            outer_cap: 100_000,
            window: 10,
            warm_start: true,
            accelerated: true,
            target_objective: None,
            exact_prox: false,
            spectral_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn unaccelerated() -> Self {
        Self {
            accelerated: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::param("kappa", format!("must lie in (0, 1), got {}", self.kappa)));
        }
        for (name, v) in [("inner_tol", self.inner_tol), ("epsilon", self.epsilon)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if let LamRule::Explicit(l) = self.lam {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::param("lam", format!("must be positive, got {l}")));
            }
        }
        for (name, v) in [
            ("inner_cap", self.inner_cap),
            ("outer_cap", self.outer_cap),
            ("window", self.window),
        ] {
            if v == 0 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn picard(&self) -> PicardOpial {
        PicardOpial {
            kappa: self.kappa,
            tol: self.inner_tol,
            max_iter: self.inner_cap,
        }
    }
}

use super::picard::{FixedPointState, PicardOpial};
use super::spd::SpdOperator;
use crate::error::{check_len, Error, Result};
use crate::linalg::{power_iteration_extremes, LinearOperator, ScaledIdentity, SpectralInterval};
use crate::prox::ProxPenalty;

/// Relative slack on the admissibility bound, absorbing the error of the
/// power-iteration estimate of λ_max.
const ADMISSIBLE_RTOL: f64 = 1e-8;

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 20_000;

/// B Q⁻¹ Bᵀ applied implicitly.
#[derive(Debug)]
pub struct WeightedGram<'a> {
    b: &'a dyn LinearOperator,
    q: &'a dyn SpdOperator,
}

impl<'a> WeightedGram<'a> {
    pub fn new(b: &'a dyn LinearOperator, q: &'a dyn SpdOperator) -> Self {
        Self { b, q }
    }
}

impl LinearOperator for WeightedGram<'_> {
    fn rows(&self) -> usize {
        self.b.rows()
    }
    fn cols(&self) -> usize {
        self.b.rows()
    }
    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        let mut t = vec![0.0; self.b.cols()];
        self.b.apply_transpose_into(z, &mut t);
        let s = self.q.solve(&t);
        self.b.apply_into(&s, out);
    }
    fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        self.apply_into(z, out)
    }
}

/// Extreme eigenvalues of B Q⁻¹ Bᵀ.
pub fn gram_spectrum(b: &dyn LinearOperator, q: &dyn SpdOperator, seed: u64) -> Result<SpectralInterval> {
    check_len("Q dimension", b.cols(), q.dim())?;
    power_iteration_extremes(&WeightedGram::new(b, q), SPECTRAL_TOL, SPECTRAL_MAX_ITER, seed)
}

/// 2/(μ_max + μ_min): the step minimizing max_j |1 − λμ_j|. Equals the
/// nonexpansive boundary 2/μ_max when the gram operator is singular.
pub fn default_step(spectrum: &SpectralInterval) -> f64 {
    let s = spectrum.lambda_max + spectrum.lambda_min;
    if s > 0.0 {
        2.0 / s
    } else {
        1.0
    }
}

/// Largest step keeping I − λ B Q⁻¹ Bᵀ nonexpansive.
pub fn admissible_upper(lambda_max: f64) -> f64 {
    if lambda_max > 0.0 {
        2.0 / lambda_max
    } else {
        f64::INFINITY
    }
}

pub fn check_step(lam: f64, lambda_max: f64) -> Result<()> {
    let upper = admissible_upper(lambda_max);
    if lam > 0.0 && lam.is_finite() && lam <= upper * (1.0 + ADMISSIBLE_RTOL) {
        Ok(())
    } else {
        Err(Error::InadmissibleStep { lam, upper, lambda_max })
    }
}

/// The map H = (I − prox_{ω/λ}) ∘ A on R^m with
/// A z = (I − λ B Q⁻¹ Bᵀ) z + B Q⁻¹ x.
///
/// Fixed points v of H give the minimizer of ½ yᵀQy − xᵀy + ω(By) as
/// Q⁻¹(x − λ Bᵀ v).
#[derive(Debug)]
pub struct FixedPointMap<'a> {
    penalty: &'a ProxPenalty,
    b: &'a dyn LinearOperator,
    q: &'a dyn SpdOperator,
    /// Q⁻¹ x
    qinv_x: Vec<f64>,
    /// B Q⁻¹ x
    offset: Vec<f64>,
    lam: f64,
    lambda_max: f64,
}

impl<'a> FixedPointMap<'a> {
    /// Builds H, estimating λ_max(B Q⁻¹ Bᵀ) to check the step.
    pub fn new(
        penalty: &'a ProxPenalty,
        b: &'a dyn LinearOperator,
        q: &'a dyn SpdOperator,
        x: &[f64],
        lam: f64,
    ) -> Result<Self> {
        let spectrum = gram_spectrum(b, q, 0)?;
        Self::with_lambda_max(penalty, b, q, x, lam, spectrum.lambda_max)
    }

    /// Builds H from a known λ_max(B Q⁻¹ Bᵀ).
    pub fn with_lambda_max(
        penalty: &'a ProxPenalty,
        b: &'a dyn LinearOperator,
        q: &'a dyn SpdOperator,
        x: &[f64],
        lam: f64,
        lambda_max: f64,
    ) -> Result<Self> {
        check_len("Q dimension", b.cols(), q.dim())?;
        check_len("prox input", b.cols(), x.len())?;
        if let Some(n) = penalty.required_len() {
            check_len("penalty dimension vs rows of B", n, b.rows())?;
        }
        check_step(lam, lambda_max)?;
        let qinv_x = q.solve(x);
        let mut offset = vec![0.0; b.rows()];
        b.apply_into(&qinv_x, &mut offset);
        Ok(Self {
            penalty,
            b,
            q,
            qinv_x,
            offset,
            lam,
            lambda_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.rows()
    }

    pub fn step(&self) -> f64 {
        self.lam
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// out ← A z
    pub fn affine_into(&self, z: &[f64], out: &mut [f64]) {
        let mut t = vec![0.0; self.b.cols()];
        self.b.apply_transpose_into(z, &mut t);
        let s = self.q.solve(&t);
        self.b.apply_into(&s, out);
        for ((o, zi), ci) in out.iter_mut().zip(z).zip(&self.offset) {
            *o = zi - self.lam * *o + ci;
        }
    }

    /// out ← H v = A v − prox_{ω/λ}(A v)
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.affine_into(v, out);
        let p = self.penalty.prox(out, 1.0 / self.lam)?;
        for (o, pi) in out.iter_mut().zip(p.iter()) {
            *o -= pi;
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("fixed-point variable", self.dim(), v.len())?;
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// Q⁻¹(x − λ Bᵀ v)
    pub fn recover(&self, v: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.b.cols()];
        self.b.apply_transpose_into(v, &mut t);
        let s = self.q.solve(&t);
        self.qinv_x.iter().zip(&s).map(|(a, b)| a - self.lam * b).collect()
    }

    /// Runs averaged Picard iteration from `v0` (zeros when `None`).
    pub fn solve(&self, solver: &PicardOpial, v0: Option<&[f64]>) -> Result<FixedPointState> {
        let start = match v0 {
            Some(v) => {
                check_len("warm start", self.dim(), v.len())?;
                v.to_vec()
            }
            None => vec![0.0; self.dim()],
        };
        solver.run(|v, out| self.apply_into(v, out), start)
    }
}

/// prox_{ω∘B}(x) = x − λ Bᵀ v for a fixed point v of H with Q = I.
///
/// The returned state can be passed back as `warm_start` for a nearby x.
pub fn prox_composite(
    penalty: &ProxPenalty,
    b: &dyn LinearOperator,
    x: &[f64],
    lam: f64,
    solver: &PicardOpial,
    warm_start: Option<&FixedPointState>,
) -> Result<(Vec<f64>, FixedPointState)> {
    let q = ScaledIdentity::identity(b.cols());
    let map = FixedPointMap::new(penalty, b, &q, x, lam)?;
    let state = map.solve(solver, warm_start.map(|s| s.v.as_slice()))?;
    Ok((map.recover(&state.v), state))
}

/// argmin_y ½ yᵀQy − xᵀy + ω(By) via the fixed point of H.
pub fn quad_min_composite(
    penalty: &ProxPenalty,
    b: &dyn LinearOperator,
    q: &dyn SpdOperator,
    x: &[f64],
    lam: f64,
    solver: &PicardOpial,
) -> Result<(Vec<f64>, FixedPointState)> {
    let map = FixedPointMap::new(penalty, b, q, x, lam)?;
    let state = map.solve(solver, None)?;
    Ok((map.recover(&state.v), state))
}

use super::ProxPenalty;
use crate::error::{Error, Result};
use crate::linalg::{svd_small, DenseMatrix};

/// prox of h∘σ: U diag(prox_h(σ(X))) Vᵀ.
///
/// `inner` must be a symmetric gauge (ℓ1, ℓ2, ℓp norm or ℓ∞). Its prox keeps
/// the ordering of σ, so the output's singular values stay non-increasing.
pub fn prox_oi_norm(x: &DenseMatrix, inner: &ProxPenalty) -> Result<DenseMatrix> {
    use super::PenaltyKind::*;
    if !matches!(inner.kind(), L1 | L2 | LpNorm { .. } | LInf) {
        return Err(Error::UnsupportedPenalty(format!(
            "{} is not a symmetric gauge",
            inner.kind().name()
        )));
    }
    let svd = svd_small(x)?;
    let shrunk = inner.prox(&svd.sigma, 1.0)?;
    Ok(svd.reconstruct_with(&shrunk))
}

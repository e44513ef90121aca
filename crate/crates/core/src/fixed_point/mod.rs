//! Proximity operators of composite penalties ω∘B, and minimizers of
//! ½ yᵀQy − xᵀy + ω(By), computed as fixed points of a nonexpansive map.
//!
//! Given the prox of ω alone, [`FixedPointMap`] builds
//! H = (I − prox_{ω/λ}) ∘ A with A z = (I − λ B Q⁻¹ Bᵀ) z + B Q⁻¹ x. H is
//! nonexpansive for 0 < λ ≤ 2/λ_max(B Q⁻¹ Bᵀ), so averaged Picard iteration
//! ([`PicardOpial`]) finds a fixed point v, and Q⁻¹(x − λ Bᵀ v) is the
//! minimizer. With Q = I this is prox_{ω∘B}(x).

mod certificate;
mod map;
mod picard;
mod spd;

pub use certificate::optimality_residual;
pub use map::{
    admissible_upper, check_step, default_step, gram_spectrum, prox_composite, quad_min_composite, FixedPointMap,
    WeightedGram, SPECTRAL_MAX_ITER, SPECTRAL_TOL,
};
pub use picard::{FixedPointState, PicardOpial};
pub use spd::{DenseSpd, DiagonalSpd, SpdOperator};

//! Vectors, matrices, the linear-operator abstraction, and spectral estimates.

mod dense;
pub mod io;
mod operator;
mod sparse;
mod spectral;
mod vector;

pub use dense::DenseMatrix;
pub use operator::{InnerGram, LinearOperator, OuterGram, ScaledIdentity, SharedOperator, ZeroOperator};
pub use sparse::SparseMatrix;
pub use spectral::{
    lipschitz_square_loss, power_iteration_extremes, svd_small, LipschitzEstimate, SpectralInterval, Svd,
    SVD_MAX_ENTRIES,
};
pub use vector::{add, axpy, dist2, dot, norm1, norm2, norm_inf, scale, sign, sub, DenseVector};

use std::fmt::Debug;
use std::sync::Arc;

use super::dense::DenseMatrix;
use super::sparse::SparseMatrix;
use super::vector::DenseVector;
use crate::error::{check_len, Result};

/// A real matrix known through its forward and transpose actions.
///
/// Implementations must satisfy ⟨Bx, z⟩ = ⟨x, Bᵀz⟩. The `*_into` methods
/// overwrite `out` and may assume the lengths conform; the checked
/// [`apply`](LinearOperator::apply) wrappers validate dimensions first.
pub trait LinearOperator: Debug + Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]);

    /// Explicit storage, when the operator has one.
    fn as_sparse(&self) -> Option<&SparseMatrix> {
        None
    }

    /// True only when the operator is known to be exactly I.
    fn is_identity(&self) -> bool {
        false
    }

    fn apply(&self, x: &[f64]) -> Result<DenseVector> {
        check_len("operator apply", self.cols(), x.len())?;
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        Ok(out.into())
    }

    fn apply_transpose(&self, z: &[f64]) -> Result<DenseVector> {
        check_len("operator transpose apply", self.rows(), z.len())?;
        let mut out = vec![0.0; self.cols()];
        self.apply_transpose_into(z, &mut out);
        Ok(out.into())
    }

    /// Materializes the operator column by column.
    fn to_dense(&self) -> DenseMatrix {
        let (rows, cols) = (self.rows(), self.cols());
        let mut m = DenseMatrix::zeros(rows, cols);
        let mut e = vec![0.0; cols];
        let mut col = vec![0.0; rows];
        for j in 0..cols {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
            e[j] = 0.0;
        }
        m
    }

    /// Squared Frobenius norm, by column probing unless storage is explicit.
    fn frobenius_sq(&self) -> f64 {
        if let Some(s) = self.as_sparse() {
            return s.values().iter().map(|v| v * v).sum();
        }
        let mut e = vec![0.0; self.cols()];
        let mut col = vec![0.0; self.rows()];
        let mut acc = 0.0;
        for j in 0..self.cols() {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            acc += col.iter().map(|v| v * v).sum::<f64>();
            e[j] = 0.0;
        }
        acc
    }
}

pub type SharedOperator = Arc<dyn LinearOperator>;

impl<T: LinearOperator + ?Sized> LinearOperator for Arc<T> {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        (**self).apply_transpose_into(z, out)
    }
    fn as_sparse(&self) -> Option<&SparseMatrix> {
        (**self).as_sparse()
    }
    fn is_identity(&self) -> bool {
        (**self).is_identity()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        (**self).apply_transpose_into(z, out)
    }
    fn as_sparse(&self) -> Option<&SparseMatrix> {
        (**self).as_sparse()
    }
    fn is_identity(&self) -> bool {
        (**self).is_identity()
    }
}

/// `scale · I` on R^n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledIdentity {
    pub dim: usize,
    pub scale: f64,
}

impl ScaledIdentity {
    pub fn identity(dim: usize) -> Self {
        Self { dim, scale: 1.0 }
    }
}

impl LinearOperator for ScaledIdentity {
    fn rows(&self) -> usize {
        self.dim
    }
    fn cols(&self) -> usize {
        self.dim
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.scale * v;
        }
    }
    fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        self.apply_into(z, out)
    }
    fn is_identity(&self) -> bool {
        self.scale == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroOperator {
    pub rows: usize,
    pub cols: usize,
}

impl LinearOperator for ZeroOperator {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn apply_transpose_into(&self, _z: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// M Mᵀ, applied as two products; never materialized.
#[derive(Debug, Clone)]
pub struct OuterGram<Op> {
    inner: Op,
    scratch_len: usize,
}

impl<Op: LinearOperator> OuterGram<Op> {
    pub fn new(inner: Op) -> Self {
        let scratch_len = inner.cols();
        Self { inner, scratch_len }
    }
}

impl<Op: LinearOperator> LinearOperator for OuterGram<Op> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.rows()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut t = vec![0.0; self.scratch_len];
        self.inner.apply_transpose_into(x, &mut t);
        self.inner.apply_into(&t, out);
    }
    fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        self.apply_into(z, out)
    }
}

/// Mᵀ M.
#[derive(Debug, Clone)]
pub struct InnerGram<Op> {
    inner: Op,
}

impl<Op: LinearOperator> InnerGram<Op> {
    pub fn new(inner: Op) -> Self {
        Self { inner }
    }
}

impl<Op: LinearOperator> LinearOperator for InnerGram<Op> {
    fn rows(&self) -> usize {
        self.inner.cols()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut t = vec![0.0; self.inner.rows()];
        self.inner.apply_into(x, &mut t);
        self.inner.apply_transpose_into(&t, out);
    }
    fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        self.apply_into(z, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::fused_difference_operator;
    use crate::error::Error;

    #[test]
    fn identity_and_zero() {
        let id = ScaledIdentity::identity(2);
        assert_eq!(id.apply(&[1.0, 2.0]).unwrap().as_slice(), &[1.0, 2.0]);
        let z = ZeroOperator { rows: 2, cols: 2 };
        assert_eq!(z.apply(&[5.0, 7.0]).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn fused_rows() {
        let b = fused_difference_operator(3).unwrap();
        assert_eq!(b.apply(&[3.0, 1.0, 4.0]).unwrap().as_slice(), &[2.0, -3.0]);
    }

    #[test]
    fn apply_checks_dimensions() {
        let id = ScaledIdentity::identity(3);
        assert!(matches!(
            id.apply(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1,
                ..
            })
        ));
        assert!(id.apply_transpose(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn gram_of_fused_difference() {
        let b = fused_difference_operator(3).unwrap();
        let g = OuterGram::new(&b).to_dense();
        assert_eq!(g.row(0), &[2.0, -1.0]);
        assert_eq!(g.row(1), &[-1.0, 2.0]);
        let n = InnerGram::new(&b).to_dense();
        assert_eq!(n.row(1), &[-1.0, 2.0, -1.0]);
    }
}

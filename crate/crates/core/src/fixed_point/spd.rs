use std::fmt::Debug;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, ScaledIdentity};

/// A symmetric positive-definite Q that can both multiply and solve.
pub trait SpdOperator: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    /// out ← Q⁻¹ b
    fn solve_into(&self, b: &[f64], out: &mut [f64]);

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.solve_into(b, &mut out);
        out
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }
}

impl ScaledIdentity {
    /// `scale·I` as an SPD operator; `scale` must be positive.
    pub fn spd(dim: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::param("scale", format!("must be positive, got {scale}")));
        }
        Ok(Self { dim, scale })
    }
}

impl SpdOperator for ScaledIdentity {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.scale * v;
        }
    }
    fn solve_into(&self, b: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(b) {
            *o = v / self.scale;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSpd {
    diag: Vec<f64>,
}

impl DiagonalSpd {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if let Some(i) = diag.iter().position(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::param(
                "diag",
                format!("entry {i} is {} but must be positive", diag[i]),
            ));
        }
        Ok(Self { diag })
    }
}

impl SpdOperator for DiagonalSpd {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, v), d) in out.iter_mut().zip(x).zip(&self.diag) {
            *o = d * v;
        }
    }
    fn solve_into(&self, b: &[f64], out: &mut [f64]) {
        for ((o, v), d) in out.iter_mut().zip(b).zip(&self.diag) {
            *o = v / d;
        }
    }
}

/// Explicit SPD matrix with a Cholesky factorization.
#[derive(Debug, Clone)]
pub struct DenseSpd {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl DenseSpd {
    pub fn new(q: &DenseMatrix) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: q.ncols(),
            });
        }
        let matrix = DMatrix::from_row_slice(n, n, q.as_slice());
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > 1e-12 * matrix.abs().max().max(1.0) {
            return Err(Error::param("Q", format!("not symmetric (max asymmetry {asym:e})")));
        }
        let chol = Cholesky::new(matrix.clone()).ok_or_else(|| Error::Solve("Q is not positive definite".into()))?;
        Ok(Self { matrix, chol })
    }
}

impl SpdOperator for DenseSpd {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let y = &self.matrix * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }
    fn solve_into(&self, b: &[f64], out: &mut [f64]) {
        let y = self.chol.solve(&DVector::from_column_slice(b));
        out.copy_from_slice(y.as_slice());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_inverts_apply() {
        let q = DenseMatrix::from_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 0.5], &[0.0, 0.5, 2.0]]).unwrap();
        let spd = DenseSpd::new(&q).unwrap();
        let x = [1.0, -2.0, 0.5];
        let back = spd.solve(&spd.apply(&x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        let qx = spd.apply(&x);
        assert!(qx.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() > 0.0);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let indef = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!(matches!(DenseSpd::new(&indef), Err(Error::Solve(_))));
        let asym = DenseMatrix::from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]).unwrap();
        assert!(DenseSpd::new(&asym).is_err());
        assert!(DiagonalSpd::new(vec![1.0, 0.0]).is_err());
        assert!(ScaledIdentity::spd(2, -1.0).is_err());
    }

    #[test]
    fn diagonal_and_scaled() {
        let d = DiagonalSpd::new(vec![2.0, 4.0]).unwrap();
        assert_eq!(d.solve(&[2.0, 4.0]), vec![1.0, 1.0]);
        let s = ScaledIdentity::spd(2, 0.5).unwrap();
        assert_eq!(SpdOperator::apply(&s, &[2.0, 4.0]), vec![1.0, 2.0]);
    }
}

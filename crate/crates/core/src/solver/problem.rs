use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linalg::{lipschitz_square_loss, DenseVector, LinearOperator, SharedOperator};
use crate::prox::ProxPenalty;

/// f(x) = ½‖Ax − y‖² with ∇f = Aᵀ(Ax − y), Lipschitz with constant L.
#[derive(Debug, Clone)]
pub struct SquareLoss {
    a: SharedOperator,
    y: DenseVector,
    lipschitz: f64,
}

impl SquareLoss {
    /// Computes L = σ_max(A)² (or the Frobenius bound for very large A).
    pub fn new(a: SharedOperator, y: DenseVector) -> Result<Self> {
        let l = lipschitz_square_loss(a.as_ref())?.value;
        Self::with_lipschitz(a, y, l)
    }

    /// Uses a caller-supplied L, which must not underestimate σ_max(A)².
    pub fn with_lipschitz(a: SharedOperator, y: DenseVector, lipschitz: f64) -> Result<Self> {
        check_len("targets y vs rows of A", a.rows(), y.len())?;
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::param(
                "lipschitz",
                format!("must be positive and finite, got {lipschitz}"),
            ));
        }
        Ok(Self { a, y, lipschitz })
    }

    pub fn operator(&self) -> &SharedOperator {
        &self.a
    }

    pub fn targets(&self) -> &DenseVector {
        &self.y
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.a.rows()];
        self.a.apply_into(x, &mut r);
        for (ri, yi) in r.iter_mut().zip(self.y.iter()) {
            *ri -= yi;
        }
        r
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.residual(x).iter().map(|v| v * v).sum::<f64>()
    }

    pub(crate) fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let r = self.residual(x);
        self.a.apply_transpose_into(&r, out);
    }
}

/// Aᵀ(Ax − y)
pub fn grad_square_loss(loss: &SquareLoss, x: &[f64]) -> Result<DenseVector> {
    check_len("gradient input", loss.dim(), x.len())?;
    let mut g = vec![0.0; loss.dim()];
    loss.grad_into(x, &mut g);
    Ok(g.into())
}

/// min_x ½‖Ax − y‖² + reg_weight · ω(Bx)
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub loss: SquareLoss,
    pub penalty: ProxPenalty,
    pub b: SharedOperator,
    pub reg_weight: f64,
}

impl CompositeProblem {
    pub fn new(loss: SquareLoss, penalty: ProxPenalty, b: SharedOperator, reg_weight: f64) -> Result<Self> {
        check_len("columns of B vs columns of A", loss.dim(), b.cols())?;
        if let Some(n) = penalty.required_len() {
            check_len("penalty dimension vs rows of B", n, b.rows())?;
        }
        if !(reg_weight >= 0.0) || !reg_weight.is_finite() {
            return Err(Error::param(
                "reg_weight",
                format!("must be non-negative and finite, got {reg_weight}"),
            ));
        }
        Ok(Self {
            loss,
            penalty,
            b,
            reg_weight,
        })
    }

    /// Convenience constructor from concrete operators.
    pub fn from_parts(
        a: impl LinearOperator + 'static,
        y: Vec<f64>,
        penalty: ProxPenalty,
        b: impl LinearOperator + 'static,
        reg_weight: f64,
    ) -> Result<Self> {
        let loss = SquareLoss::new(Arc::new(a), DenseVector::new(y)?)?;
        Self::new(loss, penalty, Arc::new(b), reg_weight)
    }

    pub fn dim(&self) -> usize {
        self.loss.dim()
    }

    /// reg_weight · ω as a single penalty.
    pub fn effective_penalty(&self) -> Result<ProxPenalty> {
        self.penalty.scaled(self.reg_weight)
    }

    pub fn regularizer(&self, x: &[f64]) -> f64 {
        if self.reg_weight == 0.0 {
            return 0.0;
        }
        let mut z = vec![0.0; self.b.rows()];
        self.b.apply_into(x, &mut z);
        self.reg_weight * self.penalty.value(&z)
    }

    /// ½‖Ax − y‖² + reg_weight · ω(Bx)
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.loss.value(x) + self.regularizer(x)
    }
}

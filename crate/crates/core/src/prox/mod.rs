//! Proximity operators of simple penalties, each paired with a
//! subgradient-residual check.
//!
//! For a convex ω, `prox_ω(x) = argmin_y ½‖y − x‖² + ω(y)`, and y is the prox
//! of x exactly when x − y ∈ ∂ω(y). [`subgrad_residual`] measures the distance
//! from x − y to ∂ω(y), which gives every operator here a self-certifying
//! correctness check.

mod oi;
mod residual;
mod simple;

use std::fmt;
use std::ops::Range;

pub use oi::prox_oi_norm;
pub use residual::{project_onto_subdifferential, subgrad_residual, SubgradResidual};
pub use simple::{
    project_l1_ball, project_simplex, prox_group_l2, prox_l1, prox_l2, prox_linf, prox_lp_norm, prox_lp_power,
    validate_partition, LP_NORM_MAX_STEPS,
};

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm1, norm2, norm_inf, svd_small, DenseMatrix, DenseVector, SVD_MAX_ENTRIES};

/// The shape of a penalty, without its scale.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyKind {
    /// ‖·‖₁
    L1,
    /// ‖·‖₂
    L2,
    /// ‖·‖_p^p, p > 1
    LpPower { p: f64 },
    /// ‖·‖_p, p ≥ 1
    LpNorm { p: f64 },
    /// ‖·‖_∞
    LInf,
    /// Σ_k ‖x_{G_k}‖₂ over contiguous disjoint blocks G_k.
    GroupL2 { groups: Vec<Range<usize>> },
    /// h(σ(X)) for a symmetric gauge h, acting on row-major `rows × cols`
    /// matrices flattened into vectors.
    OiNorm {
        inner: Box<PenaltyKind>,
        rows: usize,
        cols: usize,
    },
}

impl PenaltyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PenaltyKind::L1 => "l1",
            PenaltyKind::L2 => "l2",
            PenaltyKind::LpPower { .. } => "lp_power",
            PenaltyKind::LpNorm { .. } => "lp_norm",
            PenaltyKind::LInf => "linf",
            PenaltyKind::GroupL2 { .. } => "group_l2",
            PenaltyKind::OiNorm { .. } => "oi_norm",
        }
    }

    /// Absolute and permutation invariant, hence usable inside an OI norm.
    fn is_symmetric_gauge(&self) -> bool {
        matches!(
            self,
            PenaltyKind::L1 | PenaltyKind::L2 | PenaltyKind::LpNorm { .. } | PenaltyKind::LInf
        )
    }
}

/// A scaled penalty `weight · ω_kind`.
///
/// A weight of zero is allowed and denotes the zero function, whose prox is
/// the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxPenalty {
    kind: PenaltyKind,
    weight: f64,
}

impl fmt::Display for ProxPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·{}", self.weight, self.kind.name())
    }
}

impl ProxPenalty {
    pub fn new(kind: PenaltyKind, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::param("weight", format!("must be finite and >= 0, got {weight}")));
        }
        validate_kind(&kind)?;
        Ok(Self { kind, weight })
    }

    pub fn l1(weight: f64) -> Result<Self> {
        Self::new(PenaltyKind::L1, weight)
    }

    pub fn l2(weight: f64) -> Result<Self> {
        Self::new(PenaltyKind::L2, weight)
    }

    pub fn linf(weight: f64) -> Result<Self> {
        Self::new(PenaltyKind::LInf, weight)
    }

    pub fn lp_power(p: f64, weight: f64) -> Result<Self> {
        Self::new(PenaltyKind::LpPower { p }, weight)
    }

    pub fn lp_norm(p: f64, weight: f64) -> Result<Self> {
        Self::new(PenaltyKind::LpNorm { p }, weight)
    }

    pub fn group_l2(groups: Vec<Range<usize>>, weight: f64) -> Result<Self> {
        Self::new(PenaltyKind::GroupL2 { groups }, weight)
    }

    /// Block partition from consecutive block sizes.
    pub fn group_l2_from_sizes(sizes: &[usize], weight: f64) -> Result<Self> {
        let mut start = 0;
        let groups = sizes
            .iter()
            .map(|&s| {
                let r = start..start + s;
                start += s;
                r
            })
            .collect();
        Self::group_l2(groups, weight)
    }

    pub fn oi_norm(inner: PenaltyKind, rows: usize, cols: usize, weight: f64) -> Result<Self> {
        Self::new(
            PenaltyKind::OiNorm {
                inner: Box::new(inner),
                rows,
                cols,
            },
            weight,
        )
    }

    pub fn kind(&self) -> &PenaltyKind {
        &self.kind
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// The same shape with the weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.kind.clone(), self.weight * factor)
    }

    /// Input length the penalty is tied to, if any.
    pub fn required_len(&self) -> Option<usize> {
        match &self.kind {
            PenaltyKind::GroupL2 { groups } => Some(groups.last().map_or(0, |g| g.end)),
            PenaltyKind::OiNorm { rows, cols, .. } => Some(rows * cols),
            _ => None,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        match self.required_len() {
            Some(n) => check_len("penalty input", n, x.len()),
            None => Ok(()),
        }
    }

    /// ω(x), including the weight.
    pub fn value(&self, x: &[f64]) -> f64 {
        if self.weight == 0.0 {
            return 0.0;
        }
        self.weight * unit_value(&self.kind, x)
    }

    /// prox of `scale · ω` at x.
    pub fn prox(&self, x: &[f64], scale: f64) -> Result<DenseVector> {
        self.check_input(x)?;
        let lam = self.weight * scale;
        if !(lam >= 0.0) || !lam.is_finite() {
            return Err(Error::param("scale", format!("effective weight {lam} is invalid")));
        }
        if lam == 0.0 {
            return Ok(x.to_vec().into());
        }
        unit_prox(&self.kind, x, lam)
    }
}

fn validate_kind(kind: &PenaltyKind) -> Result<()> {
    match kind {
        PenaltyKind::LpPower { p } if !(*p > 1.0 && p.is_finite()) => {
            Err(Error::param("p", format!("ℓp power needs finite p > 1, got {p}")))
        }
        PenaltyKind::LpNorm { p } if !(*p >= 1.0 && p.is_finite()) => {
            Err(Error::param("p", format!("ℓp norm needs finite p >= 1, got {p}")))
        }
        PenaltyKind::GroupL2 { groups } => {
            let len = groups.last().map_or(0, |g| g.end);
            validate_partition(groups, len)
        }
        PenaltyKind::OiNorm { inner, rows, cols } => {
            if !inner.is_symmetric_gauge() {
                return Err(Error::UnsupportedPenalty(format!(
                    "{} is not a symmetric gauge and cannot define an OI norm",
                    inner.name()
                )));
            }
            if rows * cols > SVD_MAX_ENTRIES {
                return Err(Error::param("rows*cols", "matrix too large for the OI prox"));
            }
            validate_kind(inner)
        }
        _ => Ok(()),
    }
}

fn unit_value(kind: &PenaltyKind, x: &[f64]) -> f64 {
    match kind {
        PenaltyKind::L1 => norm1(x),
        PenaltyKind::L2 => norm2(x),
        PenaltyKind::LpPower { p } => x.iter().map(|v| v.abs().powf(*p)).sum(),
        PenaltyKind::LpNorm { p } => simple::lp_norm(x, *p),
        PenaltyKind::LInf => norm_inf(x),
        PenaltyKind::GroupL2 { groups } => groups.iter().map(|g| norm2(&x[g.clone()])).sum(),
        PenaltyKind::OiNorm { inner, rows, cols } => {
            let m = DenseMatrix::from_row_major(*rows, *cols, x.to_vec()).expect("length checked by caller");
            let svd = svd_small(&m).expect("finite input within size limit");
            unit_value(inner, &svd.sigma)
        }
    }
}

fn unit_prox(kind: &PenaltyKind, x: &[f64], lam: f64) -> Result<DenseVector> {
    match kind {
        PenaltyKind::L1 => Ok(prox_l1(x, lam)),
        PenaltyKind::L2 => Ok(prox_l2(x, lam)),
        PenaltyKind::LpPower { p } => prox_lp_power(x, lam, *p),
        PenaltyKind::LpNorm { p } => prox_lp_norm(x, lam, *p),
        PenaltyKind::LInf => Ok(prox_linf(x, lam)),
        PenaltyKind::GroupL2 { groups } => prox_group_l2(x, lam, groups),
        PenaltyKind::OiNorm { inner, rows, cols } => {
            let m = DenseMatrix::from_row_major(*rows, *cols, x.to_vec())?;
            let inner = ProxPenalty::new((**inner).clone(), lam)?;
            Ok(prox_oi_norm(&m, &inner)?.into_vec().into())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validation() {
        assert!(ProxPenalty::l1(-1.0).is_err());
        assert!(ProxPenalty::l1(f64::NAN).is_err());
        assert!(ProxPenalty::lp_power(1.0, 1.0).is_err());
        assert!(ProxPenalty::lp_norm(0.5, 1.0).is_err());
        assert!(ProxPenalty::group_l2(vec![0..2, 1..3], 1.0).is_err());
        assert!(matches!(
            ProxPenalty::oi_norm(PenaltyKind::LpPower { p: 2.0 }, 2, 2, 1.0),
            Err(Error::UnsupportedPenalty(_))
        ));
        assert!(ProxPenalty::l1(0.0).is_ok());
    }

    #[test]
    fn zero_weight_is_identity() {
        let x = [1.5, -2.0];
        for pen in [
            ProxPenalty::l1(0.0).unwrap(),
            ProxPenalty::linf(0.0).unwrap(),
            ProxPenalty::lp_norm(3.0, 0.0).unwrap(),
        ] {
            assert_eq!(pen.prox(&x, 1.0).unwrap().as_slice(), &x);
            assert_eq!(pen.value(&x), 0.0);
        }
    }

    #[test]
    fn values() {
        let x = [3.0, -4.0];
        assert_eq!(ProxPenalty::l1(2.0).unwrap().value(&x), 14.0);
        assert_eq!(ProxPenalty::l2(1.0).unwrap().value(&x), 5.0);
        assert_eq!(ProxPenalty::linf(1.0).unwrap().value(&x), 4.0);
        assert_eq!(ProxPenalty::lp_power(2.0, 0.5).unwrap().value(&x), 12.5);
        let g = ProxPenalty::group_l2_from_sizes(&[1, 1], 1.0).unwrap();
        assert_eq!(g.value(&x), 7.0);
        let nuc = ProxPenalty::oi_norm(PenaltyKind::L1, 2, 2, 1.0).unwrap();
        assert!((nuc.value(&[3.0, 0.0, 0.0, -2.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn prox_scale_multiplies_weight() {
        let pen = ProxPenalty::l1(0.5).unwrap();
        assert_eq!(pen.prox(&[3.0], 2.0).unwrap().as_slice(), &[2.0]);
        assert!(pen.prox(&[3.0], -1.0).is_err());
    }

    #[test]
    fn tied_inputs_checked() {
        let g = ProxPenalty::group_l2_from_sizes(&[2, 1], 1.0).unwrap();
        assert!(matches!(g.prox(&[1.0, 2.0], 1.0), Err(Error::DimensionMismatch { .. })));
    }
}

//! Eigenvalue extremes of symmetric PSD operators, small dense SVD, and the
//! Lipschitz constant of the square loss.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::DenseMatrix;
use super::operator::LinearOperator;
use super::vector::{dot, norm2};
use crate::error::{Error, Result};

/// Largest and smallest eigenvalue estimates of a symmetric PSD operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInterval {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// False when either power iteration hit its iteration cap. The
    /// estimates are still the best Rayleigh quotients seen.
    pub converged: bool,
}

struct PowerResult {
    value: f64,
    converged: bool,
}

/// Power iteration on `v ↦ shift·v − sign·G v`, stopping on the eigen-residual
/// ‖w − θv‖ ≤ tol·|θ|.
fn dominant(
    gram: &dyn LinearOperator,
    shift: Option<f64>,
    tol: f64,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> PowerResult {
    let n = gram.rows();
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut theta = 0.0;

    for _ in 0..max_iter {
        gram.apply_into(&v, &mut w);
        if let Some(s) = shift {
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi = s * vi - *wi;
            }
        }
        theta = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return PowerResult {
                value: 0.0,
                converged: true,
            };
        }
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - theta * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * theta.abs().max(f64::MIN_POSITIVE) {
            return PowerResult {
                value: theta,
                converged: true,
            };
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
    }
    PowerResult {
        value: theta,
        converged: false,
    }
}

/// Estimates the extreme eigenvalues of `gram`, which the caller guarantees
/// is symmetric PSD (typically formed as M Mᵀ).
///
/// The largest eigenvalue comes from plain power iteration; the smallest from
/// power iteration on `lambda_max·I − gram`. Rank-deficient operators yield
/// `lambda_min = 0`.
pub fn power_iteration_extremes(
    gram: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectralInterval> {
    if gram.rows() != gram.cols() {
        return Err(Error::NotSquare {
            rows: gram.rows(),
            cols: gram.cols(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if gram.rows() == 0 {
        return Ok(SpectralInterval {
            lambda_max: 0.0,
            lambda_min: 0.0,
            converged: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = dominant(gram, None, tol, max_iter, &mut rng);
    let lambda_max = top.value.max(0.0);
    if lambda_max == 0.0 {
        return Ok(SpectralInterval {
            lambda_max: 0.0,
            lambda_min: 0.0,
            converged: top.converged,
        });
    }
    let shifted = dominant(gram, Some(lambda_max), tol, max_iter, &mut rng);
    let lambda_min = (lambda_max - shifted.value).clamp(0.0, lambda_max);
    if !(top.converged && shifted.converged) {
        log::warn!("power iteration hit the cap of {max_iter} iterations");
    }
    Ok(SpectralInterval {
        lambda_max,
        lambda_min,
        converged: top.converged && shifted.converged,
    })
}

/// Thin singular value decomposition X = U diag(σ) Vᵀ with σ non-increasing.
#[derive(Debug, Clone)]
pub struct Svd {
    /// d × r, r = min(d, n)
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    /// n × r
    pub v: DenseMatrix,
}

impl Svd {
    /// U diag(s) Vᵀ for a replacement spectrum `s`.
    pub fn reconstruct_with(&self, s: &[f64]) -> DenseMatrix {
        let (d, n, r) = (self.u.nrows(), self.v.nrows(), self.sigma.len());
        let mut out = DenseMatrix::zeros(d, n);
        for (k, &sk) in s.iter().enumerate().take(r) {
            if sk == 0.0 {
                continue;
            }
            for i in 0..d {
                let a = self.u[(i, k)] * sk;
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * self.v[(j, k)];
                }
            }
        }
        out
    }
}

pub const SVD_MAX_ENTRIES: usize = 1_000_000;

pub fn svd_small(x: &DenseMatrix) -> Result<Svd> {
    let (d, n) = (x.nrows(), x.ncols());
    if d * n > SVD_MAX_ENTRIES {
        return Err(Error::param(
            "matrix",
            format!("{d}x{n} exceeds the small-SVD limit of {SVD_MAX_ENTRIES} entries"),
        ));
    }
    if let Some(index) = x.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let r = d.min(n);
    if r == 0 {
        return Ok(Svd {
            u: DenseMatrix::zeros(d, 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(n, 0),
        });
    }
    let m = DMatrix::from_row_slice(d, n, x.as_slice());
    let svd = m.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Solve("SVD did not produce U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Solve("SVD did not produce Vᵀ".into()))?;

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut uo = DenseMatrix::zeros(d, r);
    let mut vo = DenseMatrix::zeros(n, r);
    let mut sigma = Vec::with_capacity(r);
    for (k, &src) in order.iter().enumerate() {
        sigma.push(svd.singular_values[src].max(0.0));
        for i in 0..d {
            uo[(i, k)] = u[(i, src)];
        }
        for j in 0..n {
            vo[(j, k)] = vt[(src, j)];
        }
    }
    Ok(Svd { u: uo, sigma, v: vo })
}

/// Lipschitz constant of ∇f for f(x) = ½‖Ax − y‖².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub value: f64,
    /// True for σ_max(A)² from an SVD, false for the Frobenius upper bound.
    pub exact: bool,
}

pub fn lipschitz_square_loss(a: &dyn LinearOperator) -> Result<LipschitzEstimate> {
    let (rows, cols) = (a.rows(), a.cols());
    if rows * cols <= SVD_MAX_ENTRIES {
        let svd = svd_small(&a.to_dense())?;
        let smax = svd.sigma.first().copied().unwrap_or(0.0);
        Ok(LipschitzEstimate {
            value: smax * smax,
            exact: true,
        })
    } else {
        log::info!("operator too large for SVD ({rows}x{cols}); using Frobenius bound");
        Ok(LipschitzEstimate {
            value: a.frobenius_sq(),
            exact: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::fused_difference_operator;
    use crate::linalg::operator::{OuterGram, ScaledIdentity};
    use crate::linalg::SparseMatrix;

    #[test]
    fn identity_spectrum() {
        let s = power_iteration_extremes(&ScaledIdentity::identity(3), 1e-12, 1000, 1).unwrap();
        assert!((s.lambda_max - 1.0).abs() < 1e-12);
        assert!((s.lambda_min - 1.0).abs() < 1e-12);
        assert!(s.converged);
    }

    #[test]
    fn diagonal_spectrum() {
        let g = DenseMatrix::diag(&[4.0, 1.0]);
        let s = power_iteration_extremes(&g, 1e-12, 10_000, 7).unwrap();
        assert!((s.lambda_max - 4.0).abs() < 1e-10);
        assert!((s.lambda_min - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fused_gram_spectrum() {
        // eigenvalues of [[2,-1],[-1,2]]: roots of t² − 4t + 3
        let (a, b, c) = (1.0f64, -4.0f64, 3.0f64);
        let disc = (b * b - 4.0 * a * c).sqrt();
        let (hi, lo) = ((-b + disc) / 2.0, (-b - disc) / 2.0);
        assert_eq!((hi, lo), (3.0, 1.0));

        let b = fused_difference_operator(3).unwrap();
        let s = power_iteration_extremes(&OuterGram::new(&b), 1e-12, 10_000, 3).unwrap();
        assert!((s.lambda_max - hi).abs() < 1e-10);
        assert!((s.lambda_min - lo).abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_gives_zero_min() {
        // B = [1; 1] duplicates a scalar; BBᵀ = [[1,1],[1,1]] has spectrum {2, 0}
        let b = SparseMatrix::from_triplets(2, 1, [(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        let s = power_iteration_extremes(&OuterGram::new(&b), 1e-12, 10_000, 0).unwrap();
        assert!((s.lambda_max - 2.0).abs() < 1e-10);
        assert!(s.lambda_min.abs() < 1e-10);
    }

    #[test]
    fn non_square_rejected() {
        let b = fused_difference_operator(3).unwrap();
        assert!(matches!(
            power_iteration_extremes(&b, 1e-8, 10, 0),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn cap_sets_flag() {
        let g = DenseMatrix::diag(&[1.0, 0.999_999, 0.5]);
        let s = power_iteration_extremes(&g, 1e-15, 3, 0).unwrap();
        assert!(!s.converged);
        assert!(s.lambda_max <= 1.0 + 1e-12);
    }

    #[test]
    fn svd_examples() {
        let s = svd_small(&DenseMatrix::diag(&[3.0, 2.0])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 2.0]);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s.u[(i, j)].abs() - e).abs() < 1e-12);
                assert!((s.v[(i, j)].abs() - e).abs() < 1e-12);
            }
        }
        let z = svd_small(&DenseMatrix::zeros(2, 2)).unwrap();
        assert_eq!(z.sigma, vec![0.0, 0.0]);
        let p = svd_small(&DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()).unwrap();
        assert!((p.sigma[0] - 1.0).abs() < 1e-12 && (p.sigma[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut x = DenseMatrix::zeros(2, 2);
        x.as_mut_slice()[3] = f64::NAN;
        assert!(matches!(svd_small(&x), Err(Error::NonFinite { index: 3 })));
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(lipschitz_square_loss(&ScaledIdentity::identity(3)).unwrap().value, 1.0);
        let two = ScaledIdentity { dim: 3, scale: 2.0 };
        assert!((lipschitz_square_loss(&two).unwrap().value - 4.0).abs() < 1e-12);
        // AᵀA = [[1,1],[1,2]]: largest root of t² − 3t + 1
        let expected = (3.0 + 5f64.sqrt()) / 2.0;
        let a = DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let l = lipschitz_square_loss(&a).unwrap();
        assert!(l.exact);
        assert!((l.value - expected).abs() < 1e-12);
        assert!((l.value - 2.618).abs() < 1e-3);
    }
}

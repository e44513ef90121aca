//! Closed-form and line-search proximity operators for separable and
//! block-separable penalties.

use std::cmp::Ordering;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{norm1, norm2, sign, DenseVector};

/// Soft thresholding: (|x| − lam)₊ sign(x).
pub fn prox_l1(x: &[f64], lam: f64) -> DenseVector {
    x.iter()
        .map(|&v| (v.abs() - lam).max(0.0) * sign(v))
        .collect::<Vec<_>>()
        .into()
}

/// Block shrinkage: (‖x‖₂ − lam)₊ x/‖x‖₂, and 0 at x = 0.
pub fn prox_l2(x: &[f64], lam: f64) -> DenseVector {
    let mut out = x.to_vec();
    shrink_block(&mut out, lam);
    out.into()
}

fn shrink_block(block: &mut [f64], lam: f64) {
    let n = norm2(block);
    if n <= lam || n == 0.0 {
        block.fill(0.0);
    } else {
        let f = (n - lam) / n;
        block.iter_mut().for_each(|v| *v *= f);
    }
}

/// Solves lam·p·t^(p−1) + t = a for t ≥ 0 by Newton steps kept inside a
/// shrinking bracket [lo, hi] ∋ root, falling back to bisection.
pub(crate) fn h_inverse(a: f64, lam: f64, p: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let c = lam * p;
    let mut lo = 0.0;
    let mut hi = a.min((a / c).powf(1.0 / (p - 1.0)));
    if !(hi > 0.0) {
        hi = a;
    }
    let mut t = hi;
    for _ in 0..300 {
        let g = c * t.powf(p - 1.0) + t - a;
        if g == 0.0 {
            return t;
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let dg = c * (p - 1.0) * t.powf(p - 2.0) + 1.0;
        let mut next = t - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= f64::EPSILON * t {
            t = next;
            break;
        }
        t = next;
    }
    t
}

/// prox of lam·‖·‖_p^p, computed coordinatewise as h⁻¹(|x|)·sign(x).
pub fn prox_lp_power(x: &[f64], lam: f64, p: f64) -> Result<DenseVector> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::param("p", format!("must be finite and > 1, got {p}")));
    }
    if !(lam >= 0.0) {
        return Err(Error::param("lam", format!("must be nonnegative, got {lam}")));
    }
    if lam == 0.0 {
        return Ok(x.to_vec().into());
    }
    Ok(x.iter()
        .map(|&v| h_inverse(v.abs(), lam, p) * sign(v))
        .collect::<Vec<_>>()
        .into())
}

pub(crate) fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    // scale first so |x|^p neither overflows nor underflows
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

pub const LP_NORM_MAX_STEPS: usize = 200;

/// prox of gamma·‖·‖_p.
///
/// p = 1 and p = 2 use the closed forms. Otherwise the minimizer coincides
/// with the prox of lam·‖·‖_p^p for the lam solving
/// lam·p·‖y(lam)‖_p^(p−1) = gamma, found by geometric bisection.
pub fn prox_lp_norm(x: &[f64], gamma: f64, p: f64) -> Result<DenseVector> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::param("p", format!("must be finite and >= 1, got {p}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", format!("must be nonnegative, got {gamma}")));
    }
    if p == 1.0 {
        return Ok(prox_l1(x, gamma));
    }
    if p == 2.0 {
        return Ok(prox_l2(x, gamma));
    }
    if gamma == 0.0 {
        return Ok(x.to_vec().into());
    }
    let q = p / (p - 1.0);
    if lp_norm(x, q) <= gamma {
        return Ok(DenseVector::zeros(x.len()));
    }

    // phi is increasing from −gamma (lam → 0) to ‖x‖_q − gamma > 0 (lam → ∞)
    let phi = |lam: f64| -> Result<f64> {
        let y = prox_lp_power(x, lam, p)?;
        Ok(lam * p * lp_norm(&y, p).powf(p - 1.0) - gamma)
    };
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut guard = 0;
    while phi(lo)? >= 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 {
            return Err(Error::LineSearch(guard));
        }
    }
    while phi(hi)? <= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::LineSearch(guard));
        }
    }
    let mut converged = false;
    for _ in 0..LP_NORM_MAX_STEPS {
        let mid = (lo * hi).sqrt();
        let f = phi(mid)?;
        if f == 0.0 {
            lo = mid;
            hi = mid;
        } else if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 <= 4.0 * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::LineSearch(LP_NORM_MAX_STEPS));
    }
    prox_lp_power(x, (lo * hi).sqrt(), p)
}

/// Euclidean projection onto {g ≥ 0, Σg = total}.
///
/// Sorting is stable, so ties keep their original index order.
pub fn project_simplex(u: &[f64], total: f64) -> Vec<f64> {
    if u.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = u.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - total) / (j as f64 + 1.0);
        if s - t > 0.0 {
            theta = t;
        }
    }
    u.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Threshold θ with Π(x) = sign(x)·(|x| − θ)₊ for the ℓ1 ball of the given
/// radius; `None` when x already lies in the ball.
pub(crate) fn l1_ball_threshold(x: &[f64], radius: f64) -> Option<f64> {
    if norm1(x) <= radius {
        return None;
    }
    let mut mags: Vec<(usize, f64)> = x.iter().map(|v| v.abs()).enumerate().collect();
    // stable: equal magnitudes keep index order
    mags.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &(_, s)) in mags.iter().enumerate() {
        cum += s;
        let t = (cum - radius) / (j as f64 + 1.0);
        if s - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    Some(theta)
}

/// Euclidean projection onto {‖g‖₁ ≤ radius}.
pub fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    match l1_ball_threshold(x, radius) {
        None => x.to_vec(),
        Some(theta) => x.iter().map(|&v| (v.abs() - theta).max(0.0) * sign(v)).collect(),
    }
}

/// prox of lam·‖·‖_∞ via x − Π_{lam·B₁}(x), evaluated as sign(x)·min(|x|, θ).
pub fn prox_linf(x: &[f64], lam: f64) -> DenseVector {
    match l1_ball_threshold(x, lam) {
        None => DenseVector::zeros(x.len()),
        Some(theta) => x
            .iter()
            .map(|&v| v.abs().min(theta) * sign(v))
            .collect::<Vec<_>>()
            .into(),
    }
}

/// Checks that `groups` are nonempty, contiguous, in order and cover 0..len.
pub fn validate_partition(groups: &[Range<usize>], len: usize) -> Result<()> {
    let mut next = 0;
    for (k, g) in groups.iter().enumerate() {
        if g.start != next {
            return Err(Error::InvalidGroups(format!(
                "block {k} starts at {} but the previous block ended at {next} \
                 (blocks must be disjoint and contiguous)",
                g.start
            )));
        }
        if g.end <= g.start {
            return Err(Error::InvalidGroups(format!("block {k} is empty")));
        }
        next = g.end;
    }
    if next != len {
        return Err(Error::InvalidGroups(format!(
            "blocks cover 0..{next} but the vector has length {len}"
        )));
    }
    Ok(())
}

/// Blockwise [`prox_l2`] over a contiguous partition.
pub fn prox_group_l2(x: &[f64], lam: f64, groups: &[Range<usize>]) -> Result<DenseVector> {
    validate_partition(groups, x.len())?;
    let mut out = x.to_vec();
    for g in groups {
        shrink_block(&mut out[g.clone()], lam);
    }
    Ok(out.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// Golden-section minimizer of a unimodal scalar function after a grid scan.
    fn scalar_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let n = 2000;
        let step = (hi - lo) / n as f64;
        let best = (0..=n)
            .map(|i| lo + i as f64 * step)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        let (mut a, mut b) = (best - step, best + step);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn l1_examples() {
        assert_eq!(prox_l1(&[0.0, 0.0], 1.0).as_slice(), &[0.0, 0.0]);
        let x = [0.7, -2.5, 1e-3];
        assert!(close(&prox_l1(&x, 1e-300), &x, 0.0));
        // per-coordinate oracle: minimize ½(t − x_i)² + |t|
        let x = [3.0, -1.0, 0.5];
        let oracle: Vec<f64> = x
            .iter()
            .map(|&xi| scalar_min(|t| 0.5 * (t - xi) * (t - xi) + t.abs(), -4.0, 4.0))
            .collect();
        assert!(close(&oracle, &[2.0, 0.0, 0.0], 1e-6));
        assert_eq!(prox_l1(&x, 1.0).as_slice(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn l2_examples() {
        assert_eq!(prox_l2(&[0.0, 0.0], 1.0).as_slice(), &[0.0, 0.0]);
        assert_eq!(prox_l2(&[0.3, 0.4], 1.0).as_slice(), &[0.0, 0.0]);
        let y = prox_l2(&[3.0, 4.0], 2.0);
        assert!(close(&y, &[1.8, 2.4], 1e-15));
    }

    #[test]
    fn lp_power_examples() {
        let y = prox_lp_power(&[2.0], 0.5, 2.0).unwrap();
        assert!(close(&y, &[1.0], 1e-14));
        for p in [1.5, 2.0, 4.0] {
            assert_eq!(prox_lp_power(&[0.0, 0.0], 0.3, p).unwrap().as_slice(), &[0.0, 0.0]);
        }
        // oracle: minimize ½(t − 1)² + 0.5 t⁴
        let t = scalar_min(|t| 0.5 * (t - 1.0) * (t - 1.0) + 0.5 * t.powi(4), 0.0, 1.0);
        let y = prox_lp_power(&[1.0], 0.5, 4.0).unwrap();
        assert!((y[0] - t).abs() < 1e-4);
        assert!((y[0] - 0.58975).abs() < 1e-4);
        assert!((2.0 * y[0].powi(3) + y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_power_rejects_small_p() {
        assert!(prox_lp_power(&[1.0], 1.0, 1.0).is_err());
        assert!(prox_lp_power(&[1.0], 1.0, f64::NAN).is_err());
    }

    #[test]
    fn h_inverse_hits_tolerance() {
        for &(a, lam, p) in &[(1e-9, 3.0, 1.5), (1e6, 1e-3, 4.0), (0.3, 10.0, 1.1), (5.0, 0.2, 3.0)] {
            let t = h_inverse(a, lam, p);
            assert!((lam * p * t.powf(p - 1.0) + t - a).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn lp_norm_p3_example() {
        // 1-D reduction: minimize ½(t − 2)² + |t| (the ℓ3 norm of (t, 0) is |t|)
        let t = scalar_min(|t| 0.5 * (t - 2.0) * (t - 2.0) + t.abs(), -1.0, 3.0);
        let y = prox_lp_norm(&[2.0, 0.0], 1.0, 3.0).unwrap();
        assert!((y[0] - t).abs() < 1e-6);
        assert!((y[0] - 1.0).abs() < 1e-9);
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn lp_norm_dispatches_closed_forms() {
        let x = [0.4, -1.3, 2.2];
        assert_eq!(prox_lp_norm(&x, 0.7, 1.0).unwrap(), prox_l1(&x, 0.7));
        assert_eq!(prox_lp_norm(&x, 0.7, 2.0).unwrap(), prox_l2(&x, 0.7));
    }

    #[test]
    fn lp_norm_inside_dual_ball_is_zero() {
        // ‖(0.3, 0.3)‖_{3/2} < 1
        let y = prox_lp_norm(&[0.3, 0.3], 1.0, 3.0).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn linf_examples() {
        assert_eq!(prox_linf(&[0.5, -0.3], 1.0).as_slice(), &[0.0, 0.0]);
        for t in [-2.5, -0.5, 0.0, 0.3, 4.0] {
            let y = prox_linf(&[t], 1.0);
            assert!((y[0] - (t.abs() - 1.0).max(0.0) * sign(t)).abs() < 1e-15);
        }
        // KKT of the ℓ1-ball projection: (3,1) at radius 1 projects to (1,0)
        assert_eq!(project_l1_ball(&[3.0, 1.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(prox_linf(&[3.0, 1.0], 1.0).as_slice(), &[2.0, 1.0]);
    }

    #[test]
    fn simplex_projection_kkt() {
        let g = project_simplex(&[0.5, 2.0, -1.0, 0.9], 1.0);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(g.iter().all(|v| *v >= 0.0));
        assert!(close(&g, &[0.0, 1.0, 0.0, 0.0], 1e-15));
        let g = project_simplex(&[1.0, 1.0], 1.0);
        assert!(close(&g, &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn group_examples() {
        let x = [3.0, 4.0, 0.5];
        let all = prox_group_l2(&x, 2.0, std::slice::from_ref(&(0..3))).unwrap();
        assert_eq!(all, prox_l2(&x, 2.0));
        let singles = prox_group_l2(&x, 0.7, &[0..1, 1..2, 2..3]).unwrap();
        assert!(close(&singles, &prox_l1(&x, 0.7), 1e-15));
        let y = prox_group_l2(&x, 2.0, &[0..2, 2..3]).unwrap();
        assert!(close(&y, &[1.8, 2.4, 0.0], 1e-15));
    }

    #[test]
    fn group_partition_errors() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            prox_group_l2(&x, 1.0, &[0..2, 1..3]),
            Err(Error::InvalidGroups(_))
        ));
        assert!(matches!(
            prox_group_l2(&x, 1.0, std::slice::from_ref(&(0..2))),
            Err(Error::InvalidGroups(_))
        ));
        assert!(matches!(
            prox_group_l2(&x, 1.0, &[0..0, 0..3]),
            Err(Error::InvalidGroups(_))
        ));
    }
}

use super::simple::{lp_norm, project_l1_ball, project_simplex};
use super::{PenaltyKind, ProxPenalty};
use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, norm_inf, sign, sub};

/// Distance from x − y to ∂ω(y). Zero exactly when y = prox_ω(x).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SubgradResidual {
    pub value: f64,
}

/// Relative tolerance deciding which coordinates attain ‖y‖_∞.
const LINF_TIE_RTOL: f64 = 1e-12;

/// dist(x − y, ∂ω(y)) in closed form.
///
/// For the ℓp norm (p ∉ {1, 2}) at y = 0 the subdifferential is an ℓq ball
/// with no closed-form projection; the excess (‖x‖_q − γ)₊ is returned
/// instead, which is likewise zero exactly on the ball. OI norms are not
/// supported.
pub fn subgrad_residual(penalty: &ProxPenalty, x: &[f64], y: &[f64]) -> Result<SubgradResidual> {
    check_len("subgradient residual", x.len(), y.len())?;
    let r = sub(x, y);
    let w = penalty.weight();
    let value = if w == 0.0 {
        norm2(&r)
    } else {
        unit_residual_sq(penalty.kind(), w, &r, y)?.sqrt()
    };
    Ok(SubgradResidual { value })
}

fn l1_residual_sq(w: f64, r: &[f64], y: &[f64]) -> f64 {
    r.iter()
        .zip(y)
        .map(|(&ri, &yi)| {
            if yi != 0.0 {
                (ri - w * sign(yi)).powi(2)
            } else {
                (ri.abs() - w).max(0.0).powi(2)
            }
        })
        .sum()
}

fn l2_residual_sq(w: f64, r: &[f64], y: &[f64]) -> f64 {
    let ny = norm2(y);
    if ny > 0.0 {
        r.iter().zip(y).map(|(ri, yi)| (ri - w * yi / ny).powi(2)).sum()
    } else {
        (norm2(r) - w).max(0.0).powi(2)
    }
}

fn unit_residual_sq(kind: &PenaltyKind, w: f64, r: &[f64], y: &[f64]) -> Result<f64> {
    Ok(match kind {
        PenaltyKind::L1 => l1_residual_sq(w, r, y),
        PenaltyKind::L2 => l2_residual_sq(w, r, y),
        PenaltyKind::GroupL2 { groups } => groups
            .iter()
            .map(|g| l2_residual_sq(w, &r[g.clone()], &y[g.clone()]))
            .sum(),
        PenaltyKind::LpPower { p } => r
            .iter()
            .zip(y)
            .map(|(&ri, &yi)| (ri - w * p * yi.abs().powf(p - 1.0) * sign(yi)).powi(2))
            .sum(),
        PenaltyKind::LpNorm { p } if *p == 1.0 => l1_residual_sq(w, r, y),
        PenaltyKind::LpNorm { p } if *p == 2.0 => l2_residual_sq(w, r, y),
        PenaltyKind::LpNorm { p } => {
            let ny = lp_norm(y, *p);
            if ny > 0.0 {
                r.iter()
                    .zip(y)
                    .map(|(&ri, &yi)| (ri - w * (yi.abs() / ny).powf(p - 1.0) * sign(yi)).powi(2))
                    .sum()
            } else {
                let q = p / (p - 1.0);
                (lp_norm(r, q) - w).max(0.0).powi(2)
            }
        }
        PenaltyKind::LInf => {
            let m = norm_inf(y);
            if m == 0.0 {
                let proj = project_l1_ball(r, w);
                r.iter().zip(&proj).map(|(a, b)| (a - b).powi(2)).sum()
            } else {
                let cut = m * (1.0 - LINF_TIE_RTOL);
                let mut acc = 0.0;
                let mut active = Vec::new();
                let mut oriented = Vec::new();
                for (i, (&ri, &yi)) in r.iter().zip(y).enumerate() {
                    if yi.abs() >= cut {
                        active.push(i);
                        oriented.push(ri * sign(yi));
                    } else {
                        acc += ri * ri;
                    }
                }
                let g = project_simplex(&oriented, w);
                acc + oriented.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            }
        }
        PenaltyKind::OiNorm { .. } => {
            return Err(Error::UnsupportedPenalty("subgradient residual of an OI norm".into()))
        }
    })
}

/// Nearest point to `g` in ∂ω(z), treating entries (or blocks) of z with
/// magnitude ≤ `zero_tol` as exactly zero.
pub fn project_onto_subdifferential(penalty: &ProxPenalty, z: &[f64], g: &[f64], zero_tol: f64) -> Result<Vec<f64>> {
    check_len("subdifferential projection", z.len(), g.len())?;
    let w = penalty.weight();
    if w == 0.0 {
        return Ok(vec![0.0; z.len()]);
    }
    let mut out = vec![0.0; z.len()];
    project_unit(penalty.kind(), w, z, g, zero_tol, &mut out)?;
    Ok(out)
}

fn project_l2_block(w: f64, z: &[f64], g: &[f64], zero_tol: f64, out: &mut [f64]) {
    let nz = norm2(z);
    if nz > zero_tol {
        for (o, zi) in out.iter_mut().zip(z) {
            *o = w * zi / nz;
        }
    } else {
        let ng = norm2(g);
        let f = if ng > w { w / ng } else { 1.0 };
        for (o, gi) in out.iter_mut().zip(g) {
            *o = f * gi;
        }
    }
}

fn project_unit(kind: &PenaltyKind, w: f64, z: &[f64], g: &[f64], zero_tol: f64, out: &mut [f64]) -> Result<()> {
    match kind {
        PenaltyKind::L1 => {
            for ((o, &zi), &gi) in out.iter_mut().zip(z).zip(g) {
                *o = if zi.abs() > zero_tol {
                    w * sign(zi)
                } else {
                    gi.clamp(-w, w)
                };
            }
        }
        PenaltyKind::LpNorm { p } if *p == 1.0 => project_unit(&PenaltyKind::L1, w, z, g, zero_tol, out)?,
        PenaltyKind::L2 => project_l2_block(w, z, g, zero_tol, out),
        PenaltyKind::LpNorm { p } if *p == 2.0 => project_l2_block(w, z, g, zero_tol, out),
        PenaltyKind::GroupL2 { groups } => {
            for b in groups {
                project_l2_block(w, &z[b.clone()], &g[b.clone()], zero_tol, &mut out[b.clone()]);
            }
        }
        PenaltyKind::LpPower { p } => {
            for (o, &zi) in out.iter_mut().zip(z) {
                *o = w * p * zi.abs().powf(p - 1.0) * sign(zi);
            }
        }
        PenaltyKind::LInf => {
            let m = norm_inf(z);
            if m <= zero_tol {
                out.copy_from_slice(&project_l1_ball(g, w));
            } else {
                let active: Vec<usize> = (0..z.len()).filter(|&i| z[i].abs() >= m - zero_tol).collect();
                let oriented: Vec<f64> = active.iter().map(|&i| g[i] * sign(z[i])).collect();
                let proj = project_simplex(&oriented, w);
                out.fill(0.0);
                for (&i, v) in active.iter().zip(proj) {
                    out[i] = v * sign(z[i]);
                }
            }
        }
        PenaltyKind::LpNorm { p } => {
            let nz = lp_norm(z, *p);
            if nz <= zero_tol {
                return Err(Error::UnsupportedPenalty(
                    "projection onto an ℓq ball (ℓp norm at zero)".into(),
                ));
            }
            for (o, &zi) in out.iter_mut().zip(z) {
                *o = w * (zi.abs() / nz).powf(p - 1.0) * sign(zi);
            }
        }
        PenaltyKind::OiNorm { .. } => {
            return Err(Error::UnsupportedPenalty(
                "subdifferential projection for an OI norm".into(),
            ))
        }
    }
    Ok(())
}

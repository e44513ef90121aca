use super::spd::SpdOperator;
use crate::error::{check_len, Result};
use crate::linalg::{norm2, power_iteration_extremes, InnerGram, LinearOperator};
use crate::prox::{project_onto_subdifferential, ProxPenalty};

const REFINE_STEPS: usize = 200;

/// Upper bound on dist(x − Q u, Bᵀ ∂ω(B u)), which is zero exactly when u
/// minimizes ½ uᵀQu − xᵀu + ω(Bu).
///
/// The inner minimization over g ∈ ∂ω(Bu) starts from the projection of
/// `multiplier` (for a fixed-point solve, λ·v) and is refined by projected
/// gradient steps. Entries of Bu with magnitude ≤ `zero_tol` are treated as
/// zero when forming ∂ω.
pub fn optimality_residual(
    penalty: &ProxPenalty,
    b: &dyn LinearOperator,
    q: &dyn SpdOperator,
    x: &[f64],
    u: &[f64],
    multiplier: &[f64],
    zero_tol: f64,
) -> Result<f64> {
    check_len("residual x", b.cols(), x.len())?;
    check_len("residual u", b.cols(), u.len())?;
    check_len("residual multiplier", b.rows(), multiplier.len())?;

    let qu = q.apply(u);
    let r: Vec<f64> = x.iter().zip(&qu).map(|(a, c)| a - c).collect();
    if b.rows() == 0 {
        return Ok(norm2(&r));
    }
    let mut z = vec![0.0; b.rows()];
    b.apply_into(u, &mut z);

    let gap = |g: &[f64], bt: &mut Vec<f64>| -> Vec<f64> {
        b.apply_transpose_into(g, bt);
        r.iter().zip(bt.iter()).map(|(a, c)| a - c).collect()
    };

    let mut bt = vec![0.0; b.cols()];
    let mut g = project_onto_subdifferential(penalty, &z, multiplier, zero_tol)?;
    let mut diff = gap(&g, &mut bt);
    let mut best = norm2(&diff);

    let lip = power_iteration_extremes(&InnerGram::new(b), 1e-6, 500, 1)?.lambda_max * 1.1;
    if lip <= 0.0 {
        return Ok(best);
    }
    let mut bd = vec![0.0; b.rows()];
    for _ in 0..REFINE_STEPS {
        if best == 0.0 {
            break;
        }
        // ∇_g ½‖r − Bᵀg‖² = −B(r − Bᵀg)
        b.apply_into(&diff, &mut bd);
        let trial: Vec<f64> = g.iter().zip(&bd).map(|(gi, di)| gi + di / lip).collect();
        g = project_onto_subdifferential(penalty, &z, &trial, zero_tol)?;
        diff = gap(&g, &mut bt);
        best = best.min(norm2(&diff));
    }
    Ok(best)
}

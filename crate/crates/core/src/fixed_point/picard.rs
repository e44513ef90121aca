use crate::error::{Error, Result};
use crate::linalg::DenseVector;

/// Averaged Picard iteration v ← κ·v + (1 − κ)·φ(v).
///
/// For a nonexpansive φ with a fixed point and κ ∈ (0, 1) the iterates
/// converge to a fixed point of φ. κ = 0 is accepted and gives plain Picard
/// iteration, which only converges for contractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOpial {
    pub kappa: f64,
    /// Stop once ‖v_{n+1} − v_n‖₂ ≤ tol.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOpial {
    fn default() -> Self {
        Self {
            kappa: 0.2,
            tol: 1e-10,
            max_iter: 1000,
        }
    }
}

/// Where an averaged Picard run stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointState {
    pub v: DenseVector,
    pub iterations: usize,
    /// ‖v_n − v_{n−1}‖₂ of the last step taken.
    pub final_step_norm: f64,
    /// False when the run ended on `max_iter`.
    pub converged: bool,
}

impl FixedPointState {
    pub fn zeros(m: usize) -> Self {
        Self {
            v: DenseVector::zeros(m),
            iterations: 0,
            final_step_norm: f64::INFINITY,
            converged: false,
        }
    }
}

impl PicardOpial {
    pub fn new(kappa: f64, tol: f64, max_iter: usize) -> Result<Self> {
        let s = Self { kappa, tol, max_iter };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::param("kappa", format!("must lie in [0, 1), got {}", self.kappa)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        Ok(())
    }

    pub fn run<F>(&self, map: F, v0: Vec<f64>) -> Result<FixedPointState>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        self.run_observed(map, v0, |_, _, _| {})
    }

    /// Like [`run`](Self::run), calling `observer(n, v_n, step_norm)` after
    /// every step.
    pub fn run_observed<F, O>(&self, mut map: F, v0: Vec<f64>, mut observer: O) -> Result<FixedPointState>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
        O: FnMut(usize, &[f64], f64),
    {
        self.validate()?;
        let mut v = v0;
        let mut w = vec![0.0; v.len()];
        let mut step = f64::INFINITY;
        let k = self.kappa;
        for n in 1..=self.max_iter {
            map(&v, &mut w)?;
            let mut sq = 0.0;
            for (vi, wi) in v.iter_mut().zip(&w) {
                let next = *vi + (1.0 - k) * (wi - *vi);
                sq += (next - *vi) * (next - *vi);
                *vi = next;
            }
            step = sq.sqrt();
            observer(n, &v, step);
            if step <= self.tol {
                return Ok(FixedPointState {
                    v: v.into(),
                    iterations: n,
                    final_step_norm: step,
                    converged: true,
                });
            }
        }
        Ok(FixedPointState {
            v: v.into(),
            iterations: self.max_iter,
            final_step_norm: step,
            converged: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_in_one_step() {
        let s = PicardOpial::new(0.2, 1e-12, 100).unwrap();
        let st = s
            .run(
                |v, out| {
                    out.copy_from_slice(v);
                    Ok(())
                },
                vec![3.0, -1.0],
            )
            .unwrap();
        assert!(st.converged);
        assert_eq!(st.iterations, 1);
        assert_eq!(st.v.as_slice(), &[3.0, -1.0]);
    }

    #[test]
    fn negation_contracts_by_point_six() {
        let s = PicardOpial::new(0.2, 1e-12, 200).unwrap();
        let mut mags = vec![1.0];
        let st = s
            .run_observed(
                |v, out| {
                    out[0] = -v[0];
                    Ok(())
                },
                vec![1.0],
                |_, v, _| mags.push(v[0].abs()),
            )
            .unwrap();
        assert!(st.converged);
        for (n, m) in mags.iter().enumerate() {
            assert!((m - 0.6f64.powi(n as i32)).abs() <= 1e-13 * 0.6f64.powi(n as i32));
        }
    }

    #[test]
    fn pure_picard_oscillates_on_negation() {
        let s = PicardOpial::new(0.0, 1e-10, 50).unwrap();
        let st = s
            .run(
                |v, out| {
                    out[0] = -v[0];
                    Ok(())
                },
                vec![1.0],
            )
            .unwrap();
        assert!(!st.converged);
        assert_eq!(st.iterations, 50);
        assert_eq!(st.final_step_norm, 2.0);
    }

    #[test]
    fn contraction_reaches_fixed_point() {
        // averaged factor 0.2 + 0.8·0.5 = 0.6; from v0 = 0 the error is 2·0.6ⁿ
        // and the step is 0.8·0.6ⁿ⁻¹, so tol 1e-10 is met once n > 46
        let bound = ((1e-10f64 / 0.8).ln() / 0.6f64.ln()).ceil() as usize + 1;
        assert!(bound <= 60);
        let s = PicardOpial::new(0.2, 1e-10, 60).unwrap();
        let st = s
            .run(
                |v, out| {
                    out[0] = 0.5 * v[0] + 1.0;
                    Ok(())
                },
                vec![0.0],
            )
            .unwrap();
        assert!(st.converged);
        assert!(st.iterations <= bound);
        // geometric tail: error ≤ step·q/(1 − q) with q = 0.6
        let err = (st.v[0] - 2.0).abs();
        assert!(err <= st.final_step_norm * 1.5 + 1e-15);
        assert!(err <= 1.5e-10);
    }

    #[test]
    fn parameter_validation() {
        assert!(PicardOpial::new(1.0, 1e-8, 10).is_err());
        assert!(PicardOpial::new(-0.1, 1e-8, 10).is_err());
        assert!(PicardOpial::new(0.2, 0.0, 10).is_err());
        assert!(PicardOpial::new(0.2, 1e-8, 0).is_err());
    }
}

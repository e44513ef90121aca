use std::time::Instant;

use super::config::{LamRule, SolverConfig};
use super::problem::CompositeProblem;
use super::trace::{SolverTrace, StopReason, TraceEntry};
use crate::error::{Error, Result};
use crate::fixed_point::{check_step, gram_spectrum, FixedPointMap, PicardOpial};
use crate::linalg::{dist2, DenseVector, ScaledIdentity};
use crate::prox::ProxPenalty;

/// θ_1..θ_T and ρ_1..ρ_T (index 0 holds t = 1).
///
/// θ_{t+1} = (−θ_t² + θ_t√(θ_t² + 4))/2 with θ_1 = 1, and
/// ρ_t = 1 − θ_t + θ_t/θ_{t−1}; ρ_1 is set to 1.
pub fn theta_rho_sequence(count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let mut thetas = Vec::with_capacity(count);
    let mut rhos = Vec::with_capacity(count);
    thetas.push(1.0);
    rhos.push(1.0);
    for t in 1..count {
        let prev = thetas[t - 1];
        let next = next_theta(prev);
        thetas.push(next);
        rhos.push(1.0 - next + next / prev);
    }
    Ok((thetas, rhos))
}

fn next_theta(theta: f64) -> f64 {
    let t2 = theta * theta;
    (-t2 + theta * (t2 + 4.0).sqrt()) / 2.0
}

/// prox_{(reg·ω/L)∘B} evaluated through the fixed point of H_t, carrying v
/// between calls.
struct ProxStep<'a> {
    problem: &'a CompositeProblem,
    penalty: ProxPenalty,
    q: ScaledIdentity,
    lam: f64,
    /// λ_max(BBᵀ)/L
    lambda_max: f64,
    picard: PicardOpial,
    exact: bool,
    warm_start: bool,
    v: Option<Vec<f64>>,
    grad: Vec<f64>,
}

struct StepOutcome {
    x: Vec<f64>,
    inner_iters: usize,
    inner_converged: bool,
}

impl<'a> ProxStep<'a> {
    fn new(problem: &'a CompositeProblem, config: &SolverConfig, trace: &mut SolverTrace) -> Result<Self> {
        config.validate()?;
        let l = problem.loss.lipschitz();
        let d = problem.dim();
        let b = problem.b.as_ref();
        let exact = config.exact_prox && b.is_identity();
        let (mu_max, mu_min) = if exact || b.rows() == 0 {
            if exact {
                (1.0, 1.0)
            } else {
                (0.0, 0.0)
            }
        } else {
            let s = gram_spectrum(b, &ScaledIdentity::identity(d), config.spectral_seed)?;
            (s.lambda_max, s.lambda_min)
        };
        trace.gram_max = Some(mu_max);
        trace.gram_min = Some(mu_min);
        let lam = match config.lam {
            LamRule::Auto if mu_max + mu_min > 0.0 => 2.0 * l / (mu_max + mu_min),
            LamRule::Auto => l,
            LamRule::Explicit(lam) => lam,
        };
        let lambda_max = mu_max / l;
        check_step(lam, lambda_max)?;
        trace.lam = lam;
        log::debug!("L = {l:e}, spectrum of BBᵀ in [{mu_min:e}, {mu_max:e}], λ = {lam:e}");
        Ok(Self {
            problem,
            penalty: problem.effective_penalty()?,
            q: ScaledIdentity::spd(d, l)?,
            lam,
            lambda_max,
            picard: config.picard(),
            exact,
            warm_start: config.warm_start,
            v: None,
            grad: vec![0.0; d],
        })
    }

    fn step(&mut self, alpha: &[f64]) -> Result<StepOutcome> {
        let l = self.q.scale;
        self.problem.loss.grad_into(alpha, &mut self.grad);
        if self.exact {
            let point: Vec<f64> = alpha.iter().zip(&self.grad).map(|(a, g)| a - g / l).collect();
            let x = self.penalty.prox(&point, 1.0 / l)?.into_inner();
            return Ok(StepOutcome {
                x,
                inner_iters: 0,
                inner_converged: true,
            });
        }
        // Q = L·I with linear term Lα − ∇f(α)
        let input: Vec<f64> = alpha.iter().zip(&self.grad).map(|(a, g)| l * a - g).collect();
        let map = FixedPointMap::with_lambda_max(
            &self.penalty,
            self.problem.b.as_ref(),
            &self.q,
            &input,
            self.lam,
            self.lambda_max,
        )?;
        let start = if self.warm_start { self.v.as_deref() } else { None };
        let state = map.solve(&self.picard, start)?;
        let x = map.recover(&state.v);
        self.v = Some(state.v.into_inner());
        Ok(StepOutcome {
            x,
            inner_iters: state.iterations,
            inner_converged: state.converged,
        })
    }
}

fn empty_trace(problem: &CompositeProblem) -> SolverTrace {
    let f0 = problem.objective(&vec![0.0; problem.dim()]);
    SolverTrace {
        entries: Vec::new(),
        lipschitz: problem.loss.lipschitz(),
        lam: f64::NAN,
        gram_max: None,
        gram_min: None,
        initial_objective: f0,
        best_objective: f0,
        best_iter: 0,
        inner_cap_hits: 0,
        stop: StopReason::OuterCap,
    }
}

struct Recorder {
    best_x: Vec<f64>,
    clock: Instant,
}

impl Recorder {
    fn record(
        &mut self,
        trace: &mut SolverTrace,
        t: usize,
        x: &[f64],
        prev: &[f64],
        objective: f64,
        out: &StepOutcome,
    ) {
        let now = Instant::now();
        let time_ms = now.duration_since(self.clock).as_secs_f64() * 1e3;
        self.clock = now;
        if !out.inner_converged {
            trace.inner_cap_hits += 1;
            log::warn!(
                "outer iteration {t}: inner loop hit its cap of {} iterations",
                out.inner_iters
            );
        }
        trace.entries.push(TraceEntry {
            iter: t,
            objective,
            inner_iters: out.inner_iters,
            step_norm: dist2(x, prev),
            time_ms,
        });
        if objective < trace.best_objective {
            trace.best_objective = objective;
            trace.best_iter = t;
            self.best_x.copy_from_slice(x);
        }
    }
}

fn reached(config: &SolverConfig, objective: f64) -> bool {
    config.target_objective.is_some_and(|target| objective <= target)
}

/// Proximal gradient with α_t = x_t. Stops when |F(x_t) − F(x_{t−1})| ≤ ε
/// and returns the best iterate.
pub fn solve_proximal(problem: &CompositeProblem, config: &SolverConfig) -> Result<(DenseVector, SolverTrace)> {
    let mut trace = empty_trace(problem);
    let mut prox = ProxStep::new(problem, config, &mut trace)?;
    let d = problem.dim();
    let mut x = vec![0.0; d];
    let mut rec = Recorder {
        best_x: x.clone(),
        clock: Instant::now(),
    };
    let mut last = trace.initial_objective;
    if reached(config, last) {
        trace.stop = StopReason::TargetReached;
        return Ok((x.into(), trace));
    }
    for t in 1..=config.outer_cap {
        let out = prox.step(&x)?;
        let f = problem.objective(&out.x);
        rec.record(&mut trace, t, &out.x, &x, f, &out);
        x = out.x;
        if reached(config, f) {
            trace.stop = StopReason::TargetReached;
            break;
        }
        if config.target_objective.is_none() && (f - last).abs() <= config.epsilon {
            trace.stop = StopReason::Converged;
            break;
        }
        last = f;
    }
    finish(trace, rec.best_x)
}

/// Accelerated proximal gradient with momentum α_{t+1} = ρ_{t+1}x_{t+1} −
/// (ρ_{t+1} − 1)x_t, x_1 = α_1 = 0. Stops when the best objective improved
/// by at most ε over the last `window` iterations.
pub fn solve_accelerated(problem: &CompositeProblem, config: &SolverConfig) -> Result<(DenseVector, SolverTrace)> {
    let mut trace = empty_trace(problem);
    let mut prox = ProxStep::new(problem, config, &mut trace)?;
    let d = problem.dim();
    let mut x_prev = vec![0.0; d];
    let mut alpha = vec![0.0; d];
    let mut theta = 1.0;
    let mut rec = Recorder {
        best_x: x_prev.clone(),
        clock: Instant::now(),
    };
    let mut best_history = vec![trace.initial_objective];
    if reached(config, trace.initial_objective) {
        trace.stop = StopReason::TargetReached;
        return Ok((x_prev.into(), trace));
    }
    for t in 1..=config.outer_cap {
        let out = prox.step(&alpha)?;
        let f = problem.objective(&out.x);
        rec.record(&mut trace, t, &out.x, &x_prev, f, &out);

        let theta_next = next_theta(theta);
        let rho = 1.0 - theta_next + theta_next / theta;
        for ((a, xn), xp) in alpha.iter_mut().zip(&out.x).zip(&x_prev) {
            *a = rho * xn - (rho - 1.0) * xp;
        }
        theta = theta_next;
        x_prev = out.x;

        best_history.push(trace.best_objective);
        if reached(config, f) {
            trace.stop = StopReason::TargetReached;
            break;
        }
        if config.target_objective.is_none() && t >= config.window {
            let improvement = best_history[t - config.window] - trace.best_objective;
            if improvement <= config.epsilon {
                trace.stop = StopReason::Converged;
                break;
            }
        }
    }
    finish(trace, rec.best_x)
}

/// Runs the accelerated or plain solver according to `config.accelerated`.
pub fn solve(problem: &CompositeProblem, config: &SolverConfig) -> Result<(DenseVector, SolverTrace)> {
    if config.accelerated {
        solve_accelerated(problem, config)
    } else {
        solve_proximal(problem, config)
    }
}

fn finish(trace: SolverTrace, best_x: Vec<f64>) -> Result<(DenseVector, SolverTrace)> {
    log::info!(
        "{} outer iterations, best objective {:e} at iteration {}, stop {:?}",
        trace.iterations(),
        trace.best_objective,
        trace.best_iter,
        trace.stop
    );
    Ok((best_x.into(), trace))
}

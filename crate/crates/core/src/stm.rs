//! Similar Triangles Method for `min_q H(q) + R(q)`.
//!
//! Each step finds `α_{k+1} > 0` from `L α² = (A_k + α)(1 + μ A_k)`, evaluates
//! `∇H` once at `y^{k+1} = (α u^k + A_k q^k) / A_{k+1}`, takes a proximal step
//! from `u^k` and re-averages into `q^{k+1}`.

use crate::dual::{lipschitz_constants, DualProblem, DualState, SRegularizer};
use crate::error::{Error, Result};
use crate::problem::PrimalState;
use crate::prox::prox_regularizer;
use crate::recovery::{duality_gap, ErgodicAverage};
use crate::trace::{Clock, SolverTrace, TraceRow};

/// Relative tolerance on the coupling identity `L α² = (A_k + α)(1 + μ A_k)`.
const COUPLING_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StmParams {
    pub lipschitz: f64,
    pub mu: f64,
    pub reg: SRegularizer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StmState {
    pub big_a: f64,
    pub alpha: f64,
    pub q: DualState,
    pub u: DualState,
    pub y: DualState,
    pub k: u64,
}

impl StmState {
    pub fn start(q0: DualState) -> Self {
        StmState {
            big_a: 0.0,
            alpha: 0.0,
            u: q0.clone(),
            y: q0.clone(),
            q: q0,
            k: 0,
        }
    }
}

/// Positive root of `L α² - (1 + μA) α - A (1 + μA) = 0`.
pub fn next_alpha(lipschitz: f64, mu: f64, big_a: f64) -> f64 {
    let c = 1.0 + mu * big_a;
    (c + (c * c + 4.0 * lipschitz * big_a * c).sqrt()) / (2.0 * lipschitz)
}

/// One STM iteration. `grad` is called exactly once, at `y^{k+1}`.
pub fn stm_step(
    state: &StmState,
    params: &StmParams,
    grad: impl FnOnce(&DualState) -> DualState,
) -> Result<StmState> {
    let StmParams { lipschitz, mu, reg } = *params;
    if !(lipschitz > 0.0) || !(mu >= 0.0) {
        return Err(Error::Config(format!("need L > 0 and mu >= 0, got L = {lipschitz}, mu = {mu}")));
    }
    let a_k = state.big_a;
    let alpha = next_alpha(lipschitz, mu, a_k);
    let a_next = a_k + alpha;
    let lhs = lipschitz * alpha * alpha;
    let rhs = a_next * (1.0 + mu * a_k);
    if (lhs - rhs).abs() > COUPLING_RTOL * lhs.abs().max(rhs.abs()) {
        return Err(Error::Numeric(format!("coupling identity broken: {lhs} vs {rhs}")));
    }

    let y = DualState::combine(alpha / a_next, &state.u, a_k / a_next, &state.q);
    let g = grad(&y);
    let gamma = alpha / (1.0 + mu * a_next);
    let mut t = DualState::combine(mu * gamma, &y, 1.0 - mu * gamma, &state.u);
    t.axpy(-gamma, &g);
    let u = prox_regularizer(&t, gamma, &reg)?;
    let q = DualState::combine(alpha / a_next, &u, a_k / a_next, &state.q);
    if !q.is_finite() || !u.is_finite() {
        return Err(Error::Numeric(format!("non-finite STM iterate at step {}", state.k + 1)));
    }
    Ok(StmState {
        big_a: a_next,
        alpha,
        q,
        u,
        y,
        k: state.k + 1,
    })
}

#[derive(Debug, Clone)]
pub struct StmConfig {
    /// Lipschitz estimate; `None` uses `L_H`.
    pub lipschitz: Option<f64>,
    pub mu: f64,
    pub max_iter: u64,
    pub reg: SRegularizer,
    /// Stop once the duality gap estimate falls to this level.
    pub target_gap: Option<f64>,
    /// Stop when the best objective improves by less than `stall_rtol`
    /// (relative) over this many iterations.
    pub stall_window: u64,
    pub stall_rtol: f64,
    /// Record a trace row every this many iterations (the last one always).
    pub record_every: u64,
    pub wall_clock: bool,
    pub start: Option<DualState>,
}

impl StmConfig {
    pub fn new(max_iter: u64, reg: SRegularizer) -> Self {
        StmConfig {
            lipschitz: None,
            mu: 0.0,
            max_iter,
            reg,
            target_gap: None,
            stall_window: 50,
            stall_rtol: 1e-14,
            record_every: 1,
            wall_clock: false,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIter,
    Stalled,
    TargetGap,
}

#[derive(Debug, Clone)]
pub struct StmRun {
    pub q: DualState,
    pub objective: f64,
    pub best_objective: f64,
    pub iterations: u64,
    pub lipschitz: f64,
    pub stop: StopReason,
    pub trace: SolverTrace,
    /// `α`-weighted average of the softmax points at the `y` iterates.
    pub ergodic: Option<PrimalState>,
}

/// Runs STM on the dual of `dp` with one gradient (one communication round)
/// per iteration.
pub fn run_stm(dp: &DualProblem<'_>, cfg: &StmConfig) -> Result<StmRun> {
    let inst = dp.instance();
    let lipschitz = match cfg.lipschitz {
        Some(l) => l,
        None => lipschitz_constants(inst, dp.gossip())?.l_h,
    };
    let params = StmParams { lipschitz, mu: cfg.mu, reg: cfg.reg };
    let q0 = cfg.start.clone().unwrap_or_else(|| DualState::zeros(inst));
    if !cfg.reg.feasible(&q0.s) {
        return Err(Error::Config("starting point violates the s constraint".into()));
    }
    let clock = Clock::new(cfg.wall_clock);
    let every = cfg.record_every.max(1);

    let mut state = StmState::start(q0);
    let mut trace = SolverTrace::new();
    let f0 = dp.objective(&state.q, &cfg.reg)?.as_f64();
    record(&mut trace, dp, &state.q, f0, 0, &clock)?;
    let mut best = f0;
    let mut best_history = vec![f0];
    let mut ergodic = ErgodicAverage::default();
    let mut current = f0;
    let mut stop = StopReason::MaxIter;

    while state.k < cfg.max_iter {
        let mut xhat = None;
        state = stm_step(&state, &params, |y| {
            let eval = dp.evaluate(y);
            xhat = Some(eval.xhat);
            eval.grad
        })?;
        let xhat = xhat.expect("gradient evaluated");
        let y_primal = inst.apply_a(&xhat);
        ergodic.push(&xhat, &y_primal, state.alpha)?;

        current = dp.objective(&state.q, &cfg.reg)?.as_f64();
        if !current.is_finite() {
            return Err(Error::Numeric(format!("objective became {current} at step {}", state.k)));
        }
        if current - f0 > 1e3 * f0.abs().max(1.0) {
            return Err(Error::Numeric(format!(
                "STM diverged: objective {current} vs initial {f0} at step {}",
                state.k
            )));
        }
        best = best.min(current);
        best_history.push(best);

        let last = state.k == cfg.max_iter;
        let mut gap_hit = false;
        if let Some(target) = cfg.target_gap {
            let rep = duality_gap(&state.q, dp)?;
            gap_hit = rep.gap.as_f64() <= target;
        }
        let stalled = state.k >= cfg.stall_window && {
            let old = best_history[(state.k - cfg.stall_window) as usize];
            old - best <= cfg.stall_rtol * best.abs().max(1.0)
        };
        if state.k.is_multiple_of(every) || last || gap_hit || stalled {
            record(&mut trace, dp, &state.q, current, state.k, &clock)?;
        }
        if gap_hit {
            stop = StopReason::TargetGap;
            break;
        }
        if stalled {
            stop = StopReason::Stalled;
            break;
        }
    }

    Ok(StmRun {
        objective: current,
        best_objective: best,
        iterations: state.k,
        q: state.q,
        lipschitz,
        stop,
        trace,
        ergodic: ergodic.current(inst.d()),
    })
}

fn record(
    trace: &mut SolverTrace,
    dp: &DualProblem<'_>,
    q: &DualState,
    objective: f64,
    k: u64,
    clock: &Clock,
) -> Result<()> {
    let rep = duality_gap(q, dp)?;
    trace.push(TraceRow {
        iter: k,
        dual_obj: objective,
        primal_obj: rep.primal_value,
        gap: rep.gap.as_f64(),
        consensus_residual: rep.consensus_residual,
        n_comm: k,
        n_comp: k,
        wall_ms: clock.elapsed_ms(),
    })
}

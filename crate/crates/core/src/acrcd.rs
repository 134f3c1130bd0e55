//! Accelerated randomized block-coordinate descent over the two dual blocks
//! `z` (communication) and `s` (local), for the box-constrained dual of the
//! `p = 1` problem.
//!
//! Coin flips come from `ChaCha8Rng::seed_from_u64(seed)`: one `f64` draw in
//! `[0, 1)` per iteration (rand's standard 53-bit conversion), and the `z`
//! block is chosen when the draw is below `eta`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dual::{DualConstants, DualProblem, DualState, SRegularizer};
use crate::error::{Error, Result};
use crate::problem::PrimalState;
use crate::prox::project_box;
use crate::recovery::{duality_gap, ErgodicAverage};
use crate::trace::{Clock, SolverTrace, TraceRow};

/// Block gradients of the smooth dual part.
pub trait BlockGradient {
    /// `∇_z H(z, s)`; needs one multiplication by `W ⊗ I`.
    fn grad_z(&self, q: &DualState) -> DVector<f64>;
    /// `∇_s H(z, s)`; node-local.
    fn grad_s(&self, q: &DualState) -> DVector<f64>;
}

impl BlockGradient for DualProblem<'_> {
    fn grad_z(&self, q: &DualState) -> DVector<f64> {
        self.grad_z_from(&self.xhat(q))
    }

    fn grad_s(&self, q: &DualState) -> DVector<f64> {
        self.grad_s_from(&self.xhat(q))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcrcdConfig {
    pub l_z: f64,
    pub l_s: f64,
    /// Probability of updating the `z` block.
    pub eta: f64,
    pub max_iter: u64,
    pub seed: u64,
    /// Failure probability used when reporting iteration budgets.
    pub delta: f64,
    /// Evaluate the objective (for best-iterate tracking and the trace) every
    /// this many iterations; the last iteration is always evaluated.
    pub record_every: u64,
    pub wall_clock: bool,
}

impl AcrcdConfig {
    /// Defaults from the block Lipschitz constants; `eta` is the
    /// square-root-proportional sampling probability.
    pub fn from_constants(c: &DualConstants, max_iter: u64, seed: u64) -> Result<Self> {
        let eta_sqrt = c.l_z.sqrt() / (c.l_z.sqrt() + c.l_s.sqrt());
        if (eta_sqrt - c.eta).abs() > 1e-12 {
            return Err(Error::Numeric(format!(
                "eta = {} disagrees with sqrt(L_z)/(sqrt(L_z)+sqrt(L_s)) = {eta_sqrt}",
                c.eta
            )));
        }
        Ok(AcrcdConfig {
            l_z: c.l_z,
            l_s: c.l_s,
            eta: c.eta,
            max_iter,
            seed,
            delta: 0.1,
            record_every: 1,
            wall_clock: false,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.l_z > 0.0 && self.l_s > 0.0) {
            return Err(Error::Config(format!(
                "block constants must be positive, got L_z = {}, L_s = {}",
                self.l_z, self.l_s
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("eta = {} not in [0, 1]", self.eta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcrcdState {
    pub z_bar: DVector<f64>,
    pub z_under: DVector<f64>,
    pub s_bar: DVector<f64>,
    pub s_under: DVector<f64>,
    /// Midpoints of the last step.
    pub z_mid: DVector<f64>,
    pub s_mid: DVector<f64>,
    pub k: u64,
    pub n_comm: u64,
    pub n_comp: u64,
}

impl AcrcdState {
    pub fn start(q0: &DualState) -> Self {
        let s0 = project_box(&q0.s);
        AcrcdState {
            z_bar: q0.z.clone(),
            z_under: q0.z.clone(),
            z_mid: q0.z.clone(),
            s_bar: s0.clone(),
            s_under: s0.clone(),
            s_mid: s0,
            k: 0,
            n_comm: 0,
            n_comp: 0,
        }
    }

    /// The `(z̄, s̄)` output point.
    pub fn output(&self) -> DualState {
        DualState::new(self.z_bar.clone(), self.s_bar.clone())
    }

    pub fn midpoint(&self) -> DualState {
        DualState::new(self.z_mid.clone(), self.s_mid.clone())
    }
}

/// `α_{k+1} = (k + 2) / 8`.
pub fn alpha_coef(k: u64) -> f64 {
    (k as f64 + 2.0) / 8.0
}

/// `τ_k = 2 / (k + 2)`.
pub fn tau_coef(k: u64) -> f64 {
    2.0 / (k as f64 + 2.0)
}

/// One ACRCD iteration. The block that is not sampled keeps its `under`
/// sequence and sets its `bar` point to the midpoint.
pub fn acrcd_step<R: Rng + ?Sized>(
    state: &AcrcdState,
    cfg: &AcrcdConfig,
    rng: &mut R,
    oracle: &impl BlockGradient,
) -> Result<AcrcdState> {
    let k = state.k;
    let tau = tau_coef(k);
    let alpha = alpha_coef(k);
    let z_mid = &state.z_under * tau + &state.z_bar * (1.0 - tau);
    let s_mid = &state.s_under * tau + &state.s_bar * (1.0 - tau);
    let mid = DualState::new(z_mid, s_mid);

    let pick_z = rng.random::<f64>() < cfg.eta;
    let mut next = AcrcdState {
        z_bar: mid.z.clone(),
        z_under: state.z_under.clone(),
        s_bar: mid.s.clone(),
        s_under: state.s_under.clone(),
        z_mid: mid.z.clone(),
        s_mid: mid.s.clone(),
        k: k + 1,
        n_comm: state.n_comm,
        n_comp: state.n_comp,
    };
    if pick_z {
        let g = oracle.grad_z(&mid);
        next.z_bar = &mid.z - &g * (1.0 / cfg.l_z);
        next.z_under = &state.z_under - &g * (2.0 * alpha / cfg.l_z);
        next.n_comm += 1;
    } else {
        let g = oracle.grad_s(&mid);
        next.s_bar = project_box(&(&mid.s - &g * (1.0 / cfg.l_s)));
        next.s_under = project_box(&(&state.s_under - &g * (2.0 * alpha / cfg.l_s)));
        next.n_comp += 1;
    }
    let finite = next
        .z_bar
        .iter()
        .chain(next.z_under.iter())
        .chain(next.s_bar.iter())
        .chain(next.s_under.iter())
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::Numeric(format!("non-finite ACRCD iterate at step {}", k + 1)));
    }
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct AcrcdRun {
    /// Best `(z̄, s̄)` snapshot by dual objective.
    pub best: DualState,
    pub best_objective: f64,
    pub final_state: AcrcdState,
    pub trace: SolverTrace,
    /// Uniform average of the softmax points at the evaluated `(z̄, s̄)`.
    pub ergodic: Option<PrimalState>,
}

/// Runs ACRCD on the constrained dual. Only `p = 1` instances are accepted.
pub fn run_acrcd(dp: &DualProblem<'_>, cfg: &AcrcdConfig) -> Result<AcrcdRun> {
    let inst = dp.instance();
    if inst.p() != 1.0 {
        return Err(Error::Config(format!(
            "ACRCD handles only p = 1 (box-constrained dual); got p = {}. Use STM instead.",
            inst.p()
        )));
    }
    cfg.validate()?;
    let reg = SRegularizer::penalty(0.0, f64::INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clock = Clock::new(cfg.wall_clock);
    let every = cfg.record_every.max(1);

    let mut state = AcrcdState::start(&DualState::zeros(inst));
    let mut trace = SolverTrace::new();
    let mut ergodic = ErgodicAverage::default();
    let first = state.output();
    let mut best_objective = dp.objective(&first, &reg)?.as_f64();
    let mut best = first;
    record(&mut trace, dp, &best, best_objective, &state, &clock)?;

    while state.k < cfg.max_iter {
        state = acrcd_step(&state, cfg, &mut rng, dp)?;
        if state.k.is_multiple_of(every) || state.k == cfg.max_iter {
            let out = state.output();
            let value = dp.objective(&out, &reg)?.as_f64();
            let xhat = dp.xhat(&out);
            let y = inst.apply_a(&xhat);
            ergodic.push(&xhat, &y, 1.0)?;
            record(&mut trace, dp, &out, value, &state, &clock)?;
            if value < best_objective {
                best_objective = value;
                best = out;
            }
        }
    }
    Ok(AcrcdRun {
        best,
        best_objective,
        ergodic: ergodic.current(inst.d()),
        final_state: state,
        trace,
    })
}

fn record(
    trace: &mut SolverTrace,
    dp: &DualProblem<'_>,
    q: &DualState,
    objective: f64,
    state: &AcrcdState,
    clock: &Clock,
) -> Result<()> {
    let rep = duality_gap(q, dp)?;
    trace.push(TraceRow {
        iter: state.k,
        dual_obj: objective,
        primal_obj: rep.primal_value,
        gap: rep.gap.as_f64(),
        consensus_residual: rep.consensus_residual,
        n_comm: state.n_comm,
        n_comp: state.n_comp,
        wall_ms: clock.elapsed_ms(),
    })
}

/// Iteration budget `(√L_z + √L_s) √((R_z² + R_s²) / acc) ln(1/δ)` for
/// dual accuracy `acc`, with the unknown constant taken as one.
pub fn iteration_budget(l_z: f64, l_s: f64, r_z_sq: f64, r_s_sq: f64, dual_accuracy: f64, delta: f64) -> f64 {
    (l_z.sqrt() + l_s.sqrt()) * ((r_z_sq + r_s_sq) / dual_accuracy).sqrt() * (1.0 / delta).ln()
}

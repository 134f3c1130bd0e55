//! Decentralized projected subgradient method on the consensus-penalized
//! primal, used as a reference point for the dual methods.
//!
//! Each node minimizes over its own simplex copy
//!
//! ```text
//! ||A x - b||_p + θ Σ_i <x_i, log x_i> + (ρ/2) xᵀ (W ⊗ I) x
//! ```
//!
//! One gossip product per iteration.

use nalgebra::DVector;

use super::config::StepRule;
use crate::error::{Error, Result};
use crate::network::GossipMatrix;
use crate::problem::{consensus_residual, lp_norm, PrimalState, ProblemInstance};
use crate::recovery::consensual_point;
use crate::trace::{Clock, SolverTrace, TraceRow};

/// Entries are floored here before taking logarithms.
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub x: DVector<f64>,
    pub trace: SolverTrace,
}

/// Euclidean projection onto the probability simplex (sort based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// A subgradient of `||r||_p` at `r`.
fn norm_subgradient(r: &DVector<f64>, p: f64) -> DVector<f64> {
    if p == 1.0 {
        return r.map(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
    }
    let norm = lp_norm(r.as_slice(), p);
    if norm == 0.0 {
        return DVector::zeros(r.len());
    }
    if p.is_infinite() {
        let (k, _) = r.iter().enumerate().fold((0, 0.0), |acc, (k, v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc });
        let mut g = DVector::zeros(r.len());
        g[k] = r[k].signum();
        return g;
    }
    r.map(|v| v.signum() * (v.abs() / norm).powf(p - 1.0))
}

/// Runs `steps` iterations from the uniform point. The trace has no dual
/// information: `dual_obj` and `gap` are `NaN`, `primal_obj` is the
/// distributed objective at the averaged consensual point.
pub fn subgradient_baseline(
    inst: &ProblemInstance,
    gossip: &GossipMatrix,
    steps: u64,
    rule: StepRule,
    rho: f64,
) -> Result<BaselineRun> {
    if gossip.m() != inst.m() {
        return Err(Error::Dimension { expected: inst.m(), got: gossip.m() });
    }
    if !(rho >= 0.0) {
        return Err(Error::Config(format!("consensus penalty rho = {rho} must be >= 0")));
    }
    let (m, d) = (inst.m(), inst.d());
    let b = inst.stacked_b();
    let lifted = gossip.lift(d);
    let clock = Clock::new(false);
    let mut x = DVector::from_element(m * d, 1.0 / d as f64);
    let mut trace = SolverTrace::new();
    record(&mut trace, inst, gossip, &x, 0, &clock)?;

    for k in 1..=steps {
        let h = rule.at(k - 1);
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("step size {h} at iteration {k} is invalid")));
        }
        let r = inst.apply_a(&x) - &b;
        let mut g = inst.apply_at(&norm_subgradient(&r, inst.p()));
        let wx = lifted.apply(&x);
        g.axpy(rho, &wx, 1.0);
        for (gi, &xi) in g.iter_mut().zip(x.iter()) {
            *gi += inst.theta() * (xi.max(LOG_FLOOR).ln() + 1.0);
        }
        if h > 0.0 {
            let stepped = &x - h * g;
            for (blk, out) in stepped.as_slice().chunks(d).zip(x.as_mut_slice().chunks_mut(d)) {
                out.copy_from_slice(&project_simplex(blk));
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!("subgradient iterate became non-finite at step {k}")));
        }
        record(&mut trace, inst, gossip, &x, k, &clock)?;
    }
    Ok(BaselineRun { x, trace })
}

fn record(
    trace: &mut SolverTrace,
    inst: &ProblemInstance,
    gossip: &GossipMatrix,
    x: &DVector<f64>,
    k: u64,
    clock: &Clock,
) -> Result<()> {
    let state = PrimalState::new(x.clone(), inst.apply_a(x), inst.d());
    let xbar = consensual_point(&state);
    let primal = inst.distributed_objective(&PrimalState::consensual(inst, &xbar))?;
    trace.push(TraceRow {
        iter: k,
        dual_obj: f64::NAN,
        primal_obj: primal,
        gap: f64::NAN,
        consensus_residual: consensus_residual(gossip, x),
        n_comm: k,
        n_comp: k,
        wall_ms: clock.elapsed_ms(),
    })
}

//! Primal recovery and duality-gap diagnostics.

use nalgebra::DVector;

use crate::dual::{conj_f, conj_g, DualProblem, DualState, Objective};
use crate::error::{Error, Result};
use crate::problem::{consensus_residual, PrimalState};

/// Primal value at the recovered consensual point against the Lagrange dual
/// function `Φ(z, s) = -F*(s) - G*(-(W ⊗ I) z - Aᵀ s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// Distributed objective at `1 ⊗ x̄`.
    pub primal_value: f64,
    /// `Φ(z, s)`; `None` when `s` is outside the dual-norm ball (`Φ = -∞`).
    pub dual_value: Option<f64>,
    /// `primal_value - dual_value`, infinite when `Φ = -∞`.
    pub gap: Objective,
    /// `||(W ⊗ I) x||` of the recovered local copies.
    pub consensus_residual: f64,
    /// `||y - A x||` of the recovered state.
    pub y_residual: f64,
}

/// `x_i = softmax(-[(W ⊗ I) z + Aᵀ s]_i / θ)` on every node and `y = A x`.
pub fn primal_from_dual(q: &DualState, dp: &DualProblem<'_>) -> PrimalState {
    let x = dp.xhat(q);
    let y = dp.instance().apply_a(&x);
    PrimalState::new(x, y, dp.instance().d())
}

/// Mean of the local copies, renormalized onto the simplex.
pub fn consensual_point(state: &PrimalState) -> DVector<f64> {
    renormalize(state.mean_block())
}

fn renormalize(mut x: DVector<f64>) -> DVector<f64> {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let total = x.sum();
    x / total
}

/// Weighted average of primal snapshots; each block is renormalized onto
/// the simplex afterwards.
pub fn ergodic_average(history: &[PrimalState], weights: &[f64]) -> Result<PrimalState> {
    let first = history
        .first()
        .ok_or_else(|| Error::Numeric("ergodic average of an empty history".into()))?;
    if weights.len() != history.len() {
        return Err(Error::Dimension { expected: history.len(), got: weights.len() });
    }
    let mut acc = ErgodicAverage::default();
    for (state, &w) in history.iter().zip(weights) {
        acc.push(&state.x, &state.y, w)?;
    }
    acc.current(first.x.len() / first.num_blocks())
        .ok_or_else(|| Error::Numeric("weights sum to zero".into()))
}

/// Running weighted average of `(x, y)` pairs.
#[derive(Debug, Clone, Default)]
pub struct ErgodicAverage {
    x: Option<DVector<f64>>,
    y: Option<DVector<f64>>,
    weight: f64,
}

impl ErgodicAverage {
    pub fn push(&mut self, x: &DVector<f64>, y: &DVector<f64>, w: f64) -> Result<()> {
        if !(w > 0.0) {
            return Err(Error::Numeric(format!("averaging weight {w} must be positive")));
        }
        match (&mut self.x, &mut self.y) {
            (Some(sx), Some(sy)) => {
                sx.axpy(w, x, 1.0);
                sy.axpy(w, y, 1.0);
            }
            _ => {
                self.x = Some(x * w);
                self.y = Some(y * w);
            }
        }
        self.weight += w;
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.weight
    }

    pub fn current(&self, d: usize) -> Option<PrimalState> {
        let (x, y) = (self.x.as_ref()?, self.y.as_ref()?);
        let mut x = x / self.weight;
        for blk in x.as_mut_slice().chunks_mut(d) {
            let total: f64 = blk.iter().map(|v| v.max(0.0)).sum();
            blk.iter_mut().for_each(|v| *v = v.max(0.0) / total);
        }
        Some(PrimalState::new(x, y / self.weight, d))
    }
}

/// `Φ(z, s)`, or `None` for `-∞`.
pub fn dual_function(q: &DualState, dp: &DualProblem<'_>) -> Option<f64> {
    let inst = dp.instance();
    let fstar = conj_f(&q.s, inst).finite()?;
    let t = dp.bq(q);
    let gstar: f64 = t
        .as_slice()
        .chunks(inst.d())
        .map(|blk| conj_g(blk, inst.theta()))
        .sum();
    Some(-fstar - gstar)
}

/// Gap between the primal value at the recovered consensual point and the
/// dual function at `q`.
pub fn duality_gap(q: &DualState, dp: &DualProblem<'_>) -> Result<GapReport> {
    let recovered = primal_from_dual(q, dp);
    gap_for(q, &recovered, dp)
}

/// Same as [`duality_gap`] but with a caller-supplied primal state (for
/// example an ergodic average).
pub fn gap_for(q: &DualState, primal: &PrimalState, dp: &DualProblem<'_>) -> Result<GapReport> {
    let inst = dp.instance();
    let xbar = consensual_point(primal);
    let primal_value = inst.distributed_objective(&PrimalState::consensual(inst, &xbar))?;
    let dual_value = dual_function(q, dp);
    let gap = match dual_value {
        Some(phi) => Objective::Finite(primal_value - phi),
        None => Objective::Infinite,
    };
    Ok(GapReport {
        primal_value,
        dual_value,
        gap,
        consensus_residual: consensus_residual(dp.gossip(), &primal.x),
        y_residual: (&primal.y - inst.apply_a(&primal.x)).norm(),
    })
}

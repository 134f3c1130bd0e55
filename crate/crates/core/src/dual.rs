//! Conjugates, the smooth dual objective and its constants.
//!
//! With `B = (-W ⊗ I_d, -Aᵀ)` and `q = col[z, s]` the dual to minimize is
//!
//! ```text
//! H(z, s) = <s, b> + Σ_i θ log 1ᵀ exp(-(1/θ) [(W ⊗ I) z + Aᵀ s]_i)
//! ```
//!
//! plus a composite term on `s` (see [`SRegularizer`]).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::network::{kron_apply, GossipMatrix};
use crate::problem::{lp_norm, DataConstants, ProblemInstance};

/// Slack allowed on `||s||_q <= 1` before a point counts as infeasible.
pub const BALL_SLACK: f64 = 1e-9;

/// Objective value that may be `+∞` (indicator of a violated constraint).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Finite(f64),
    Infinite,
}

impl Objective {
    pub fn is_finite(self) -> bool {
        matches!(self, Objective::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Objective::Finite(v) => Some(v),
            Objective::Infinite => None,
        }
    }

    /// `f64` view, mapping the infinite marker to `+∞`.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// Stacked dual variable `q = col[z, s]`, `z ∈ R^{md}`, `s ∈ R^{mn}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub z: DVector<f64>,
    pub s: DVector<f64>,
}

impl DualState {
    pub fn new(z: DVector<f64>, s: DVector<f64>) -> Self {
        DualState { z, s }
    }

    pub fn zeros(inst: &ProblemInstance) -> Self {
        DualState {
            z: DVector::zeros(inst.m() * inst.d()),
            s: DVector::zeros(inst.m() * inst.n()),
        }
    }

    pub fn dot(&self, other: &DualState) -> f64 {
        self.z.dot(&other.z) + self.s.dot(&other.s)
    }

    pub fn norm_squared(&self) -> f64 {
        self.z.norm_squared() + self.s.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `a * x + b * y`.
    pub fn combine(a: f64, x: &DualState, b: f64, y: &DualState) -> DualState {
        DualState {
            z: &x.z * a + &y.z * b,
            s: &x.s * a + &y.s * b,
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &DualState) {
        self.z.axpy(a, &other.z, 1.0);
        self.s.axpy(a, &other.s, 1.0);
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().chain(self.s.iter()).all(|v| v.is_finite())
    }
}

/// `F*(t) = <t, b>` if `||t||_q <= 1`, else `+∞`.
pub fn conj_f(t: &DVector<f64>, inst: &ProblemInstance) -> Objective {
    if lp_norm(t.as_slice(), inst.q()) <= 1.0 + BALL_SLACK {
        Objective::Finite(t.dot(&inst.stacked_b()))
    } else {
        Objective::Infinite
    }
}

/// `g*(t) = θ log 1ᵀ exp(t/θ)` in max-shifted form.
pub fn conj_g(t: &[f64], theta: f64) -> f64 {
    let tmax = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = t.iter().map(|&v| ((v - tmax) / theta).exp()).sum();
    tmax + theta * sum.ln()
}

/// Maximizer of `<t, x> - θ <x, log x>` over the simplex, i.e. `∇g*(t)`.
pub fn softmax_map(t: &[f64], theta: f64) -> DVector<f64> {
    let mut out = DVector::zeros(t.len());
    softmax_into(t, theta, out.as_mut_slice());
    out
}

fn softmax_into(t: &[f64], theta: f64, out: &mut [f64]) {
    let tmax = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(t) {
        *o = ((v - tmax) / theta).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

/// `G*(t) = Σ_i g*(t_i)` over the `d`-blocks of `t`.
pub fn conj_big_g(t: &DVector<f64>, theta: f64, m: usize, d: usize) -> Result<f64> {
    if t.len() != m * d {
        return Err(Error::Dimension { expected: m * d, got: t.len() });
    }
    Ok(t.as_slice().chunks(d).map(|blk| conj_g(blk, theta)).sum())
}

/// Composite term on `s`: `ν ||s||_q^q`, optionally restricted to the unit
/// `q`-ball. For `q = ∞` the term is the indicator of `[-1, 1]^{mn}` and `ν`
/// plays no role.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SRegularizer {
    pub nu: f64,
    pub q: f64,
    pub ball: bool,
}

impl SRegularizer {
    /// Pure penalty `ν ||s||_q^q` with no ball constraint.
    pub fn penalty(nu: f64, q: f64) -> Self {
        SRegularizer { nu, q, ball: false }
    }

    /// `ν ||s||_q^q` plus the indicator of `||s||_q <= 1`.
    pub fn constrained(nu: f64, q: f64) -> Self {
        SRegularizer { nu, q, ball: true }
    }

    pub fn is_box(&self) -> bool {
        self.q.is_infinite()
    }

    /// Whether `s` satisfies the hard constraint, if there is one.
    pub fn feasible(&self, s: &DVector<f64>) -> bool {
        if !(self.ball || self.is_box()) {
            return true;
        }
        lp_norm(s.as_slice(), self.q) <= 1.0 + BALL_SLACK
    }

    pub fn value(&self, s: &DVector<f64>) -> Objective {
        if !self.feasible(s) {
            return Objective::Infinite;
        }
        if self.is_box() || self.nu == 0.0 {
            return Objective::Finite(0.0);
        }
        Objective::Finite(self.nu * s.iter().map(|v| v.abs().powf(self.q)).sum::<f64>())
    }
}

/// The smooth part `H` of the dual together with the data it needs.
#[derive(Debug, Clone)]
pub struct DualProblem<'a> {
    inst: &'a ProblemInstance,
    gossip: &'a GossipMatrix,
    b: DVector<f64>,
}

/// `H`, `∇H` and the softmax point `x̂ = ∇G*(Bq)` at one dual point.
#[derive(Debug, Clone)]
pub struct DualEval {
    pub value: f64,
    pub grad: DualState,
    pub xhat: DVector<f64>,
}

impl<'a> DualProblem<'a> {
    pub fn new(inst: &'a ProblemInstance, gossip: &'a GossipMatrix) -> Result<Self> {
        if gossip.m() != inst.m() {
            return Err(Error::Dimension { expected: inst.m(), got: gossip.m() });
        }
        Ok(DualProblem { inst, gossip, b: inst.stacked_b() })
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.inst
    }

    pub fn gossip(&self) -> &'a GossipMatrix {
        self.gossip
    }

    pub fn stacked_b(&self) -> &DVector<f64> {
        &self.b
    }

    fn check(&self, q: &DualState) {
        assert_eq!(q.z.len(), self.inst.m() * self.inst.d(), "z has wrong length");
        assert_eq!(q.s.len(), self.inst.m() * self.inst.n(), "s has wrong length");
    }

    /// `Bq = -(W ⊗ I) z - Aᵀ s`.
    pub fn bq(&self, q: &DualState) -> DVector<f64> {
        self.check(q);
        -(kron_apply(self.gossip.matrix(), self.inst.d(), &q.z) + self.inst.apply_at(&q.s))
    }

    /// `H(q)`.
    pub fn smooth_value(&self, q: &DualState) -> f64 {
        let t = self.bq(q);
        let d = self.inst.d();
        let theta = self.inst.theta();
        q.s.dot(&self.b) + t.as_slice().chunks(d).map(|blk| conj_g(blk, theta)).sum::<f64>()
    }

    /// Softmax point `x̂_i = softmax(-[(W ⊗ I) z + Aᵀ s]_i / θ)` on every node.
    pub fn xhat(&self, q: &DualState) -> DVector<f64> {
        let t = self.bq(q);
        self.softmax_blocks(&t)
    }

    fn softmax_blocks(&self, t: &DVector<f64>) -> DVector<f64> {
        let d = self.inst.d();
        let theta = self.inst.theta();
        let mut out = DVector::zeros(t.len());
        for (src, dst) in t.as_slice().chunks(d).zip(out.as_mut_slice().chunks_mut(d)) {
            softmax_into(src, theta, dst);
        }
        out
    }

    /// `∇_z H = -(W ⊗ I) x̂`. One communication round.
    pub fn grad_z_from(&self, xhat: &DVector<f64>) -> DVector<f64> {
        -kron_apply(self.gossip.matrix(), self.inst.d(), xhat)
    }

    /// `∇_s H = b - A x̂`. Node-local.
    pub fn grad_s_from(&self, xhat: &DVector<f64>) -> DVector<f64> {
        &self.b - self.inst.apply_a(xhat)
    }

    pub fn gradient(&self, q: &DualState) -> DualState {
        let xhat = self.xhat(q);
        DualState::new(self.grad_z_from(&xhat), self.grad_s_from(&xhat))
    }

    /// Value, gradient and softmax point in one pass.
    pub fn evaluate(&self, q: &DualState) -> DualEval {
        let t = self.bq(q);
        let d = self.inst.d();
        let theta = self.inst.theta();
        let value = q.s.dot(&self.b)
            + t.as_slice().chunks(d).map(|blk| conj_g(blk, theta)).sum::<f64>();
        let xhat = self.softmax_blocks(&t);
        let grad = DualState::new(self.grad_z_from(&xhat), self.grad_s_from(&xhat));
        DualEval { value, grad, xhat }
    }

    /// `H(q) + R(q)`. In box mode (`q = ∞`) a point outside `[-1, 1]^{mn}`
    /// is an error rather than `+∞`.
    pub fn objective(&self, q: &DualState, reg: &SRegularizer) -> Result<Objective> {
        if reg.is_box() && !reg.feasible(&q.s) {
            return Err(Error::DualInfeasible(lp_norm(q.s.as_slice(), f64::INFINITY)));
        }
        Ok(match reg.value(&q.s) {
            Objective::Finite(r) => Objective::Finite(self.smooth_value(q) + r),
            Objective::Infinite => Objective::Infinite,
        })
    }
}

/// Smoothness constants of `H` and the block-sampling probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConstants {
    /// Full-gradient Lipschitz constant `m (σ_max²(𝒜) + σ_max²(W)) / θ`.
    pub l_h: f64,
    /// `√m σ_max²(W) / θ`.
    pub l_z: f64,
    /// `√m σ_max²(𝒜) / θ`.
    pub l_s: f64,
    /// Probability of sampling the `z` block, `λ_max(W) / (λ_max(W) + σ_max(𝒜))`.
    pub eta: f64,
    pub sigma_max_w: f64,
    pub data: DataConstants,
}

pub fn lipschitz_constants(inst: &ProblemInstance, gossip: &GossipMatrix) -> Result<DualConstants> {
    let data = inst.data_constants()?;
    let m = inst.m() as f64;
    let theta = inst.theta();
    // W is symmetric PSD, so its largest singular value is λ_max.
    let sw = gossip.lambda_max();
    let sa = data.sigma_max;
    let l_z = m.sqrt() * sw * sw / theta;
    let l_s = m.sqrt() * sa * sa / theta;
    let eta = sw / (sw + sa);
    let eta_check = l_z.sqrt() / (l_z.sqrt() + l_s.sqrt());
    if (eta - eta_check).abs() > 1e-12 {
        return Err(Error::Numeric(format!(
            "block probability mismatch: {eta} vs {eta_check}"
        )));
    }
    Ok(DualConstants {
        l_h: m * (sa * sa + sw * sw) / theta,
        l_z,
        l_s,
        eta,
        sigma_max_w: sw,
        data,
    })
}

fn log_gap_norm_sq(x_star: &DVector<f64>) -> Result<f64> {
    if let Some(v) = x_star.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::NotInSimplex(format!(
            "dual radius needs a strictly interior point, found entry {v}"
        )));
    }
    Ok(x_star.iter().map(|&v| (v.ln() + 1.0).powi(2)).sum())
}

/// `R²_dual = θ² m ||log x* + 1||² / min(σ_min⁺(𝒜)², λ_min⁺(W)²)`.
pub fn dual_radius(inst: &ProblemInstance, gossip: &GossipMatrix, x_star: &DVector<f64>) -> Result<f64> {
    let data = inst.data_constants()?;
    let theta = inst.theta();
    let num = theta * theta * inst.m() as f64 * log_gap_norm_sq(x_star)?;
    let den = data.sigma_min_plus.powi(2).min(gossip.lambda_min_plus().powi(2));
    Ok(num / den)
}

/// Block radii `(R_z², R_s²)` for dual exponent `q` (`∞` allowed).
pub fn block_radii(
    inst: &ProblemInstance,
    gossip: &GossipMatrix,
    x_star: &DVector<f64>,
    q: f64,
) -> Result<(f64, f64)> {
    if !(q >= 1.0) {
        return Err(Error::Instance(format!("dual exponent q = {q} must be >= 1")));
    }
    let data = inst.data_constants()?;
    let theta = inst.theta();
    let r_s_sq = s_radius_sq(inst.m() * inst.n(), q);
    let num = 2.0 * theta * theta * inst.m() as f64 * log_gap_norm_sq(x_star)?
        + 2.0 * data.sigma_max.powi(2) * r_s_sq;
    Ok((num / gossip.lambda_min_plus().powi(2), r_s_sq))
}

/// `max(1, N^{1 - 2/q})`, equal to `N` for `q = ∞`.
pub fn s_radius_sq(len: usize, q: f64) -> f64 {
    let exponent = if q.is_infinite() { 1.0 } else { 1.0 - 2.0 / q };
    (len as f64).powf(exponent).max(1.0)
}
